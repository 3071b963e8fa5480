# Atmospheric gas attenuation: table lookup, per-sample correction, restore.
#
# Millimetre-wave measurements absorb extra loss from oxygen and water-vapour
# resonances (the 60 GHz oxygen complex being the dominant feature).  Fitting
# a smooth surface across frequency bands works better when that non-smooth
# physical term is removed first and added back at prediction time.
#
# The bundled table gives specific attenuation (dB/km) on a fine frequency
# grid at standard surface conditions; lookups interpolate linearly in
# log10(attenuation), which tracks the resonance flanks far better than
# linear interpolation.  Requests outside the tabulated range raise rather
# than extrapolate.

import csv
import os
from dataclasses import dataclass, replace

import numpy as np

from .errors import ContractError, DataError, GasRangeError

__all__ = [
    "GasAttenuationTable",
    "load_default_table",
    "remove_gas_loss",
    "reapply_gas_loss",
    "restore_gas_loss",
]

_DEFAULT_TABLE_FILE = "itu_p676_standard.csv"

# sanity requirements on any loaded table
_REQUIRED_SPAN = (1.0, 100.0)  # GHz the table must cover
_FINE_REGIONS = ((21.0, 24.0), (50.0, 70.0))  # resonance zones
_MAX_FINE_STEP = 0.5  # GHz


@dataclass(frozen=True)
class GasAttenuationTable:
    """Specific gas attenuation vs frequency at fixed surface conditions."""

    freqs_ghz: np.ndarray
    atten_db_per_km: np.ndarray
    conditions: dict

    def __post_init__(self):
        f = np.asarray(self.freqs_ghz, dtype=float)
        a = np.asarray(self.atten_db_per_km, dtype=float)
        if f.ndim != 1 or f.shape != a.shape or f.size < 2:
            raise DataError("attenuation table needs matching 1-D columns")
        if not (np.isfinite(f).all() and np.isfinite(a).all()):
            raise DataError("attenuation table contains non-finite entries")
        if np.any(np.diff(f) <= 0.0):
            raise DataError("table frequencies must be strictly increasing")
        if np.any(a <= 0.0):
            raise DataError("specific attenuation must be positive everywhere")
        if f[0] > _REQUIRED_SPAN[0] or f[-1] < _REQUIRED_SPAN[1]:
            raise DataError(
                f"table covers [{f[0]}, {f[-1]}] GHz; "
                f"needs at least {list(_REQUIRED_SPAN)}"
            )
        for lo, hi in _FINE_REGIONS:
            sel = (f >= lo) & (f <= hi)
            steps = np.diff(f[sel])
            if steps.size == 0 or steps.max() > _MAX_FINE_STEP + 1e-12:
                raise DataError(
                    f"table grid must be <= {_MAX_FINE_STEP} GHz within "
                    f"[{lo}, {hi}] GHz"
                )
        object.__setattr__(self, "freqs_ghz", f)
        object.__setattr__(self, "atten_db_per_km", a)
        object.__setattr__(self, "_log_atten", np.log10(a))

    @classmethod
    def from_csv(cls, path):
        """Load ``freq_ghz,atten_db_per_km`` rows; '#' lines hold conditions."""
        conditions = {}
        freqs, attens = [], []
        try:
            with open(path, newline="") as fh:
                for row in csv.reader(fh):
                    if not row:
                        continue
                    if row[0].lstrip().startswith("#"):
                        text = ",".join(row).lstrip("# ").strip()
                        for token in text.split():
                            if "=" in token:
                                key, _, val = token.partition("=")
                                try:
                                    conditions[key] = float(val)
                                except ValueError:
                                    conditions[key] = val
                        continue
                    if row[0].strip() == "freq_ghz":
                        continue
                    try:
                        freqs.append(float(row[0]))
                        attens.append(float(row[1]))
                    except (ValueError, IndexError) as exc:
                        raise DataError(f"bad table row {row!r} in {path}") from exc
        except OSError as exc:
            raise DataError(f"cannot read attenuation table {path}: {exc}") from exc
        return cls(np.array(freqs), np.array(attens), conditions)

    def specific_attenuation(self, f_ghz):
        """dB/km at ``f_ghz`` (scalar or array); log-linear between nodes."""
        f = np.asarray(f_ghz, dtype=float)
        if not np.all(np.isfinite(f)):
            raise GasRangeError(f"frequency must be finite, got {f_ghz!r}")
        lo, hi = self.freqs_ghz[0], self.freqs_ghz[-1]
        out_of_range = (f < lo) | (f > hi)
        if np.any(out_of_range):
            bad = np.atleast_1d(f)[np.atleast_1d(out_of_range)][0]
            raise GasRangeError(
                f"frequency {bad:g} GHz outside table range [{lo:g}, {hi:g}] GHz"
            )
        out = 10.0 ** np.interp(f, self.freqs_ghz, self._log_atten)
        return float(out) if np.ndim(f_ghz) == 0 else out

    def gas_loss(self, d_m, f_ghz):
        """Total gaseous loss (dB) over a ``d_m``-metre path at ``f_ghz``."""
        d = np.asarray(d_m, dtype=float)
        if not np.all(np.isfinite(d) & (d >= 0.0)):
            raise ValueError(f"distance must be finite and >= 0, got {d_m!r}")
        out = self.specific_attenuation(f_ghz) * d / 1000.0
        return float(out) if np.ndim(d_m) == 0 and np.ndim(f_ghz) == 0 else out


def load_default_table(data_dir=None):
    """Load the bundled table (or the one in PATHFUSE_DATA_DIR, if set)."""
    if data_dir is None:
        data_dir = os.environ.get("PATHFUSE_DATA_DIR")
    if data_dir is not None:
        return GasAttenuationTable.from_csv(
            os.path.join(data_dir, _DEFAULT_TABLE_FILE)
        )
    from importlib import resources

    ref = resources.files("pathfuse").joinpath("data", _DEFAULT_TABLE_FILE)
    with resources.as_file(ref) as path:
        return GasAttenuationTable.from_csv(path)


def _sample_losses(table, samples):
    d = np.array([s.distance for s in samples])
    f = np.array([s.frequency for s in samples])
    lo, hi = table.freqs_ghz[0], table.freqs_ghz[-1]
    bad = np.nonzero((f < lo) | (f > hi))[0]
    if bad.size:
        i = int(bad[0])
        s = samples[i]
        raise GasRangeError(
            f"sample {i} (source {s.source_id!r}): frequency {s.frequency:g} GHz "
            f"outside table range [{lo:g}, {hi:g}] GHz"
        )
    return table.gas_loss(d, f) if len(samples) else np.empty(0)


def remove_gas_loss(table, samples):
    """New sample list with each path loss reduced by its gaseous component.

    Sample order and all other fields are preserved.  A sample whose
    frequency falls outside the table raises GasRangeError naming it.
    """
    g = _sample_losses(table, samples)
    return [replace(s, path_loss=s.path_loss - g[i]) for i, s in enumerate(samples)]


def reapply_gas_loss(table, samples):
    """Exact inverse of :func:`remove_gas_loss` (adds the same loss back)."""
    g = _sample_losses(table, samples)
    return [replace(s, path_loss=s.path_loss + g[i]) for i, s in enumerate(samples)]


def restore_gas_loss(table, model, d_m, f_ghz):
    """Predict total path loss from a gas-corrected model: fit + gas term.

    Only meaningful for models fitted on gas-corrected data; anything else
    raises ContractError (adding gas on top of a raw fit double-counts it).
    """
    if not getattr(model, "gas_corrected", False):
        raise ContractError(
            "restore_gas_loss needs a gas-corrected model; this fit already "
            "includes gaseous loss"
        )
    return model.predict(d_m, f_ghz) + table.gas_loss(d_m, f_ghz)
