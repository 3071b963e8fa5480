"""The fusion pipeline: band-filter, gas-correct, de-outlier, weight, fit.

One call takes a mixed corpus (samples from several published models at
several frequencies) and produces a single log-polynomial surface:

1. keep samples inside the requested frequency band (inclusive);
2. optionally subtract gaseous attenuation from each sample;
3. optionally reject outliers: per source group, a robust reference line
   (Theil-Sen by default) gives residuals, and samples beyond
   ``residual_multiplier`` times the group's MAD residual scale are dropped
   -- per-group scales keep a high-variance campaign from being clipped by a
   low-variance one;
4. weight the survivors by the configured policy;
5. weighted least squares on the full design, rank-deficient designs allowed
   (two-frequency corpora make quadratic frequency columns collinear; the
   minimal-norm solution is taken and the deficiency recorded);
6. sigma = weighted residual std over the fitted samples.

Group weighting policies (normalized to mean 1 over the corpus):

* Identity:        every sample weighs the same (pooled fit)
* InverseVariance: 1 / sigma_j^2        (trust precise campaigns more)
* BalanceCount:    1 / n_j              (each campaign contributes equally)
* Mixture:         1 / (n_j * sigma_j^2) (both corrections at once)

where sigma_j is the published shadow-fading std of the sample's source and
n_j the number of samples that source contributed to this fit.
"""

from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

from .atmosphere import load_default_table, remove_gas_loss
from .errors import ConfigError, DataError, InsufficientDataError
from .estimators import (
    RegressorConfig,
    FitDiagnostics,
    fit_ransac,
    fit_theilsen,
    mad_scale,
    solve_wls,
    weighted_rms,
)
from .models import (
    ORDER_SIZES,
    CoefficientSet,
    FittedModel,
    build_design_system,
    column_names,
    samples_to_arrays,
)

__all__ = [
    "WEIGHTING_POLICIES",
    "PipelineConfig",
    "compute_weights",
    "fit_pathloss_model",
    "fit_wabg",
]

WEIGHTING_POLICIES = ("Identity", "InverseVariance", "BalanceCount", "Mixture")

#: a robust residual scale at or below this is treated as "no scatter";
#: filtering is skipped for that group (nothing to reject on noiseless data)
_SCALE_FLOOR = 1e-12

#: groups smaller than this keep all samples (no meaningful scale estimate)
_MIN_GROUP_FOR_FILTER = 3

_table_cache: dict = {}


def _default_table():
    key = os.environ.get("PATHFUSE_DATA_DIR")
    if key not in _table_cache:
        _table_cache[key] = load_default_table()
    return _table_cache[key]


@dataclass(frozen=True)
class PipelineConfig:
    """Everything that determines a pipeline fit, seed included."""

    order: int = 2
    weighting: str = "Mixture"
    robust: RegressorConfig | None = field(
        default_factory=lambda: RegressorConfig(kind="TheilSen")
    )
    gas_correction: bool = True
    freq_band: tuple | None = None  # (GHz, GHz) inclusive; None = keep all
    residual_multiplier: float = 3.0
    per_group_scale: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.order not in ORDER_SIZES:
            raise ConfigError(f"order must be one of {sorted(ORDER_SIZES)}")
        if self.weighting not in WEIGHTING_POLICIES:
            raise ConfigError(
                f"weighting must be one of {WEIGHTING_POLICIES}, "
                f"got {self.weighting!r}"
            )
        if self.robust is not None and not isinstance(self.robust, RegressorConfig):
            raise ConfigError("robust must be a RegressorConfig or None")
        if self.freq_band is not None:
            lo, hi = self.freq_band
            if not (np.isfinite(lo) and np.isfinite(hi) and 0.0 < lo < hi):
                raise ConfigError(f"freq_band must be 0 < lo < hi, got {self.freq_band}")
        if not (
            np.isfinite(self.residual_multiplier) and self.residual_multiplier > 0.0
        ):
            raise ConfigError("residual_multiplier must be > 0")


def compute_weights(samples, policy: str, sigma_by_source=None) -> np.ndarray:
    """Per-sample weights under ``policy``, normalized to mean 1."""
    if policy not in WEIGHTING_POLICIES:
        raise ConfigError(f"unknown weighting policy {policy!r}")
    if not samples:
        raise ConfigError("cannot weight an empty corpus")
    n = len(samples)
    if policy == "Identity":
        return np.ones(n)

    ids = [s.source_id for s in samples]
    counts = Counter(ids)
    if policy in ("InverseVariance", "Mixture"):
        if sigma_by_source is None:
            raise ConfigError(f"{policy} weighting needs per-source sigmas")
        missing = sorted(set(ids) - set(sigma_by_source))
        if missing:
            raise DataError(f"no sigma known for source(s): {', '.join(missing)}")
        for sid in counts:
            s = sigma_by_source[sid]
            if not (np.isfinite(s) and s > 0.0):
                raise DataError(f"sigma for source {sid!r} must be > 0, got {s!r}")

    w = np.empty(n)
    for i, sid in enumerate(ids):
        if policy == "BalanceCount":
            w[i] = 1.0 / counts[sid]
        elif policy == "InverseVariance":
            w[i] = 1.0 / sigma_by_source[sid] ** 2
        else:  # Mixture
            w[i] = 1.0 / (counts[sid] * sigma_by_source[sid] ** 2)
    return w / (w.sum() / n)


def _robust_filter(samples, X, Y, cfg: PipelineConfig):
    """Outlier mask from per-group robust reference lines; True = keep.

    Every source group is single-frequency, so within a group the surface
    (any order) reduces to a polynomial in 10*log10(d) that a straight line
    approximates to well under the noise level across a group's distance
    span.  Fitting the robust reference per group therefore measures exactly
    what contamination violates -- departure from the group's own trend --
    and stays meaningful on corpora whose pooled design is collinear (an
    elemental-subset estimator cannot fit those at all).

    Samples are cut at ``residual_multiplier`` times the group's MAD scale
    about the group's median residual; groups too small for a scale estimate
    and groups with no measurable scatter are kept whole.
    """
    robust = replace(cfg.robust, seed=cfg.seed)
    groups: dict = {}
    for i, s in enumerate(samples):
        groups.setdefault(s.source_id, []).append(i)

    keep = np.ones(len(samples), dtype=bool)
    line_cols = [0, 1]  # the [10*log10(d), 1] columns of every design order
    names = [column_names(cfg.order)[j] for j in line_cols]
    resid = np.full(len(samples), np.nan)
    iterations = 0
    fitted_groups = []
    for sid, ix_list in groups.items():
        ix = np.asarray(ix_list)
        if ix.size < _MIN_GROUP_FOR_FILTER:
            continue
        Xg = X[np.ix_(ix, line_cols)]
        Yg = Y[ix]
        if robust.kind == "RANSAC":
            prefit = fit_ransac(Xg, Yg, robust, column_names=names)
        else:
            prefit = fit_theilsen(Xg, Yg, robust, column_names=names)
        resid[ix] = Yg - Xg @ prefit.coefficients
        iterations += prefit.iterations_used
        fitted_groups.append(ix)

    if cfg.per_group_scale:
        scale_sets = fitted_groups
    else:
        pooled = np.concatenate(fitted_groups) if fitted_groups else np.empty(0, int)
        scale_sets = [pooled] if pooled.size else []
    for ix in scale_sets:
        r = resid[ix]
        med = float(np.median(r))
        scale = mad_scale(r)
        if scale <= _SCALE_FLOOR:
            continue
        keep[ix] = np.abs(r - med) <= cfg.residual_multiplier * scale
    return keep, iterations


def _prepare_system(samples, cfg: PipelineConfig, *, sigma_by_source=None,
                    gas_table=None):
    """Front half of the pipeline, shared with the cross-validation code.

    Band-filters, removes gas loss, applies the robust rejection, and
    computes the sample weights.  Returns
    ``(survivors, X, Y, w, keep_mask, n_in_band, prefit_iters)`` where ``Y``
    is in the (possibly gas-corrected) units the solver sees.
    """
    p = ORDER_SIZES[cfg.order]
    if cfg.freq_band is not None:
        lo, hi = cfg.freq_band
        work = [s for s in samples if lo <= s.frequency <= hi]
    else:
        work = list(samples)
    n_in_band = len(work)
    if n_in_band < p:
        raise InsufficientDataError(
            f"{n_in_band} in-band samples cannot determine {p} coefficients"
        )

    if cfg.gas_correction:
        table = gas_table if gas_table is not None else _default_table()
        work = remove_gas_loss(table, work)

    X, Y, _ = build_design_system(work, cfg.order)

    filtering = cfg.robust is not None and cfg.robust.kind in ("RANSAC", "TheilSen")
    if filtering:
        keep, prefit_iters = _robust_filter(work, X, Y, cfg)
        survivors = [s for s, k in zip(work, keep) if k]
        Xs, Ys = X[keep], Y[keep]
    else:
        keep = np.ones(n_in_band, dtype=bool)
        survivors, Xs, Ys = work, X, Y
        prefit_iters = 0
    if len(survivors) < p:
        raise InsufficientDataError(
            f"only {len(survivors)} samples survive outlier rejection; "
            f"need at least {p}"
        )

    w = compute_weights(survivors, cfg.weighting, sigma_by_source)
    return survivors, Xs, Ys, w, keep, n_in_band, prefit_iters


def fit_pathloss_model(
    samples,
    cfg: PipelineConfig,
    *,
    sigma_by_source=None,
    gas_table=None,
):
    """Run the full pipeline; returns ``(FittedModel, FitDiagnostics)``.

    ``sigma_by_source`` maps source ids to published shadow-fading sigmas and
    is required for the variance-aware weighting policies.  Randomized robust
    prefits draw from ``cfg.seed`` (one-seed policy: the ``robust`` config's
    own seed is overridden).
    """
    p = ORDER_SIZES[cfg.order]
    survivors, Xs, Ys, w, keep, n_in_band, prefit_iters = _prepare_system(
        samples, cfg, sigma_by_source=sigma_by_source, gas_table=gas_table
    )
    filtering = cfg.robust is not None and cfg.robust.kind in ("RANSAC", "TheilSen")
    coeffs, info = solve_wls(
        Xs,
        Ys,
        w,
        allow_rank_deficient=True,
        column_names=column_names(cfg.order),
        return_info=True,
    )
    resid = Ys - Xs @ coeffs
    sigma = weighted_rms(resid, w)

    d, f, *_ = samples_to_arrays(survivors)
    model = FittedModel(
        coefficients=CoefficientSet(cfg.order, tuple(coeffs)),
        sigma=sigma,
        gas_corrected=cfg.gas_correction,
        freq_range=(float(f.min()), float(f.max())),
        dist_range=(float(d.min()), float(d.max())),
        weighting=cfg.weighting,
        provenance={
            "order": cfg.order,
            "weighting": cfg.weighting,
            "gas_correction": cfg.gas_correction,
            "freq_band": list(cfg.freq_band) if cfg.freq_band else None,
            "robust": cfg.robust.kind if filtering else None,
            "residual_multiplier": cfg.residual_multiplier if filtering else None,
            "per_group_scale": cfg.per_group_scale if filtering else None,
            "seed": cfg.seed,
            "n_input": len(samples),
            "n_in_band": n_in_band,
            "n_rejected": int(n_in_band - len(survivors)),
            "n_fitted": len(survivors),
            "design_rank": info["rank"],
            "rank_deficient": info["rank"] < p,
            "condition": info["condition"],
        },
    )
    diagnostics = FitDiagnostics(
        coefficients=coeffs,
        inlier_mask=keep,
        residual_wsd=sigma,
        condition_estimate=info["condition"],
        iterations_used=prefit_iters + 1,
    )
    return model, diagnostics


def fit_wabg(samples, policy: str = "Mixture", sigma_by_source=None) -> FittedModel:
    """Plain weighted order-1 fit: no band filter, no gas, no rejection."""
    cfg = PipelineConfig(
        order=1,
        weighting=policy,
        robust=None,
        gas_correction=False,
        freq_band=None,
    )
    model, _ = fit_pathloss_model(samples, cfg, sigma_by_source=sigma_by_source)
    return model
