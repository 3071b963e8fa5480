"""Core types: published source models, samples, and log-polynomial surfaces.

A path-loss surface over distance d (metres) and carrier frequency f (GHz) is
a polynomial in the decibel-domain coordinates

    Ld = 10*log10(d),   Lf = 10*log10(f)

truncated at total degree 1, 2 or 3.  The order-1 surface is the classic
floating-intercept power-law fit

    P(d, f) = alpha*Ld + beta + gamma*Lf

whose coefficients published measurement campaigns report; orders 2 and 3 add
curvature and distance-frequency interaction terms.

Column convention (shared by every fit and prediction in the package):

    order 1: [Ld, 1, Lf]
    order 2: [Ld, 1, Lf, Ld^2, Ld*Lf, Lf^2]
    order 3: [Ld, 1, Lf, Ld^2, Ld*Lf, Lf^2, Ld^3, Ld^2*Lf, Ld*Lf^2, Lf^3]

``predict`` is implemented as the dot product of ``design_row`` with the
coefficient vector, so the two are consistent by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InsufficientDataError

__all__ = [
    "ENVIRONMENTS",
    "SCENARIOS",
    "DATA_TYPES",
    "ORDER_SIZES",
    "SourceModel",
    "PathLossSample",
    "CoefficientSet",
    "FittedModel",
    "predict_abg",
    "design_row",
    "design_matrix",
    "column_names",
    "coefficient_names",
    "build_design_system",
    "samples_to_arrays",
]

ENVIRONMENTS = frozenset({"NLOS"})
SCENARIOS = frozenset({"UMiSC", "UMiOS", "UMa"})
DATA_TYPES = frozenset({"Measurement", "RayTracing", "Mixed"})

#: number of free coefficients per polynomial order
ORDER_SIZES = {1: 3, 2: 6, 3: 10}

_COEFF_NAMES = {
    1: ("alpha", "beta", "gamma"),
    2: ("alpha", "beta", "gamma", "alpha2", "delta", "gamma2"),
    3: (
        "alpha",
        "beta",
        "gamma",
        "alpha2",
        "delta",
        "gamma2",
        "alpha3",
        "eta",
        "zeta",
        "gamma3",
    ),
}

_COLUMN_NAMES = {
    1: ("Ld", "1", "Lf"),
    2: ("Ld", "1", "Lf", "Ld^2", "Ld*Lf", "Lf^2"),
    3: (
        "Ld",
        "1",
        "Lf",
        "Ld^2",
        "Ld*Lf",
        "Lf^2",
        "Ld^3",
        "Ld^2*Lf",
        "Ld*Lf^2",
        "Lf^3",
    ),
}


def column_names(order: int) -> tuple[str, ...]:
    """Design-column labels for ``order`` (used in error messages/reports)."""
    _check_order(order)
    return _COLUMN_NAMES[order]


def coefficient_names(order: int) -> tuple[str, ...]:
    _check_order(order)
    return _COEFF_NAMES[order]


def _check_order(order: int) -> None:
    if order not in ORDER_SIZES:
        raise ValueError(f"order must be one of {sorted(ORDER_SIZES)}, got {order!r}")


def _check_positive_finite(name: str, value) -> None:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if np.any(arr <= 0.0):
        raise ValueError(f"{name} must be > 0, got {value!r}")


@dataclass(frozen=True)
class SourceModel:
    """A published single-frequency path-loss fit plus its campaign metadata."""

    id: str
    environment: str
    scenario: str
    frequency: float  # GHz
    source: str
    n_points: int
    dist_min: float  # m
    dist_max: float  # m
    data_type: str
    alpha: float
    beta: float  # dB
    gamma: float
    sigma: float  # dB, shadow-fading std of the published fit

    def __post_init__(self):
        if not self.id:
            raise ValueError("id must be non-empty")
        if self.environment not in ENVIRONMENTS:
            raise ValueError(f"unknown environment {self.environment!r}")
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.data_type not in DATA_TYPES:
            raise ValueError(f"unknown data type {self.data_type!r}")
        _check_positive_finite("frequency", self.frequency)
        _check_positive_finite("dist_min", self.dist_min)
        _check_positive_finite("sigma", self.sigma)
        if not np.isfinite([self.alpha, self.beta, self.gamma]).all():
            raise ValueError("alpha/beta/gamma must be finite")
        if not self.dist_min < self.dist_max:
            raise ValueError(
                f"dist_min must be < dist_max, got [{self.dist_min}, {self.dist_max}]"
            )
        if self.n_points < 1:
            raise ValueError(f"n_points must be >= 1, got {self.n_points}")

    def predict(self, d, f=None):
        """Path loss (dB) of this published model at distance d, frequency f.

        ``f`` defaults to the model's own carrier frequency.
        """
        if f is None:
            f = self.frequency
        return predict_abg(self.alpha, self.beta, self.gamma, d, f)


@dataclass(frozen=True)
class PathLossSample:
    """One (distance, frequency, path-loss) observation tagged by source."""

    distance: float  # m
    frequency: float  # GHz
    path_loss: float  # dB
    source_id: str
    weight: float = 1.0

    def __post_init__(self):
        _check_positive_finite("distance", self.distance)
        _check_positive_finite("frequency", self.frequency)
        if not np.isfinite(self.path_loss):
            raise ValueError(f"path_loss must be finite, got {self.path_loss!r}")
        if not (np.isfinite(self.weight) and self.weight >= 0.0):
            raise ValueError(f"weight must be finite and >= 0, got {self.weight!r}")

    def shifted(self, delta_db: float) -> "PathLossSample":
        """Copy with ``delta_db`` added to the path loss."""
        return replace(self, path_loss=self.path_loss + delta_db)


def predict_abg(alpha: float, beta: float, gamma: float, d, f):
    """Order-1 surface: alpha*10*log10(d) + beta + gamma*10*log10(f)."""
    _check_positive_finite("d", d)
    _check_positive_finite("f", f)
    ld = 10.0 * np.log10(d)
    lf = 10.0 * np.log10(f)
    out = alpha * ld + beta + gamma * lf
    return float(out) if np.ndim(d) == 0 and np.ndim(f) == 0 else out


def design_matrix(order: int, d, f) -> np.ndarray:
    """Design rows for distances ``d`` and frequencies ``f`` (broadcastable)."""
    _check_order(order)
    _check_positive_finite("d", d)
    _check_positive_finite("f", f)
    ld, lf = np.broadcast_arrays(
        10.0 * np.log10(np.asarray(d, dtype=float)),
        10.0 * np.log10(np.asarray(f, dtype=float)),
    )
    ld = np.atleast_1d(ld).ravel()
    lf = np.atleast_1d(lf).ravel()
    ones = np.ones_like(ld)
    cols = [ld, ones, lf]
    if order >= 2:
        cols += [ld * ld, ld * lf, lf * lf]
    if order >= 3:
        cols += [ld**3, ld * ld * lf, ld * lf * lf, lf**3]
    return np.column_stack(cols)


def design_row(order: int, d: float, f: float) -> np.ndarray:
    """Single design row; ``dot(design_row(order, d, f), values)`` == predict."""
    return design_matrix(order, d, f)[0]


@dataclass(frozen=True)
class CoefficientSet:
    """Coefficients of one log-polynomial surface, in column order."""

    order: int
    values: tuple

    def __post_init__(self):
        _check_order(self.order)
        vals = tuple(float(v) for v in self.values)
        if len(vals) != ORDER_SIZES[self.order]:
            raise ValueError(
                f"order {self.order} needs {ORDER_SIZES[self.order]} coefficients, "
                f"got {len(vals)}"
            )
        if not np.isfinite(vals).all():
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "values", vals)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def named(self) -> dict:
        return dict(zip(coefficient_names(self.order), self.values))

    def predict(self, d, f):
        """Path loss (dB) at (d, f); exact dot of design row and values."""
        rows = design_matrix(self.order, d, f)
        out = rows @ self.as_array()
        return float(out[0]) if np.ndim(d) == 0 and np.ndim(f) == 0 else out


@dataclass(frozen=True)
class FittedModel:
    """A fitted surface plus everything needed to reuse it honestly."""

    coefficients: CoefficientSet
    sigma: float  # dB, weighted residual std on retained samples
    gas_corrected: bool
    freq_range: tuple  # (GHz, GHz) span of the samples actually fitted
    dist_range: tuple  # (m, m)
    weighting: str = "Identity"
    provenance: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return self.coefficients.order

    def predict(self, d, f):
        return self.coefficients.predict(d, f)

    def covers(self, d: float, f: float) -> bool:
        return (
            self.dist_range[0] <= d <= self.dist_range[1]
            and self.freq_range[0] <= f <= self.freq_range[1]
        )


def samples_to_arrays(samples) -> tuple:
    """Unpack samples into (d, f, y, w, source_ids) numpy arrays."""
    n = len(samples)
    d = np.empty(n)
    f = np.empty(n)
    y = np.empty(n)
    w = np.empty(n)
    ids = np.empty(n, dtype=object)
    for i, s in enumerate(samples):
        d[i] = s.distance
        f[i] = s.frequency
        y[i] = s.path_loss
        w[i] = s.weight
        ids[i] = s.source_id
    return d, f, y, w, ids


def build_design_system(samples, order: int, pin_gamma: float | None = None):
    """Assemble (X, Y, w) for a least-squares fit of ``order``.

    With ``pin_gamma`` set (order 1 only), the frequency slope is fixed at the
    given value: the Lf column is dropped and its contribution moved to the
    response, leaving the two-column system [Ld, 1] -> [alpha, beta].

    Raises InsufficientDataError when there are fewer samples than columns.
    """
    _check_order(order)
    if pin_gamma is not None and order != 1:
        raise ValueError("pin_gamma is only meaningful for order-1 fits")
    d, f, y, w, _ = samples_to_arrays(samples)
    X = design_matrix(order, d, f)
    if pin_gamma is not None:
        y = y - pin_gamma * X[:, 2]
        X = X[:, :2]
    if len(samples) < X.shape[1]:
        raise InsufficientDataError(
            f"{len(samples)} samples cannot determine {X.shape[1]} coefficients"
        )
    return X, y, w
