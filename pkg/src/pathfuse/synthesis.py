"""Synthetic corpus generation from published source models.

Published campaigns give us fitted coefficients, a distance span, a sample
count and a shadow-fading sigma -- not raw measurements.  This module turns
each source model back into samples: distances drawn across the model's span,
the model's predicted loss, plus Gaussian shadow fading.  On top of that it
can contaminate a distance band with positive Rayleigh-distributed excess
loss (blocker-style outliers) and add ambient small-scale scattering.

Draw-order contract (what makes runs bit-identical for a fixed stream): each
model consumes its distances first, then its noise; the outlier injector
consumes the victim choice first, then the excess magnitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .models import PathLossSample, SourceModel, predict_abg
from .seeding import spawn_children, substream

__all__ = [
    "DISTANCE_SAMPLINGS",
    "NOISE_KINDS",
    "OUTLIER_SIGNS",
    "DEFAULT_OUTLIER_MAGNITUDE_DB",
    "SynthesisSpec",
    "OutlierSpec",
    "sample_rayleigh",
    "synthesize_from_model",
    "synthesize_corpus",
    "inject_outliers",
    "add_scattering_noise",
]

DISTANCE_SAMPLINGS = ("UniformDistance", "UniformLogDistance")
NOISE_KINDS = ("Gaussian",)
OUTLIER_SIGNS = ("Positive",)

#: calibrated so that an OLS refit of a contaminated single-frequency corpus
#: (20% of a 50 m band hit, rho=0.75) lands near the benchmark sigma; see the
#: robust-comparison study.  Value pinned by scripts/calibrate.py.
DEFAULT_OUTLIER_MAGNITUDE_DB = 10.0


@dataclass(frozen=True)
class SynthesisSpec:
    """How to expand source models into samples."""

    points_per_model: int = 200
    distance_sampling: str = "UniformLogDistance"
    noise: str = "Gaussian"
    seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.points_per_model, int) and self.points_per_model >= 1):
            raise ConfigError(
                f"points_per_model must be a positive integer, "
                f"got {self.points_per_model!r}"
            )
        if self.distance_sampling not in DISTANCE_SAMPLINGS:
            raise ConfigError(
                f"distance_sampling must be one of {DISTANCE_SAMPLINGS}, "
                f"got {self.distance_sampling!r}"
            )
        if self.noise not in NOISE_KINDS:
            raise ConfigError(f"noise must be one of {NOISE_KINDS}")


@dataclass(frozen=True)
class OutlierSpec:
    """Blocker-style contamination of a distance band.

    ``band_center=None`` means the linear midpoint of the corpus's distance
    range.  Excess loss per contaminated sample is
    ``magnitude_scale + Rayleigh(rho)`` dB — a fixed blocker loss plus a
    Rayleigh fading term — always added (sign ``Positive``).  A pure
    Rayleigh(0.75) draw is ~1 dB and cannot push a clean 3.6 dB fit anywhere
    near the contaminated benchmark (~4.75 dB), so the blocker offset carries
    the magnitude and the Rayleigh term the spread.
    """

    rho: float = 0.75
    band_width: float = 50.0  # m
    band_center: float | None = None  # m
    contamination_fraction: float = 0.2
    magnitude_scale: float = DEFAULT_OUTLIER_MAGNITUDE_DB
    sign: str = "Positive"
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.rho) and self.rho > 0.0):
            raise ConfigError(f"rho must be > 0, got {self.rho!r}")
        if not (np.isfinite(self.band_width) and self.band_width > 0.0):
            raise ConfigError(f"band_width must be > 0, got {self.band_width!r}")
        if self.band_center is not None and not (
            np.isfinite(self.band_center) and self.band_center > 0.0
        ):
            raise ConfigError(f"band_center must be > 0, got {self.band_center!r}")
        if not 0.0 <= self.contamination_fraction <= 1.0:
            raise ConfigError(
                f"contamination_fraction must be in [0, 1], "
                f"got {self.contamination_fraction!r}"
            )
        if not (np.isfinite(self.magnitude_scale) and self.magnitude_scale >= 0.0):
            raise ConfigError(
                f"magnitude_scale must be >= 0, got {self.magnitude_scale!r}"
            )
        if self.sign not in OUTLIER_SIGNS:
            raise ConfigError(f"sign must be one of {OUTLIER_SIGNS}")


def sample_rayleigh(rho: float, rng: np.random.Generator, size=None):
    """Rayleigh draws via inverse CDF: x = sqrt(-2*rho*ln(1-u)).

    The scale parameter is sqrt(rho), so E[X] = sqrt(pi*rho/2) and
    E[X^2] = 2*rho.  Draws are strictly positive.
    """
    if not (np.isfinite(rho) and rho > 0.0):
        raise ConfigError(f"rho must be > 0, got {rho!r}")
    u = rng.random(size)
    # u == 0.0 would map to exactly zero; redraw those (measure-zero event)
    while np.any(u == 0.0):
        if size is None:
            u = rng.random()
        else:
            zeros = u == 0.0
            u[zeros] = rng.random(int(np.count_nonzero(zeros)))
    x = np.sqrt(-2.0 * rho * np.log1p(-u))
    return float(x) if size is None else x


def _draw_distances(m: SourceModel, spec: SynthesisSpec, rng) -> np.ndarray:
    if spec.distance_sampling == "UniformDistance":
        return rng.uniform(m.dist_min, m.dist_max, spec.points_per_model)
    lo, hi = math.log(m.dist_min), math.log(m.dist_max)
    return np.exp(rng.uniform(lo, hi, spec.points_per_model))


def synthesize_from_model(
    m: SourceModel, spec: SynthesisSpec, rng: np.random.Generator
) -> list[PathLossSample]:
    """Samples for one source model: distances, predicted loss, shadow noise."""
    d = _draw_distances(m, spec, rng)
    noise = rng.normal(0.0, m.sigma, spec.points_per_model)
    y = predict_abg(m.alpha, m.beta, m.gamma, d, m.frequency) + noise
    return [
        PathLossSample(
            distance=float(d[i]),
            frequency=m.frequency,
            path_loss=float(y[i]),
            source_id=m.id,
        )
        for i in range(spec.points_per_model)
    ]


def synthesize_corpus(
    models, spec: SynthesisSpec, rng: np.random.Generator
) -> list[PathLossSample]:
    """Concatenated samples for all models (sorted by id for determinism).

    Each model gets its own child stream, so adding or removing one model
    does not perturb the others' draws.
    """
    ordered = sorted(models, key=lambda m: m.id)
    if len({m.id for m in ordered}) != len(ordered):
        raise ConfigError("source model ids must be unique within a corpus")
    children = spawn_children(rng, len(ordered))
    out: list[PathLossSample] = []
    for m, child in zip(ordered, children):
        out.extend(synthesize_from_model(m, spec, child))
    return out


def inject_outliers(samples, spec: OutlierSpec, rng: np.random.Generator):
    """Contaminate a distance band; returns ``(new_samples, outlier_mask)``.

    The contaminated count is exactly ``round(fraction * in-band count)``;
    victims are a seeded choice among in-band samples.  Untouched samples are
    copied bit-identically, so a zero fraction (or zero in-band samples) is a
    no-op apart from list identity.
    """
    if not samples:
        raise ConfigError("cannot inject outliers into an empty corpus")
    d = np.array([s.distance for s in samples])
    dmin, dmax = float(d.min()), float(d.max())
    center = spec.band_center if spec.band_center is not None else (dmin + dmax) / 2.0
    half = spec.band_width / 2.0
    if center + half < dmin or center - half > dmax:
        raise ConfigError(
            f"outlier band [{center - half:g}, {center + half:g}] m does not "
            f"intersect the corpus distance range [{dmin:g}, {dmax:g}] m"
        )
    in_band = np.nonzero(np.abs(d - center) <= half)[0]
    k = int(round(spec.contamination_fraction * in_band.size))
    mask = np.zeros(len(samples), dtype=bool)
    if k == 0:
        return list(samples), mask
    victims = rng.choice(in_band, size=k, replace=False)
    excess = spec.magnitude_scale + sample_rayleigh(spec.rho, rng, size=k)
    mask[victims] = True
    out = list(samples)
    for idx, e in zip(victims, excess):
        out[idx] = samples[idx].shifted(float(e))
    return out, mask


def add_scattering_noise(samples, scale: float, rho: float, rng: np.random.Generator):
    """Add ambient Rayleigh scattering excess to every sample.

    Models always-present small-scale multipath on top of shadow fading;
    every sample gains ``scale * Rayleigh(rho)`` dB.
    """
    if not (np.isfinite(scale) and scale >= 0.0):
        raise ConfigError(f"scale must be >= 0, got {scale!r}")
    if scale == 0.0:
        return list(samples)
    excess = scale * sample_rayleigh(rho, rng, size=len(samples))
    return [s.shifted(float(excess[i])) for i, s in enumerate(samples)]
