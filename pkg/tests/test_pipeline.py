"""End-to-end fitting pipeline: weights, filtering, gas handling, fits."""

import numpy as np
import pytest

from pathfuse.atmosphere import load_default_table
from pathfuse.errors import ConfigError, DataError, InsufficientDataError
from pathfuse.estimators import RegressorConfig, weighted_rms
from pathfuse.models import PathLossSample, build_design_system
from pathfuse.pipeline import (
    PipelineConfig,
    compute_weights,
    fit_pathloss_model,
    fit_wabg,
)
from pathfuse.seeding import substream
from pathfuse.synthesis import SynthesisSpec, synthesize_corpus, synthesize_from_model

from conftest import make_model

QUIET = 1e-6  # shadow sigma for effectively noiseless corpora (must be > 0)


def quiet_models():
    return [
        make_model(id="low-2ghz", frequency=2.0, sigma=QUIET,
                   alpha=3.2, beta=32.0, gamma=2.1),
        make_model(id="mid-9ghz", frequency=9.0, sigma=QUIET,
                   alpha=3.2, beta=32.0, gamma=2.1),
        make_model(id="high-28ghz", frequency=28.0, sigma=QUIET,
                   alpha=3.2, beta=32.0, gamma=2.1),
    ]


def quiet_corpus(points=40, seed=0):
    return synthesize_corpus(
        quiet_models(), SynthesisSpec(points_per_model=points),
        substream(seed, "pipe"),
    )


# ---------------------------------------------------------------------------
# weighting policies
# ---------------------------------------------------------------------------


def two_group_samples():
    mk = lambda sid, n: [
        PathLossSample(distance=10.0 * (i + 1), frequency=2.0,
                       path_loss=100.0, source_id=sid)
        for i in range(n)
    ]
    return mk("a", 2) + mk("b", 6)


def test_identity_weights_are_flat():
    w = compute_weights(two_group_samples(), "Identity")
    assert w.tolist() == [1.0] * 8


def test_balance_count_equalizes_group_mass():
    w = compute_weights(two_group_samples(), "BalanceCount")
    # per-group total mass equal; overall mean exactly 1
    assert w[:2].sum() == pytest.approx(w[2:].sum(), rel=1e-12)
    assert w.mean() == pytest.approx(1.0, rel=1e-12)
    assert w[0] == pytest.approx(3.0 * w[2], rel=1e-12)  # 1/2 vs 1/6


def test_inverse_variance_prefers_precise_sources():
    sigmas = {"a": 2.0, "b": 4.0}
    w = compute_weights(two_group_samples(), "InverseVariance", sigmas)
    assert w[0] == pytest.approx(4.0 * w[2], rel=1e-12)  # (4/2)^2
    assert w.mean() == pytest.approx(1.0, rel=1e-12)


def test_mixture_combines_count_and_variance():
    sigmas = {"a": 2.0, "b": 4.0}
    w = compute_weights(two_group_samples(), "Mixture", sigmas)
    # ratio (n_b sigma_b^2) / (n_a sigma_a^2) = (6*16)/(2*4) = 12
    assert w[0] == pytest.approx(12.0 * w[2], rel=1e-12)
    assert w.mean() == pytest.approx(1.0, rel=1e-12)


def test_weighting_error_cases():
    samples = two_group_samples()
    with pytest.raises(ConfigError):
        compute_weights(samples, "Magic")
    with pytest.raises(ConfigError):
        compute_weights([], "Identity")
    with pytest.raises(ConfigError):
        compute_weights(samples, "Mixture")  # sigmas required
    with pytest.raises(DataError):
        compute_weights(samples, "Mixture", {"a": 2.0})  # b missing
    with pytest.raises(DataError):
        compute_weights(samples, "Mixture", {"a": 2.0, "b": 0.0})


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def test_pipeline_config_validation():
    with pytest.raises(ConfigError):
        PipelineConfig(order=5)
    with pytest.raises(ConfigError):
        PipelineConfig(weighting="Equal")
    with pytest.raises(ConfigError):
        PipelineConfig(freq_band=(18.0, 2.0))
    with pytest.raises(ConfigError):
        PipelineConfig(residual_multiplier=0.0)
    with pytest.raises(ConfigError):
        PipelineConfig(robust="theil-sen")  # must be a RegressorConfig


# ---------------------------------------------------------------------------
# fitting behaviour
# ---------------------------------------------------------------------------


def test_recovers_planted_surface_from_quiet_corpus():
    cfg = PipelineConfig(order=1, weighting="Identity", robust=None,
                         gas_correction=False)
    model, diag = fit_pathloss_model(quiet_corpus(), cfg)
    named = model.coefficients.named()
    assert named["alpha"] == pytest.approx(3.2, abs=1e-5)
    assert named["beta"] == pytest.approx(32.0, abs=1e-4)
    assert named["gamma"] == pytest.approx(2.1, abs=1e-5)
    assert model.sigma < 1e-4
    assert diag.inlier_mask.all()
    assert model.provenance["n_rejected"] == 0
    assert not model.provenance["rank_deficient"]


def test_band_filter_is_inclusive_and_recorded():
    cfg = PipelineConfig(order=1, weighting="Identity", robust=None,
                         gas_correction=False, freq_band=(2.0, 9.0))
    corpus = quiet_corpus()
    model, _ = fit_pathloss_model(corpus, cfg)
    assert model.provenance["n_in_band"] == 80  # 28 GHz group excluded
    assert model.freq_range == (2.0, 9.0)
    narrow = PipelineConfig(order=1, weighting="Identity", robust=None,
                            gas_correction=False, freq_band=(40.0, 50.0))
    with pytest.raises(InsufficientDataError):
        fit_pathloss_model(corpus, narrow)


def test_robust_filter_rejects_planted_spikes():
    corpus = synthesize_corpus(
        [make_model(id=f"m{f}ghz", frequency=f, sigma=2.0) for f in (2.0, 28.0)],
        SynthesisSpec(points_per_model=100),
        substream(4, "pipe"),
    )
    spiked = list(corpus)
    hit = [5, 40, 77, 120, 166]
    for i in hit:
        spiked[i] = spiked[i].shifted(60.0)
    cfg = PipelineConfig(order=1, weighting="Identity",
                         robust=RegressorConfig(kind="TheilSen"),
                         gas_correction=False, seed=3)
    model, diag = fit_pathloss_model(spiked, cfg)
    assert not diag.inlier_mask[hit].any()
    assert model.provenance["n_rejected"] >= 5
    clean_cfg = PipelineConfig(order=1, weighting="Identity", robust=None,
                               gas_correction=False)
    clean_model, _ = fit_pathloss_model(corpus, clean_cfg)
    assert model.sigma == pytest.approx(clean_model.sigma, abs=0.5)


def test_zero_scatter_groups_are_never_clipped():
    # exact, noiseless samples -> residual spread is degenerate and the
    # filter keeps every group whole rather than slicing at zero width
    m = make_model()
    samples = [
        PathLossSample(distance=d, frequency=m.frequency,
                       path_loss=m.predict(d), source_id=m.id)
        for d in np.linspace(30.0, 200.0, 25)
    ]
    cfg = PipelineConfig(order=1, weighting="Identity",
                         robust=RegressorConfig(kind="TheilSen"),
                         gas_correction=False)
    model, diag = fit_pathloss_model(samples, cfg)
    assert diag.inlier_mask.all()
    assert model.provenance["n_rejected"] == 0


def test_ransac_prefilter_also_works():
    corpus = quiet_corpus(points=30)
    spiked = [s.shifted(50.0) if i in (3, 17) else s for i, s in enumerate(corpus)]
    cfg = PipelineConfig(order=1, weighting="Identity",
                         robust=RegressorConfig(kind="RANSAC"),
                         gas_correction=False, seed=9)
    model, diag = fit_pathloss_model(spiked, cfg)
    assert not diag.inlier_mask[[3, 17]].any()
    assert model.sigma < 0.1


def test_tiny_groups_skip_the_filter():
    corpus = quiet_corpus(points=2)  # below the minimum group size
    cfg = PipelineConfig(order=1, weighting="Identity",
                         robust=RegressorConfig(kind="TheilSen"),
                         gas_correction=False)
    model, diag = fit_pathloss_model(corpus, cfg)
    assert diag.inlier_mask.all()


def test_gas_correction_recovers_surface_under_absorption():
    # samples carry planted surface + true gaseous loss; correction must
    # recover the surface, skipping it must not
    table = load_default_table()
    models = [
        make_model(id=f"m{f}ghz", frequency=f, sigma=QUIET)
        for f in (28.0, 60.0, 73.5)
    ]
    corpus = synthesize_corpus(models, SynthesisSpec(points_per_model=60),
                               substream(21, "pipe"))
    lossy = [
        s.shifted(table.gas_loss(s.distance, s.frequency)) for s in corpus
    ]
    on = PipelineConfig(order=1, weighting="Identity", robust=None,
                        gas_correction=True)
    off = PipelineConfig(order=1, weighting="Identity", robust=None,
                         gas_correction=False)
    with_gas, _ = fit_pathloss_model(lossy, on, gas_table=table)
    named = with_gas.coefficients.named()
    assert named["alpha"] == pytest.approx(3.4, abs=1e-4)
    assert named["beta"] == pytest.approx(20.0, abs=1e-2)
    assert named["gamma"] == pytest.approx(2.0, abs=1e-3)
    assert with_gas.gas_corrected
    raw, _ = fit_pathloss_model(lossy, off)
    assert raw.sigma > 10.0 * max(with_gas.sigma, 1e-9)


def test_two_frequency_quadratic_fit_is_rank_deficient_but_finite():
    corpus = synthesize_corpus(
        [make_model(id=f"m{f}ghz", frequency=f, sigma=QUIET) for f in (2.0, 28.0)],
        SynthesisSpec(points_per_model=50),
        substream(13, "pipe"),
    )
    cfg = PipelineConfig(order=2, weighting="Identity", robust=None,
                         gas_correction=False)
    model, _ = fit_pathloss_model(corpus, cfg)
    assert model.provenance["rank_deficient"]
    assert model.provenance["design_rank"] < 6
    assert np.isfinite(model.coefficients.as_array()).all()
    # predictions at the fitted frequencies still track the planted surface
    for s in corpus[::17]:
        assert model.predict(s.distance, s.frequency) == pytest.approx(
            s.path_loss, abs=1e-3
        )


def test_sigma_is_the_weighted_residual_rms():
    corpus = synthesize_corpus(
        [make_model(id=f"m{f}ghz", frequency=f, sigma=5.0) for f in (2.0, 28.0)],
        SynthesisSpec(points_per_model=80),
        substream(15, "pipe"),
    )
    sigmas = {"m2.0ghz": 5.0, "m28.0ghz": 5.0}
    cfg = PipelineConfig(order=1, weighting="Mixture", robust=None,
                         gas_correction=False)
    model, _ = fit_pathloss_model(corpus, cfg, sigma_by_source=sigmas)
    X, Y, _ = build_design_system(corpus, order=1)
    w = compute_weights(corpus, "Mixture", sigmas)
    resid = Y - X @ model.coefficients.as_array()
    assert model.sigma == pytest.approx(weighted_rms(resid, w), rel=1e-12)


def test_seed_changes_only_randomized_stages():
    corpus = quiet_corpus()
    base = PipelineConfig(order=1, weighting="Identity", robust=None,
                          gas_correction=False, seed=0)
    other = PipelineConfig(order=1, weighting="Identity", robust=None,
                           gas_correction=False, seed=99)
    a, _ = fit_pathloss_model(corpus, base)
    b, _ = fit_pathloss_model(corpus, other)
    # no randomized stage in play: identical output
    assert a.coefficients.values == b.coefficients.values


def test_fit_wabg_is_the_plain_weighted_line_fit():
    corpus = quiet_corpus()
    sigmas = {m.id: m.sigma for m in quiet_models()}
    model = fit_wabg(corpus, "Mixture", sigmas)
    assert model.order == 1
    assert not model.gas_corrected
    assert model.provenance["robust"] is None
    named = model.coefficients.named()
    assert named["alpha"] == pytest.approx(3.2, abs=1e-5)
