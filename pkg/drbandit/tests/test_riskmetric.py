import numpy as np
import pytest

from drbandit.dist import FiniteCdf, bernoulli_instance, mix
from drbandit.errors import (
    ConfigurationError,
    DimensionMismatchError,
    UnsupportedSupportError,
)
from drbandit.riskmetric import (
    ALL_KINDS,
    DistortionKind,
    DistortionSpec,
    choquet,
    dr_upper_bound,
    effective_beta,
    effective_r,
    eval_h,
    mixture_value,
    parse_distortion,
)

GINI = DistortionSpec(DistortionKind.GINI_DEVIATION)
MEAN = DistortionSpec(DistortionKind.RISK_NEUTRAL)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_h_vanishes_at_zero(kind):
    assert eval_h(DistortionSpec(kind), 0.0) == pytest.approx(0.0, abs=1e-15)


def test_eval_h_examples():
    assert eval_h(GINI, 0.5) == pytest.approx(0.25)
    assert eval_h(DistortionSpec(DistortionKind.CVAR, 0.75), 0.1) == pytest.approx(0.4)
    assert eval_h(DistortionSpec(DistortionKind.CVAR, 0.75), 0.9) == pytest.approx(1.0)
    assert eval_h(DistortionSpec(DistortionKind.INTER_ES_RANGE), 0.75) == pytest.approx(0.5)
    assert eval_h(DistortionSpec(DistortionKind.WANG_RIGHT_TAIL), 0.25) == pytest.approx(0.25)


@pytest.mark.parametrize("u", [-0.1, 1.5])
def test_eval_h_rejects_out_of_range(u):
    with pytest.raises(ValueError):
        eval_h(GINI, u)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_bernoulli_closed_form(kind):
    """The riskmetric of Bern(p) is h(p) for every supported kind."""
    spec = DistortionSpec(kind)
    ps = np.concatenate([[0.0, 1.0], np.random.default_rng(7).uniform(size=50)])
    for p in ps:
        arm = bernoulli_instance([p])[0]
        assert abs(choquet(spec, arm) - eval_h(spec, p)) <= 1e-12, f"{kind} at p={p}"


def test_choquet_examples():
    assert choquet(MEAN, FiniteCdf((1.0, 3.0), (0.5, 0.5))) == pytest.approx(2.0)
    assert choquet(GINI, FiniteCdf.point_mass(7.0)) == pytest.approx(0.0)
    assert choquet(MEAN, FiniteCdf.point_mass(7.0)) == pytest.approx(7.0)


def test_choquet_rejects_negative_atoms():
    with pytest.raises(UnsupportedSupportError):
        choquet(MEAN, FiniteCdf((-1.0, 1.0), (0.5, 0.5)))


def test_choquet_ignores_representation():
    split = FiniteCdf.from_atoms([(1.0, 0.25), (3.0, 0.5), (1.0, 0.25), (2.0, 0.0)])
    merged = FiniteCdf((1.0, 3.0), (0.5, 0.5))
    for kind in ALL_KINDS:
        spec = DistortionSpec(kind)
        assert choquet(spec, split) == pytest.approx(choquet(spec, merged), abs=1e-12)


def test_mixture_value_examples():
    for p in (0.1, 0.3, 0.45):
        arms = bernoulli_instance([p, 1 - p])
        assert mixture_value(GINI, [0.5, 0.5], arms) == pytest.approx(0.25)
    arms = bernoulli_instance([0.4, 0.9])
    assert mixture_value(GINI, [0.8, 0.2], arms) == pytest.approx(0.25)
    assert mixture_value(GINI, [1.0, 0.0], arms) == pytest.approx(choquet(GINI, arms[0]))


def test_mixture_value_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        mixture_value(GINI, [0.5, 0.5], bernoulli_instance([0.4]))


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_bernoulli_shortcut_matches_choquet_of_mixture(kind):
    spec = DistortionSpec(kind)
    rng = np.random.default_rng(11)
    for _ in range(20):
        k = int(rng.integers(2, 5))
        arms = bernoulli_instance(rng.uniform(0.05, 0.95, size=k))
        w = rng.dirichlet(np.ones(k))
        direct = choquet(spec, mix(w, arms))
        assert mixture_value(spec, w, arms) == pytest.approx(direct, abs=1e-12)


def test_mixture_value_general_support():
    arms = [
        FiniteCdf((0.0, 2.0), (0.5, 0.5)),
        FiniteCdf((1.0, 2.0), (0.5, 0.5)),
    ]
    # mixture atoms 0@0.25, 1@0.25, 2@0.5
    assert mixture_value(MEAN, [0.5, 0.5], arms) == pytest.approx(1.25)
    assert mixture_value(GINI, [0.5, 0.5], arms) == pytest.approx(0.75 * 0.25 + 0.5 * 0.5)


@pytest.mark.parametrize(
    "spec",
    [
        GINI,
        DistortionSpec(DistortionKind.DUAL_POWER, 2.0),
        DistortionSpec(DistortionKind.QUADRATIC, 0.5),
        DistortionSpec(DistortionKind.CVAR, 0.75),
    ],
)
def test_concave_mixture_dominates_average(spec):
    rng = np.random.default_rng(3)
    for _ in range(50):
        k = int(rng.integers(2, 5))
        arms = bernoulli_instance(rng.uniform(size=k))
        w = rng.dirichlet(np.ones(k))
        average = sum(wi * choquet(spec, a) for wi, a in zip(w, arms))
        assert mixture_value(spec, w, arms) >= average - 1e-12


def test_gini_mixture_beats_every_arm():
    for p in (0.1, 0.2, 0.3, 0.4):
        arms = bernoulli_instance([p, 1 - p])
        solitary = max(choquet(GINI, a) for a in arms)
        assert mixture_value(GINI, [0.5, 0.5], arms) > solitary


@pytest.mark.parametrize(
    "token, q, r, L",
    [
        ("mean", 1.0, 1.0, 1.0),
        ("dualpower:3", 1.0, 1.0, 3.0),
        ("quadratic:0.5", 1.0, 1.0, 1.5),
        ("cvar:0.75", 1.0, 1.0, 4.0),
        ("pht:0.5", 0.5, 0.5, 1.0),
        ("mmd", 1.0, 1.0, 1.0),
        ("ier", 1.0, 1.0, 2.0),
        ("wang", 0.5, 1.0, 1.0),
        ("gini", 1.0, 2.0, 1.0),
    ],
)
def test_holder_metadata(token, q, r, L):
    spec = parse_distortion(token)
    assert spec.holder_q == pytest.approx(q)
    assert spec.holder_r == pytest.approx(r)
    assert spec.holder_L == pytest.approx(L)


def test_peaks():
    assert GINI.peak == pytest.approx(0.5)
    assert parse_distortion("wang").peak == pytest.approx(0.25)
    assert parse_distortion("cvar:0.75").peak == pytest.approx(0.25)
    assert MEAN.peak == pytest.approx(1.0)
    assert GINI.max_h == pytest.approx(0.25)


def test_effective_r_depends_on_straddle():
    assert effective_r(GINI, bernoulli_instance([0.4, 0.9])) == 2.0
    assert effective_r(GINI, bernoulli_instance([0.6, 0.9])) == 1.0
    wang = parse_distortion("wang")
    assert effective_r(wang, bernoulli_instance([0.1, 0.6])) == 1.0
    assert effective_r(wang, bernoulli_instance([0.3, 0.6])) == 0.5


def test_effective_beta_cvar():
    cvar = parse_distortion("cvar:0.75")
    assert effective_beta(cvar, bernoulli_instance([0.1, 0.2])) == 1.0
    assert effective_beta(cvar, bernoulli_instance([0.1, 0.5])) is None
    assert effective_beta(GINI, bernoulli_instance([0.1, 0.5])) is None
    assert effective_beta(MEAN, bernoulli_instance([0.1, 0.5])) == 1.0


def test_dr_upper_bound():
    assert dr_upper_bound(GINI, bernoulli_instance([0.4, 0.9])) == pytest.approx(0.25)
    arms = [FiniteCdf((0.0, 3.0), (0.5, 0.5))]
    assert dr_upper_bound(MEAN, arms) == pytest.approx(3.0)


def test_parse_distortion_tokens():
    assert parse_distortion("gini") == GINI
    assert parse_distortion(" CVaR:0.9 ").param == pytest.approx(0.9)
    assert parse_distortion("dualpower").param == pytest.approx(2.0)
    assert parse_distortion("pht:0.25").token == "pht:0.25"
    assert parse_distortion("ier").token == "ier"


@pytest.mark.parametrize(
    "token",
    ["variance", "dualpower:1.5", "quadratic:2", "cvar:1", "pht:1", "gini:0.3", "ier:0.3", "cvar:x"],
)
def test_parse_distortion_rejects(token):
    with pytest.raises(ConfigurationError):
        parse_distortion(token)


def test_beta_is_unconditional_only_off_cvar():
    assert parse_distortion("cvar:0.75").beta is None
    assert parse_distortion("dualpower:2").beta == 1.0
    assert MEAN.beta == 1.0
    assert GINI.beta is None


def test_plateau_end():
    assert parse_distortion("cvar:0.75").plateau_end == 1.0
    assert GINI.plateau_end == pytest.approx(0.5)
    assert MEAN.plateau_end == 1.0
