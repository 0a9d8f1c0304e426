"""Coefficient vectors, degeneracy verdicts, exact constants, normalizations."""

from fractions import Fraction as F

import numpy as np
import pytest

from triurn import (
    ReplacementRow,
    UrnSpec,
    analyze_spec,
    analyze_structure,
    classify_limits,
    compute_coefficients,
    extend_dummy_zero,
    mean_matrix,
    mean_urn,
    normalization,
    predicted_constants_drawn,
)
from triurn.corpus import build
from triurn.limits import AnalysisError, exact_value
from tests.test_structure import _random_triangular_spec


def coeffs(spec):
    s = analyze_structure(spec)
    return compute_coefficients(s, mean_matrix(spec), spec.activities), s


# ---------------------------------------------------------------------------
# Coefficients


def test_e2_follower_coefficient():
    # alpha < delta: weight gamma/(delta - alpha) on the single leader.
    for delta, gamma, alpha in [(2, 1, 1), (3, 2, 1), (2, 5, -1)]:
        spec = build("E2", delta=delta, gamma=gamma, alpha=alpha)
        table, _ = coeffs(spec)
        assert table.c(1, 0) == F(gamma, delta - alpha)


def test_e2_subleader_coefficient_is_gamma():
    spec = build("E2", delta=2, gamma=3, alpha=2)
    table, _ = coeffs(spec)
    assert table.c(1, 0) == F(3)  # seeded as a1 r12 / kappa
    assert table.chat(1, 0) == F(3, 2)  # one power of the global rate


def test_e3_middle_colour_coefficient():
    spec = build("E3", alpha=3, beta=2, delta=1, sigma=6)
    table, _ = coeffs(spec)
    assert table.c(1, 0) == F(2, 3 - 1)
    assert table.c(1, 2) == 0


def test_e3_tie_hat_coefficient_beta_over_sigma():
    spec = build("E3", alpha=2, beta=3, delta=2, sigma=5)
    table, _ = coeffs(spec)
    assert table.chat(1, 0) == F(3, 5)


def test_eprefk_factorial_chain():
    # Successive level weights carry 1/k! ((1-p)/(alpha+1))**k.
    alpha, p, q = F(1), F(1, 2), 5
    spec = build("Eprefk", q=q, alpha=alpha, p=p)
    table, _ = coeffs(spec)
    ratio = (1 - p) / (alpha + 1)
    fact = 1
    for k in range(q - 1):
        if k:
            fact *= k
        assert table.chat(k, 0) == ratio**k / fact


def test_leaders_have_unit_self_weight():
    rng = np.random.default_rng(5)
    for _ in range(25):
        spec = _random_triangular_spec(rng, int(rng.integers(2, 7)))
        table, s = coeffs(spec)
        for nu in s.roles.leaders:
            assert table.c(nu, nu) == 1


# ---------------------------------------------------------------------------
# Verdicts and exact values


def e2_limits(delta, gamma, alpha):
    return classify_limits(build("E2", delta=delta, gamma=gamma, alpha=alpha))


@pytest.mark.parametrize("delta,gamma,alpha", [(2, 1, 1), (3, 1, 2), (2, 5, -1)])
def test_e2_dominant_white_values(delta, gamma, alpha):
    report = e2_limits(delta, gamma, alpha)
    d, g, a = F(delta), F(gamma), F(alpha)
    assert report[0].verdict.kind == "deterministic_exact"
    assert report[0].verdict.value.coeff == d * (d - a) / (g + d - a)
    assert report[1].verdict.kind == "deterministic_exact"
    assert report[1].verdict.value.coeff == d * g / (g + d - a)


@pytest.mark.parametrize("delta,gamma", [(1, 1), (3, 2)])
def test_e2_tie_values(delta, gamma):
    report = e2_limits(delta, gamma, delta)
    d, g = F(delta), F(gamma)
    assert report[0].verdict.value.coeff == d * d / g
    assert report[1].verdict.value.coeff == d
    assert report[0].discrete.log_pow == -1
    assert report[1].discrete.log_pow == 0


def test_e2_dominant_black_case():
    report = e2_limits(1, 1, 2)
    assert report[0].verdict.kind == "absolutely_continuous"
    assert report[1].verdict.kind == "deterministic_exact"
    assert report[1].verdict.value.coeff == F(2)


def test_classical_urn_limits_are_random():
    report = classify_limits(build("Eclassical"))
    assert all(cl.verdict.kind == "absolutely_continuous" for cl in report.colours)


def test_single_top_leader_forces_deterministic():
    # Whenever exactly one leader attains the global rate, every colour
    # sharing that peak rate has a constant limit.
    rng = np.random.default_rng(17)
    for _ in range(40):
        spec = _random_triangular_spec(rng, int(rng.integers(2, 6)))
        s = analyze_structure(spec)
        e = s.exponents
        top = [nu for nu in s.roles.leaders if e.lam[nu] == e.lam_hat]
        if len(top) != 1 or e.lam_hat <= 0:
            continue
        report = classify_limits(spec, structure=s)
        for i in range(spec.q):
            if e.lam_star[i] == e.lam_hat:
                assert report[i].verdict.kind == "deterministic_exact"


def test_strict_spec_values():
    report = classify_limits(build("Estrict"))
    assert report[0].verdict.value.coeff == 1  # source stays at its start
    assert report[1].verdict.value.coeff == 1  # sink count is exactly n
    assert report[1].discrete.n_pow == 1
    assert report.counter_value.coeff == 1


def test_zero_rate_symbolic_power():
    # Chain of inert additions: kappa/kappa_hat0 powers of the counter limit.
    # From x = (3, 0, 0): X_1 grows like (6/sqrt(3)) sqrt(n), exactly
    # 6 * 3**(-1/2); colour 2 has an integer power and a plain rational value.
    rows = (
        ReplacementRow.point((F(0), F(2), F(0))),
        ReplacementRow.point((F(0), F(0), F(1))),
        ReplacementRow.point((F(0), F(0), F(0))),
    )
    spec = UrnSpec(activities=(F(1), F(1), F(0)), initial=(F(3), F(0), F(0)), rows=rows)
    report = classify_limits(spec)
    e = analyze_structure(spec).exponents
    assert e.lam_hat == 0 and e.kappa_hat0 == 2
    v1 = report[1].verdict.value
    assert (v1.coeff, v1.base, v1.exponent) == (F(6), F(3), F(-1, 2))
    assert report[1].discrete.n_pow == F(1, 2)
    v2 = report[2].verdict.value
    assert v2.base is None and v2.coeff == F(1)  # X_2 tracks n exactly in the limit
    assert report[2].discrete.n_pow == F(1)


def test_extinct_verdict():
    rows = (
        ReplacementRow(((F(1, 4), (F(1),)), (F(3, 4), (F(-1),)))),
    )
    spec = UrnSpec(activities=(F(1),), initial=(F(1),), rows=rows)
    report = classify_limits(spec)
    assert report[0].verdict.kind == "extinct"


def test_possibly_zero_wrapping():
    report = classify_limits(build("Eprefneg"))
    assert report[0].verdict.possibly_zero
    assert report[1].verdict.possibly_zero  # descendant of the risky colour
    assert "minimal subtraction" in report[0].verdict.cause

    report = classify_limits(build("EcX0"))
    assert [cl.verdict.possibly_zero for cl in report.colours] == [True, True, True, False]


def test_a7_failure_attaches_caveats():
    report = classify_limits(build("Eplusminus"))
    assert report.caveats
    assert report[1].verdict.caveats
    assert not report[0].verdict.caveats  # white never touches the critical colour


def test_e2x_same_verdicts_as_mean_urn():
    for alpha in (1, 2, 3):
        random_spec = build("E2X", delta=1, gamma=1, alpha=alpha)
        mean_spec = mean_urn(random_spec)
        ra, rm = classify_limits(random_spec), classify_limits(mean_spec)
        for a, b in zip(ra.colours, rm.colours):
            assert a.verdict.kind == b.verdict.kind
            if a.verdict.value is not None:
                assert a.verdict.value == b.verdict.value
            assert a.discrete == b.discrete and a.continuous == b.continuous


def test_mean_urn_agreement_random_specs():
    rng = np.random.default_rng(29)
    done = 0
    while done < 25:
        spec = _random_triangular_spec(rng, int(rng.integers(2, 6)))
        # Randomize one row into two atoms with the same mean.
        i = int(rng.integers(0, spec.q))
        if spec.activities[i] == 0:
            continue
        vec = spec.rows[i].atoms[0][1]
        up = tuple(v + 1 for v in vec)
        down = tuple(v - (v > 0) * 1 for v in vec)  # stay nonnegative
        mixed = ReplacementRow(((F(1, 2), up), (F(1, 2), tuple(2 * v - u for v, u in zip(vec, up)))))
        if any(x < 0 for _, a in mixed.atoms for x in a):
            continue
        rows = spec.rows[:i] + (mixed,) + spec.rows[i + 1:]
        random_spec = UrnSpec(
            activities=spec.activities, initial=spec.initial, rows=rows
        )
        del down
        ra = classify_limits(random_spec)
        rm = classify_limits(mean_urn(random_spec))
        for a, b in zip(ra.colours, rm.colours):
            assert a.verdict.kind == b.verdict.kind
            if a.verdict.value is not None:
                assert a.verdict.value == b.verdict.value
        done += 1


def test_scaling_covariance():
    # Scaling all replacement vectors and the start by s scales every rate by
    # s, leaves every normalization exponent unchanged, and multiplies every
    # deterministic limit value by s.
    rng = np.random.default_rng(31)
    for _ in range(20):
        spec = _random_triangular_spec(rng, int(rng.integers(2, 6)))
        s = F(3, 2)
        scaled = spec.scaled(s)
        ra, rb = classify_limits(spec), classify_limits(scaled)
        ea = analyze_structure(spec).exponents
        eb = analyze_structure(scaled).exponents
        assert tuple(s * l for l in ea.lam) == eb.lam
        assert ea.kappa == eb.kappa and ea.kappa_hat == eb.kappa_hat
        for a, b in zip(ra.colours, rb.colours):
            assert a.verdict.kind == b.verdict.kind
            assert (a.discrete.n_pow, a.discrete.log_pow) == (
                b.discrete.n_pow, b.discrete.log_pow
            )
            if a.verdict.kind == "deterministic_exact" and a.verdict.value is not None:
                if a.verdict.value.base is None and b.verdict.value.base is None:
                    assert b.verdict.value.coeff == s * a.verdict.value.coeff
                else:
                    ratio = b.verdict.value.as_float() / a.verdict.value.as_float()
                    assert abs(ratio - float(s)) < 1e-12


# ---------------------------------------------------------------------------
# Normalizations and draw-count predictions


def test_normalization_modes_e2_tie():
    s = analyze_structure(build("E2", delta=1, gamma=1, alpha=1))
    disc = normalization(s, 0, "discrete")
    assert (disc.n_pow, disc.log_pow) == (F(1), F(-1))
    cont = normalization(s, 1, "continuous")
    assert (cont.t_pow, cont.exp_rate) == (1, F(1))


def test_normalization_strict_power():
    s = analyze_structure(build("Estrict"))
    disc = normalization(s, 1, "discrete")
    assert disc.n_pow == F(1) and disc.log_pow == 0
    assert disc.flagged  # no log-corrected form exists at zero global rate


def test_drawn_normalization_zero_peak_rate():
    # Active colour with zero peak rate in a growing urn: log power kappa+1.
    rows = (
        ReplacementRow.point((F(0), F(1))),
        ReplacementRow.point((F(0), F(2))),
    )
    spec = UrnSpec(activities=(F(1), F(1)), initial=(F(1), F(1)), rows=rows)
    s = analyze_structure(spec)
    assert s.exponents.lam_star[0] == 0 and s.exponents.lam_hat == 2
    d = normalization(s, 0, "drawn-discrete")
    assert (d.n_pow, d.log_pow) == (F(0), F(1))
    c = normalization(s, 0, "drawn-continuous")
    assert (c.t_pow, c.exp_rate) == (1, F(0))


def test_drawn_normalization_matches_counter_extension():
    # The shortcut formulas agree with recomputing on the extended spec.
    from triurn import extend_dummy_iota

    cases = [
        ("E2", {"delta": 1, "gamma": 1, "alpha": 2}),
        ("E2", {"delta": 1, "gamma": 1, "alpha": 1}),
        ("Eclassical", {}),
        ("Eprefk", {}),
        ("Estrict", {}),
    ]
    for name, kwargs in cases:
        spec = build(name, **kwargs)
        s = analyze_structure(spec)
        for i in range(spec.q):
            if spec.activities[i] == 0:
                continue
            ext = extend_dummy_iota(spec, i)
            se = analyze_structure(ext)
            want = normalization(s, i, "drawn-discrete")
            got = normalization(se, ext.q - 1, "discrete")
            assert (got.n_pow, got.log_pow) == (want.n_pow, want.log_pow), (name, i)


def test_drawn_constants():
    # Dominant-black two-colour urn: draws of black over black balls -> 1/alpha.
    report = classify_limits(build("E2", delta=1, gamma=1, alpha=2))
    assert report[1].drawn_ratio == F(1, 2)
    assert report[1].drawn_constant.coeff == F(1)  # (a/lam*) * alpha = 1
    assert report[0].drawn_ratio == F(1)
    assert report[0].drawn_constant is None  # white's own limit is random

    classical = classify_limits(build("Eclassical", b=2))
    assert classical[0].drawn_ratio == F(1, 2)

    marker = predicted_constants_drawn(build("Eclassical", b=2), 0)
    assert isinstance(marker, str) and "1/2" in marker


def test_drawn_constant_exact_when_deterministic():
    spec = build("E2", delta=2, gamma=1, alpha=1)
    value = predicted_constants_drawn(spec, 1)
    # ratio a2/lam*2 = 1/2 times the exact limit 1.
    assert value.coeff == F(1, 2)


def test_drawn_constant_zero_peak_rate_log_scale():
    # Active colour with zero peak rate in a growing urn: draws scale like
    # log(n)**(kappa+1) with constant a * value / ((kappa+1) * global rate).
    rows = (
        ReplacementRow.point((F(0), F(1))),
        ReplacementRow.point((F(0), F(2))),
    )
    spec = UrnSpec(activities=(F(1), F(1)), initial=(F(1), F(1)), rows=rows)
    report = classify_limits(spec)
    assert report[0].verdict.value.coeff == F(1)   # count stays at its start
    assert report[0].drawn_constant.coeff == F(1, 2)  # 1 / ((0+1) * 2)
    assert (report[0].drawn_discrete.n_pow, report[0].drawn_discrete.log_pow) == (F(0), F(1))


def test_classify_requires_valid_spec():
    rows = (ReplacementRow.point((F(1), F(0))), ReplacementRow.point((F(0), F(1))))
    bad = UrnSpec(activities=(F(1), F(1)), initial=(F(1), F(0)), rows=rows)  # A3 fails
    with pytest.raises(AnalysisError, match="A3"):
        classify_limits(bad)


def test_exact_value_normalization():
    assert exact_value(F(3), F(2), F(2)).coeff == F(12)
    v = exact_value(F(3), F(2), F(1, 2))
    assert (v.coeff, v.base, v.exponent) == (F(3), F(2), F(1, 2))
    assert v.exact_str() == "3*(2)^(1/2)"
    assert abs(v.as_float() - 3 * 2**0.5) < 1e-15


def test_counter_coefficient_known_value():
    # Dominant black: the counter weight against the black leader is 1/alpha;
    # the white leader sits in a lower-rate block, so its weight is zero.
    spec = build("E2", delta=1, gamma=1, alpha=2)
    ext = extend_dummy_zero(spec)
    table, s = coeffs(ext)
    assert table.c(2, 1) == F(1, 2)
    assert table.c(2, 0) == 0
