import itertools
import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special, stats

from lc_commune import theory
from lc_commune.genmodel import OmegaLaw, preset_spec
from lc_commune.theory import (Decision, DegenerateParameterError, LikelihoodRatioMC, RateConfig,
                               TestCounts, bayes_risk, edge_count_test, misclustering_loss,
                               misclustering_loss_bruteforce, pq_at, rate_bounds, renyi_half, rho,
                               simulate_test_counts)

SPEC1 = preset_spec("spec1", tau=0.5)
SMALL = dict(outer_samples=4000, inner_samples=256)


# --- loss --------------------------------------------------------------------

def test_loss_examples():
    assert misclustering_loss([1, 2, 1, 2], [1, 2, 1, 2]) == 0.0
    assert misclustering_loss([1, 1, 2, 2], [2, 2, 1, 1]) == 0.0
    assert misclustering_loss([1, 1, 2, 2], [1, 1, 2, 1]) == 0.25
    truth, est = [1, 1, 2, 2, 3, 3], [2, 2, 3, 1, 1, 1]
    assert misclustering_loss(truth, est) == misclustering_loss_bruteforce(truth, est, 3)


def test_unassigned_always_wrong():
    assert misclustering_loss([1, 1, 2, 2], [0, 1, 2, 2]) == 0.25
    assert misclustering_loss([1, 2], [0, 0]) == 1.0


def test_loss_length_mismatch():
    with pytest.raises(ValueError):
        misclustering_loss([1, 2], [1, 2, 1])


label_pairs = st.integers(1, 6).flatmap(lambda k: st.tuples(
    st.just(k),
    st.lists(st.integers(1, k), min_size=1, max_size=30)).flatmap(lambda t: st.tuples(
        st.just(t[0]), st.just(t[1]),
        st.lists(st.integers(0, t[0]), min_size=len(t[1]), max_size=len(t[1])))))


@given(label_pairs)
def test_loss_matches_bruteforce(case):
    k, truth, est = case
    assert misclustering_loss(truth, est) == misclustering_loss_bruteforce(truth, est, k)


@given(label_pairs, st.permutations(range(1, 7)))
def test_loss_invariant_under_relabeling(case, images):
    k, truth, est = case
    pi = np.array([0] + [x for x in images if x <= k])
    assert misclustering_loss(truth, pi[np.array(est)]) == misclustering_loss(truth, est)


# --- Bayes risk, rho, Renyi ----------------------------------------------------

@pytest.mark.parametrize("tau,expected", [(0.75, 6.80e-2), (0.5, 1.27e-2), (0.25, 3.87e-6)])
def test_bayes_risk_table_values(tau, expected):
    assert float(f"{bayes_risk([0.5, 1.0, 0.0], tau):.3g}") == expected


@given(st.floats(0.01, 5.0), st.floats(0.05, 3.0))
def test_bayes_risk_matches_erfc(norm, tau):
    ref = float(mpmath.erfc(mpmath.mpf(norm) / tau / mpmath.sqrt(2)) / 2)
    assert bayes_risk([norm, 0.0], tau) == pytest.approx(ref, rel=1e-12)


def test_bayes_risk_monotone():
    taus = np.linspace(0.1, 2.0, 40)
    risks = [bayes_risk([0.5, 1.0, 0.0], t) for t in taus]
    assert all(b > a for a, b in zip(risks, risks[1:]))
    norms = np.linspace(0.1, 2.0, 40)
    risks = [bayes_risk([m, 0.0], 0.5) for m in norms]
    assert all(b < a for a, b in zip(risks, risks[1:]))
    with pytest.raises(ValueError):
        bayes_risk([1.0], 0.0)


def test_rho_examples():
    assert rho(SPEC1.mu, SPEC1.H) == pytest.approx(math.sqrt(1.25), rel=1e-14)
    s4 = preset_spec("spec4")
    c = math.sqrt(1.25 / 1.29)
    # mu' H mu = 1.23 c^2 and ||H mu|| = sqrt(1.26) c
    assert rho(s4.mu, s4.H) == pytest.approx(c * 1.23 / math.sqrt(1.26), rel=1e-14)
    assert rho(s4.mu, s4.H) == pytest.approx(1.0786, abs=1e-4)
    assert rho(s4.mu, s4.H) < math.sqrt(1.25)
    assert rho(SPEC1.mu, -SPEC1.H) == pytest.approx(-math.sqrt(1.25))
    with pytest.raises(DegenerateParameterError):
        rho([1.0, 0.0], np.diag([0.0, 1.0]))


def test_renyi_examples():
    assert renyi_half(0.3, 0.3) == 0.0
    ref = float(-2 * mpmath.log(mpmath.sqrt(mpmath.mpf("0.09")) * 2))
    assert renyi_half(0.9, 0.1) == pytest.approx(ref, rel=1e-14)
    assert renyi_half(0.9, 0.1) == pytest.approx(1.02165, abs=1e-5)
    for bad in [(0.0, 0.5), (0.5, 1.0), (1.2, 0.5)]:
        with pytest.raises(ValueError):
            renyi_half(*bad)


def test_renyi_grid_properties():
    g = np.linspace(0.01, 0.99, 60)
    P, Q = np.meshgrid(g, g)
    D = renyi_half(P, Q)
    assert np.allclose(D, renyi_half(Q, P), rtol=0, atol=1e-15)
    assert np.allclose(D, renyi_half(1 - P, 1 - Q), rtol=0, atol=1e-14)
    assert np.all(D >= 0)
    off = P != Q
    assert np.all(D[off] > 1e-12) and np.all(D[~off] <= 1e-12)


@given(st.floats(1e-6, 1 - 1e-6), st.floats(1e-6, 1 - 1e-6))
def test_renyi_high_precision(p, q):
    mp, mq = mpmath.mpf(p), mpmath.mpf(q)
    ref = float(-2 * mpmath.log(mpmath.sqrt(mp * mq) + mpmath.sqrt((1 - mp) * (1 - mq))))
    assert renyi_half(p, q) == pytest.approx(ref, rel=1e-9, abs=1e-15)


# --- p and q -----------------------------------------------------------------

def quad_pq(alpha0, z0, spec):
    """tau -> 0 oracle: only alpha_1 is random."""
    s = float(np.asarray(z0) @ spec.H @ spec.mu)
    dens = stats.norm(spec.alpha_bar, 1.0).pdf
    f = lambda a, sign: dens(a) * special.expit(sign * s + alpha0 + a)
    p = integrate.quad(f, -np.inf, np.inf, args=(1,), epsabs=1e-12)[0]
    q = integrate.quad(f, -np.inf, np.inf, args=(-1,), epsabs=1e-12)[0]
    return p, q


def test_pq_small_tau_matches_quadrature():
    spec = SPEC1.replace(tau=1e-8)
    z0, a0 = np.array([0.4, 1.1, -0.2]), -2.0
    p, q = pq_at(a0, z0, spec, inner_samples=400_000, seed=1)
    qp, qq = quad_pq(a0, z0, spec)
    assert p == pytest.approx(qp, abs=1e-3)
    assert q == pytest.approx(qq, abs=1e-3)


def test_pq_symmetric_at_origin():
    p, q = pq_at(-2.5, np.zeros(3), SPEC1, inner_samples=2000)
    assert p == q


def test_pq_separation_with_constant_omega():
    spec = SPEC1.replace(omega=OmegaLaw("constant", {"value": 0.0}))
    rng = np.random.default_rng(0)
    z0 = rng.standard_normal((500, 3))
    z0 = z0[z0 @ spec.H @ spec.mu > 0]
    p, q = pq_at(np.full(len(z0), -2.49), z0, spec, inner_samples=64)
    assert np.all(p > q)


def test_pq_vectorized_equals_scalar():
    z0 = np.array([[0.1, 0.2, 0.3], [1.0, -1.0, 0.5]])
    p, q = pq_at(np.array([-2.0, -3.0]), z0, SPEC1, inner_samples=300, seed=4)
    for i in range(2):
        assert (p[i], q[i]) == pq_at(float([-2.0, -3.0][i]), z0[i], SPEC1, inner_samples=300, seed=4)


# --- rate envelopes ----------------------------------------------------------

def test_rates_equal_at_zero_epsilon():
    r = rate_bounds(SPEC1, RateConfig(0.0, 1000, **SMALL), seed=3)
    assert r.nu_upper == r.nu_lower


def test_rates_ordered_and_in_unit_interval():
    r = rate_bounds(SPEC1, RateConfig(0.1, 1000, **SMALL), seed=3)
    assert 0 < r.nu_lower <= r.nu_upper < 1
    assert r.latent_upper == math.exp(-(1 - 0.1) * r.rho ** 2 / (2 * 0.5 ** 2))
    assert r.se_upper > 0 and r.se_lower > 0
    assert json.loads(json.dumps(r.to_dict()))["epsilon"] == 0.1


def test_rate_config_validation():
    for eps in (-0.1, 0.5, 0.7):
        with pytest.raises(ValueError):
            RateConfig(eps, 1000)
    with pytest.raises(ValueError):
        RateConfig(0.1, 1000, outer_samples=0)
    assert RateConfig(0.1, 1000).m == 499
    assert RateConfig(0.1, 1000).ball_radius_sq(2.0) == pytest.approx(4 * (1 - 0.025))


def test_latent_term_increasing_in_tau():
    terms = [rate_bounds(SPEC1.replace(tau=t), RateConfig(0.1, 1000, outer_samples=10,
                                                          inner_samples=8)).latent_upper
             for t in (0.25, 0.35, 0.5, 0.6, 0.75)]
    assert all(b > a for a, b in zip(terms, terms[1:]))


def test_latent_term_dominance_by_tau():
    small = rate_bounds(SPEC1.replace(tau=0.25), RateConfig(0.1, 1000, **SMALL), seed=1)
    large = rate_bounds(SPEC1.replace(tau=0.75), RateConfig(0.1, 1000, **SMALL), seed=1)
    assert small.latent_upper < 0.01 * small.network_upper
    assert large.latent_upper > large.network_upper


@pytest.mark.parametrize("tau", [0.25, 0.5, 0.75])
def test_upper_envelope_monotone_in_epsilon(tau):
    spec = SPEC1.replace(tau=tau)
    ups = [rate_bounds(spec, RateConfig(e, 1000, **SMALL), seed=7).nu_upper
           for e in (0.0, 0.05, 0.1, 0.2, 0.3)]
    assert all(b >= a for a, b in zip(ups, ups[1:]))


def test_rates_need_two_symmetric_communities():
    spec = SPEC1.replace(k=3, sizes=(300, 300, 400), means=np.eye(3), delta=1.0)
    with pytest.raises(ValueError):
        rate_bounds(spec, RateConfig(0.1, 1000))


# --- one-node testing ----------------------------------------------------------

@pytest.mark.parametrize("counts,decision", [((3, 1), Decision.ACCEPT), ((1, 3), Decision.REJECT),
                                             ((2, 2), Decision.ACCEPT)])
def test_edge_count_rule(counts, decision):
    assert edge_count_test(TestCounts(*counts)) is decision


def test_counts_validation():
    with pytest.raises(ValueError):
        TestCounts(-1, 0)


@pytest.fixture(scope="module")
def lr_spec1():
    return LikelihoodRatioMC(SPEC1, mc_samples=100_000, inner_samples=128, seed=11)


def test_lr_ties_are_exactly_balanced(lr_spec1):
    for m in (1, 2, 3):
        for c in range(m + 1):
            r = lr_spec1.evaluate(TestCounts(c, c), m)
            assert r.diff == 0.0 and r.decision is Decision.INCONCLUSIVE


def test_lr_agrees_with_edge_count_at_m2(lr_spec1):
    decided = 0
    for a, b in itertools.product(range(3), repeat=2):
        if a == b:
            continue
        r = lr_spec1.evaluate(TestCounts(a, b), 2)
        if r.decision is not Decision.INCONCLUSIVE:
            decided += 1
            assert r.decision is edge_count_test(TestCounts(a, b))
    assert decided >= 5


def test_lr_counts_bounded(lr_spec1):
    with pytest.raises(ValueError):
        lr_spec1.evaluate(TestCounts(3, 0), 2)


def test_lr_reverses_when_disassortative():
    # outside the equivalence hypotheses: more edges to community 1 now favours community 2
    spec = SPEC1.replace(H=-SPEC1.H)
    r = LikelihoodRatioMC(spec, mc_samples=20_000, inner_samples=64).evaluate(TestCounts(1, 0), 1)
    assert r.decision is Decision.REJECT


def test_testing_error_guards():
    with pytest.raises(ValueError):
        theory.testing_error_mc(SPEC1, 0, 10)
    with pytest.raises(ValueError):
        theory.testing_error_mc(SPEC1, 5, 0)


def test_testing_error_without_signal():
    spec = SPEC1.replace(mu=np.zeros(3))
    est = theory.testing_error_mc(spec, 20, 20_000, seed=1)
    assert est.nu_hat == pytest.approx(1.0, abs=4 * est.se)


def test_counts_within_range():
    ap, am = simulate_test_counts(SPEC1, 7, 500, seed=2)
    assert ap.shape == am.shape == (500,)
    assert ap.min() >= 0 and ap.max() <= 7 and am.max() <= 7


def test_testing_error_reproducible():
    a = theory.testing_error_mc(SPEC1, 30, 2000, seed=5)
    assert a == theory.testing_error_mc(SPEC1, 30, 2000, seed=5)


def test_testing_error_within_rate_sandwich():
    m = 499
    est = theory.testing_error_mc(SPEC1, m, 20_000, seed=5)
    r = rate_bounds(SPEC1, RateConfig(0.2, 2 * m + 1), seed=2)
    assert math.log(r.nu_lower) - 0.5 <= math.log(est.nu_hat) <= math.log(r.nu_upper) + 0.5
