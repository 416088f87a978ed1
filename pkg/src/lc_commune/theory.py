"""Error metrics and Monte-Carlo evaluators for two-community latent eigenmodels.

Covers the misclustering loss, the oracle Bayes risk, the projection distance
``rho``, the order-1/2 Renyi divergence between Bernoulli laws, and the
one-node testing problem: a node 0 is compared against ``m`` known members
of each community, and we either count edges or evaluate the full likelihood
ratio numerically.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import ndtr

from .genmodel import LatentModelSpec, sigmoid, stream

_ROLE_OUTER, _ROLE_INNER, _ROLE_TEST = 10, 11, 12
_CHUNK = 8192


# --- loss ------------------------------------------------------------------

def _check_pair(truth, estimate):
    truth = np.asarray(truth, dtype=np.int64)
    estimate = np.asarray(estimate, dtype=np.int64)
    if truth.shape != estimate.shape or truth.ndim != 1:
        raise ValueError(f"label vectors differ in shape: {truth.shape} vs {estimate.shape}")
    return truth, estimate


def misclustering_loss(truth, estimate) -> float:
    """Fraction of nodes mislabeled under the best matching of labels.

    Solved as a maximum-weight assignment on the confusion matrix, which
    equals the minimum over label permutations. Estimated label 0 is never
    matched and so always counts as an error.
    """
    truth, estimate = _check_pair(truth, estimate)
    n = truth.size
    if n == 0:
        return 0.0
    t_vals, t_idx = np.unique(truth, return_inverse=True)
    e_vals = np.unique(estimate[estimate != 0])
    if e_vals.size == 0:
        return 1.0
    e_idx = np.searchsorted(e_vals, estimate)
    assigned = estimate != 0
    conf = np.zeros((t_vals.size, e_vals.size), dtype=np.int64)
    np.add.at(conf, (t_idx[assigned], e_idx[assigned]), 1)
    r, c = linear_sum_assignment(conf, maximize=True)
    return float(n - conf[r, c].sum()) / n


def misclustering_loss_bruteforce(truth, estimate, k: int) -> float:
    """Minimum over all k! relabelings; exponential, meant as a test oracle."""
    truth, estimate = _check_pair(truth, estimate)
    if k > 8:
        raise ValueError("brute force limited to k <= 8")
    best = 1.0
    for perm in itertools.permutations(range(1, k + 1)):
        pi = np.array((0,) + perm)
        best = min(best, float(np.mean(estimate != pi[truth])))
    return best


# --- closed-form quantities --------------------------------------------------

def bayes_risk(mu, tau: float) -> float:
    """Gaussian upper tail at ``||mu|| / tau``."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    return float(ndtr(-np.linalg.norm(np.asarray(mu, dtype=np.float64)) / tau))


class DegenerateParameterError(ValueError):
    pass


def rho(mu, H) -> float:
    """Signed distance from mu to the hyperplane {z : z' H mu = 0}."""
    mu = np.asarray(mu, dtype=np.float64)
    Hmu = np.asarray(H, dtype=np.float64) @ mu
    norm = float(np.linalg.norm(Hmu))
    if norm == 0:
        raise DegenerateParameterError("H mu = 0; rho is undefined")
    return float(mu @ Hmu) / norm


def renyi_half(p, q):
    """Order-1/2 Renyi divergence between Bernoulli(p) and Bernoulli(q).

    Uses ``1 - BC = ((sqrt p - sqrt q)^2 + (sqrt(1-p) - sqrt(1-q))^2) / 2``
    so the result stays accurate, and nonnegative, when p and q are close.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if np.any((p <= 0) | (p >= 1) | (q <= 0) | (q >= 1)):
        raise ValueError("renyi_half needs p, q strictly inside (0, 1)")
    gap = 0.5 * ((np.sqrt(p) - np.sqrt(q)) ** 2 + (np.sqrt(1 - p) - np.sqrt(1 - q)) ** 2)
    out = -2.0 * np.log1p(-gap)
    return out if out.ndim else float(out)


# --- p(alpha0, z0), q(alpha0, z0) ---------------------------------------------

def _require_two_communities(spec: LatentModelSpec):
    if spec.k != 2 or spec.means is not None:
        raise ValueError("this evaluator covers the symmetric two-community model only")


def _inner_draws(spec: LatentModelSpec, inner_samples: int, seed: int):
    """Shared (alpha_1, z_1) draws with z_1 reflected about mu.

    Returns ``alphas`` of length 2K and ``z`` of shape (2K, d), the second
    half mirroring the first through ``mu``.
    """
    rng = stream(seed, _ROLE_INNER)
    eps = rng.standard_normal((inner_samples, spec.d))
    a = spec.alpha_bar + spec.omega.sample(rng, inner_samples)
    z = np.concatenate([spec.mu + spec.tau * eps, spec.mu - spec.tau * eps])
    return np.concatenate([a, a]), z


def _pq(alpha0, z0, spec, inner):
    a1, z1 = inner
    s = np.atleast_2d(z0) @ spec.H @ z1.T  # (M, 2K)
    base = np.atleast_1d(alpha0)[:, None] + a1[None, :]
    p = sigmoid(s + base).mean(axis=1)
    q = sigmoid(base - s).mean(axis=1)
    return p, q


def pq_at(alpha0, z0, spec: LatentModelSpec, inner_samples: int = 4096, seed: int = 0):
    """Monte-Carlo p and q for one or many ``(alpha0, z0)``.

    ``p`` is the mean edge probability to a random member of the ``+mu``
    community, ``q`` to one of the ``-mu`` community. The same inner draws
    serve both, with ``z_1 -> -z_1`` turning one into the other, and each
    draw is paired with its reflection through ``mu``; with that pairing
    ``p > q`` holds exactly whenever ``z0' H mu > 0``.
    """
    _require_two_communities(spec)
    scalar = np.ndim(alpha0) == 0
    inner = _inner_draws(spec, inner_samples, seed)
    z0 = np.atleast_2d(np.asarray(z0, dtype=np.float64))
    alpha0 = np.atleast_1d(np.asarray(alpha0, dtype=np.float64))
    ps, qs = [], []
    for lo in range(0, alpha0.size, _CHUNK):
        p, q = _pq(alpha0[lo:lo + _CHUNK], z0[lo:lo + _CHUNK], spec, inner)
        ps.append(p)
        qs.append(q)
    p, q = np.concatenate(ps), np.concatenate(qs)
    if scalar:
        return float(p[0]), float(q[0])
    return p, q


# --- rate envelopes ----------------------------------------------------------

@dataclass(frozen=True)
class RateConfig:
    epsilon: float
    n: int
    outer_samples: int = 20000
    inner_samples: int = 512

    def __post_init__(self):
        if not 0 <= self.epsilon < 0.5:
            raise ValueError("epsilon must lie in [0, 0.5)")
        if self.outer_samples < 1 or self.inner_samples < 1:
            raise ValueError("sample counts must be positive")
        if self.n < 3:
            raise ValueError("n must be at least 3")

    @property
    def m(self) -> int:
        return (self.n - 1) // 2

    def ball_radius_sq(self, rho_value: float) -> float:
        return (1 - self.epsilon / 4) * rho_value ** 2


@dataclass(frozen=True)
class RateEstimate:
    epsilon: float
    n: int
    nu_upper: float
    nu_lower: float
    network_upper: float
    network_lower: float
    latent_upper: float
    latent_lower: float
    se_upper: float
    se_lower: float
    rho: float
    ball_mass: float

    def to_dict(self) -> dict:
        return asdict(self)


def _outer_draws(spec, outer_samples, seed):
    rng = stream(seed, _ROLE_OUTER)
    eps = rng.standard_normal((outer_samples, spec.d))
    a0 = spec.alpha_bar + spec.omega.sample(rng, outer_samples)
    return a0, spec.mu + spec.tau * eps


def rate_bounds(spec: LatentModelSpec, cfg: RateConfig, seed: int = 0) -> RateEstimate:
    """Monte-Carlo upper/lower error envelopes at sample size ``cfg.n``.

    Each envelope is the sum of a network term, averaged over node-0
    draws under the null, and a closed-form latent term. Both envelopes use
    the same random numbers, so ``nu_lower <= nu_upper`` holds exactly.
    """
    _require_two_communities(spec)
    r = rho(spec.mu, spec.H)
    a0, z0 = _outer_draws(spec, cfg.outer_samples, seed)
    p, q = pq_at(a0, z0, spec, cfg.inner_samples, seed)
    info = renyi_half(np.clip(p, 1e-300, 1 - 1e-16), np.clip(q, 1e-300, 1 - 1e-16))
    in_ball = np.sum((z0 - spec.mu) ** 2, axis=1) <= cfg.ball_radius_sq(r)
    eps = cfg.epsilon
    up = np.where(in_ball, np.exp(-0.5 * cfg.n * (1 - eps) * info), 0.0)
    lo = np.where(in_ball, np.exp(-0.5 * cfg.n * (1 + eps) * info), 0.0)
    M = cfg.outer_samples
    se = lambda x: float(x.std(ddof=1) / math.sqrt(M)) if M > 1 else math.nan
    lat_up = math.exp(-(1 - eps) * r * r / (2 * spec.tau ** 2))
    lat_lo = math.exp(-(1 + eps) * r * r / (2 * spec.tau ** 2))
    net_up, net_lo = float(up.mean()), float(lo.mean())
    return RateEstimate(
        epsilon=eps, n=cfg.n,
        nu_upper=net_up + lat_up, nu_lower=net_lo + lat_lo,
        network_upper=net_up, network_lower=net_lo,
        latent_upper=lat_up, latent_lower=lat_lo,
        se_upper=se(up), se_lower=se(lo),
        rho=r, ball_mass=float(in_ball.mean()),
    )


# --- one-node testing --------------------------------------------------------

class Decision(str, enum.Enum):
    ACCEPT = "accept_H0"
    REJECT = "reject_H0"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class TestCounts:
    __test__ = False  # not a pytest class

    a_plus: int
    a_minus: int

    def __post_init__(self):
        if self.a_plus < 0 or self.a_minus < 0:
            raise ValueError("edge counts must be nonnegative")


def edge_count_test(counts: TestCounts) -> Decision:
    """Reject the null (node 0 is in community 1) iff it has strictly fewer
    edges into community 1 than into community 2."""
    return Decision.REJECT if counts.a_plus < counts.a_minus else Decision.ACCEPT


@dataclass(frozen=True)
class LRResult:
    decision: Decision
    i_plus: float
    i_minus: float
    diff: float
    se: float


class LikelihoodRatioMC:
    """Full likelihoods of the one-node test under both hypotheses.

    The node-0 draws come from the null law; the alternative is evaluated on
    the same draws reflected through the origin, which turns ``(p, q)`` into
    ``(q, p)``. The estimated difference is therefore exactly zero for tied
    counts.
    """

    def __init__(self, spec: LatentModelSpec, mc_samples: int = 10 ** 6,
                 inner_samples: int = 256, seed: int = 0):
        _require_two_communities(spec)
        self.spec = spec
        a0, z0 = _outer_draws(spec, mc_samples, seed)
        self.p, self.q = pq_at(a0, z0, spec, inner_samples, seed)
        self._logs = (np.log(self.p), np.log1p(-self.p), np.log(self.q), np.log1p(-self.q))

    def evaluate(self, counts: TestCounts, m: int) -> LRResult:
        if counts.a_plus > m or counts.a_minus > m:
            raise ValueError(f"counts exceed m={m}")
        lp, l1p, lq, l1q = self._logs
        ap, am = counts.a_plus, counts.a_minus
        # mirrored term order, so tied counts give bitwise equal exponents
        g_null = np.exp((ap * lp + am * lq) + ((m - ap) * l1p + (m - am) * l1q))
        g_alt = np.exp((am * lp + ap * lq) + ((m - am) * l1p + (m - ap) * l1q))
        d = g_null - g_alt
        M = d.size
        diff = float(d.mean())
        se = float(d.std(ddof=1) / math.sqrt(M)) if M > 1 else math.inf
        if abs(diff) <= 3 * se:
            dec = Decision.INCONCLUSIVE
        else:
            dec = Decision.REJECT if diff < 0 else Decision.ACCEPT
        return LRResult(dec, float(g_null.mean()), float(g_alt.mean()), diff, se)


def lr_decision_numeric(counts: TestCounts, m: int, spec: LatentModelSpec,
                        mc_samples: int = 10 ** 6, seed: int = 0,
                        inner_samples: int = 256) -> LRResult:
    return LikelihoodRatioMC(spec, mc_samples, inner_samples, seed).evaluate(counts, m)


@dataclass(frozen=True)
class TestingErrorEstimate:
    __test__ = False

    nu_hat: float
    se: float
    p_reject_null: float
    p_tie: float
    m: int
    reps: int


def simulate_test_counts(spec: LatentModelSpec, m: int, reps: int, seed: int = 0):
    """Edge counts (A_plus, A_minus) of node 0 drawn under the null."""
    _require_two_communities(spec)
    if m < 1:
        raise ValueError("m must be at least 1")
    rng = stream(seed, _ROLE_TEST)
    plus, minus = [], []
    block = max(1, 200_000 // (2 * m))
    for lo in range(0, reps, block):
        b = min(block, reps - lo)
        a0 = spec.alpha_bar + spec.omega.sample(rng, b)
        z0 = spec.mu + spec.tau * rng.standard_normal((b, spec.d))
        a = spec.alpha_bar + spec.omega.sample(rng, (b, 2 * m))
        sign = np.concatenate([np.ones(m), -np.ones(m)])
        z = sign[None, :, None] * spec.mu + spec.tau * rng.standard_normal((b, 2 * m, spec.d))
        s = np.einsum("bd,de,bke->bk", z0, spec.H, z)
        P = sigmoid(s + a0[:, None] + a)
        A = rng.random((b, 2 * m)) < P
        plus.append(A[:, :m].sum(axis=1))
        minus.append(A[:, m:].sum(axis=1))
    return np.concatenate(plus), np.concatenate(minus)


def testing_error_mc(spec: LatentModelSpec, m: int, reps: int, seed: int = 0) -> TestingErrorEstimate:
    """Type I + Type II error of the edge-counting test.

    By the symmetry between communities this equals
    ``P0(A+ < A-) + P0(A+ <= A-)``, both estimated from null draws.
    """
    if reps < 1:
        raise ValueError("reps must be positive")
    ap, am = simulate_test_counts(spec, m, reps, seed)
    per_rep = (ap < am).astype(float) + (ap <= am)
    se = float(per_rep.std(ddof=1) / math.sqrt(reps)) if reps > 1 else math.nan
    return TestingErrorEstimate(float(per_rep.mean()), se, float(np.mean(ap < am)),
                                float(np.mean(ap == am)), m, reps)
