"""Numerical statistics primitives: Beta posterior comparisons, one-sided
two-proportion tests, and point estimates / confidence intervals for 2x2
count tables.

Everything here is pure and deterministic; in particular the posterior
comparison P(X > Y + delta) is computed by adaptive composite
Gauss-Legendre quadrature (never Monte Carlo), so decisions cannot depend
on thread count or scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

__all__ = [
    "PosteriorBeta", "TwoByTwo", "reg_inc_beta", "prob_greater_by_margin",
    "prob_exceeds", "one_sided_prop_test", "point_estimate", "ci",
]


@dataclass(frozen=True)
class PosteriorBeta:
    """Beta(alpha, beta) posterior for a response rate."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha <= 0.0 or self.beta <= 0.0:
            raise ValueError(f"Beta parameters must be > 0, got ({self.alpha}, {self.beta})")


@dataclass(frozen=True)
class TwoByTwo:
    """Responder / non-responder counts for a treatment and a comparator arm.

    Counts may be fractional: dynamic data sharing downweights external
    comparator patients.
    """

    t_resp: float
    t_nonresp: float
    c_resp: float
    c_nonresp: float

    @property
    def n_t(self) -> float:
        return self.t_resp + self.t_nonresp

    @property
    def n_c(self) -> float:
        return self.c_resp + self.c_nonresp

    def cells(self) -> tuple[float, float, float, float]:
        return (self.t_resp, self.t_nonresp, self.c_resp, self.c_nonresp)


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"shape parameters must be > 0, got ({a}, {b})")
    return float(special.betainc(a, b, x))


# 32-point Gauss-Legendre nodes/weights on [-1, 1]
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)

_QUAD_TOL = 5e-7  # stricter than the 1e-6 contract
_MAX_PANELS = 512


def _gl_integral(ax: float, bx: float, ay: float, by: float, delta: float,
                 lo: float, hi: float, n_panels: int) -> float:
    # int_lo^hi f_Y(y) * (1 - I_{y+delta}(ax, bx)) dy on n_panels GL panels
    edges = np.linspace(lo, hi, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    t = (mid[:, None] + half * _GL_NODES[None, :]).ravel()
    log_pdf = (ay - 1.0) * np.log(t) + (by - 1.0) * np.log1p(-t) - special.betaln(ay, by)
    surv = 1.0 - special.betainc(ax, bx, np.clip(t + delta, 0.0, 1.0))
    vals = np.exp(log_pdf) * surv
    return float(half * (vals.reshape(n_panels, -1) @ _GL_WEIGHTS).sum())


@lru_cache(maxsize=1 << 15)
def _prob_greater_cached(ax: float, bx: float, ay: float, by: float, delta: float) -> float:
    lo = max(0.0, -delta)
    hi = min(1.0, 1.0 - delta)
    base = 0.0
    if delta < 0.0:
        # all mass with Y <= -delta wins outright (X > Y + delta always)
        base = float(special.betainc(ay, by, min(1.0, -delta)))
    if hi - lo <= 1e-15:
        return min(1.0, max(0.0, base))
    prev = _gl_integral(ax, bx, ay, by, delta, lo, hi, 2)
    n = 4
    while n <= _MAX_PANELS:
        cur = _gl_integral(ax, bx, ay, by, delta, lo, hi, n)
        if abs(cur - prev) < _QUAD_TOL:
            prev = cur
            break
        prev = cur
        n *= 2
    return min(1.0, max(0.0, base + prev))


def prob_greater_by_margin(x: PosteriorBeta, y: PosteriorBeta, delta: float) -> float:
    """P(X > Y + delta) for independent Beta posteriors, to ~1e-6 absolute.

    The margin may be negative (non-inferiority).  Computed as
    F_Y(-delta) + int f_Y(y) * S_X(y + delta) dy with panel doubling until
    two successive composite Gauss-Legendre estimates agree.
    """
    return _prob_greater_cached(float(x.alpha), float(x.beta),
                                float(y.alpha), float(y.beta), float(delta))


def prob_exceeds(x: PosteriorBeta, v: float) -> float:
    """P(X > v) = 1 - I_v(alpha, beta)."""
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {v}")
    return 1.0 - float(special.betainc(x.alpha, x.beta, v))


def one_sided_prop_test(t: TwoByTwo, correct: bool = False) -> float:
    """One-sided pooled two-proportion z test of H1: treatment > comparator.

    Returns p = 1 - Phi(z) with the pooled-variance z statistic; this is the
    one-sided equivalent of the uncorrected chi-square test.  With
    ``correct`` the difference is shrunk toward zero by the usual continuity
    term.  A pooled rate of exactly 0 or 1 carries no information about the
    contrast; by convention p = 0.5 is returned then.
    """
    n_t, n_c = t.n_t, t.n_c
    if n_t < 1.0 or n_c < 1.0:
        raise ValueError("both arm totals must be >= 1")
    pooled = (t.t_resp + t.c_resp) / (n_t + n_c)
    if pooled <= 0.0 or pooled >= 1.0:
        return 0.5
    se = math.sqrt(pooled * (1.0 - pooled) * (1.0 / n_t + 1.0 / n_c))
    diff = t.t_resp / n_t - t.c_resp / n_c
    if correct:
        shift = 0.5 * (1.0 / n_t + 1.0 / n_c)
        diff = math.copysign(max(0.0, abs(diff) - shift), diff)
    z = diff / se
    return float(special.ndtr(-z))


def _adjusted_cells(t: TwoByTwo) -> tuple[float, float, float, float]:
    return tuple(c + 0.5 for c in t.cells())


def point_estimate(t: TwoByTwo, kind: str) -> float:
    """Risk ratio ("RR") or odds ratio ("OR") of treatment vs comparator.

    If any cell is zero, 0.5 is added to all four cells first
    (Haldane-Anscombe) so the estimate is always finite and positive.
    """
    if kind not in ("RR", "OR"):
        raise ValueError(f"kind must be 'RR' or 'OR', got {kind!r}")
    a, b, c, d = t.cells()
    if min(a, b, c, d) == 0.0:
        a, b, c, d = a + 0.5, b + 0.5, c + 0.5, d + 0.5
    if kind == "RR":
        return (a / (a + b)) / (c / (c + d))
    return (a * d) / (b * c)


def ci(t: TwoByTwo, kind: str, level: float) -> tuple[float, float]:
    """Confidence interval for the risk difference ("AR"), risk ratio ("RR")
    or odds ratio ("OR") of treatment vs comparator.

    AR uses the Wald interval on the observed rates.  RR and OR use
    log-scale intervals on 0.5-adjusted cells (small-sample correction):
    RR with se = sqrt(1/a - 1/(a+b) + 1/c - 1/(c+d)), OR (Woolf) with
    se = sqrt(1/a + 1/b + 1/c + 1/d).
    """
    if kind not in ("AR", "RR", "OR"):
        raise ValueError(f"kind must be 'AR', 'RR' or 'OR', got {kind!r}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    z = float(special.ndtri(1.0 - (1.0 - level) / 2.0))
    if kind == "AR":
        n_t, n_c = t.n_t, t.n_c
        if n_t < 1.0 or n_c < 1.0:
            raise ValueError("both arm totals must be >= 1")
        p_t, p_c = t.t_resp / n_t, t.c_resp / n_c
        se = math.sqrt(p_t * (1.0 - p_t) / n_t + p_c * (1.0 - p_c) / n_c)
        d = p_t - p_c
        return (d - z * se, d + z * se)
    a, b, c, d = _adjusted_cells(t)
    if kind == "RR":
        est = (a / (a + b)) / (c / (c + d))
        se = math.sqrt(1.0 / a - 1.0 / (a + b) + 1.0 / c - 1.0 / (c + d))
    else:
        est = (a * d) / (b * c)
        se = math.sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d)
    log_est = math.log(est)
    return (math.exp(log_est - z * se), math.exp(log_est + z * se))
