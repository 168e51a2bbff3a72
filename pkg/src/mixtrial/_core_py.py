"""NumPy implementation of the numerical kernels.

This is the fallback backend; ``mixtrial._core_cy`` implements the same
surface in Cython.  Every function here is pure and thread-safe.  Thresholds
are passed in explicitly (no quantile computation happens at this level), and
batch arguments are one-dimensional float arrays of equal length.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtr

BACKEND = "python"

_GL_X, _GL_W = np.polynomial.legendre.leggauss(61)

_SQRT_2PI = np.sqrt(2.0 * np.pi)

# Mass beyond 9 sigma of the binomial mode is < 1e-18, far below any
# tolerance used by the planning routines.
_PMF_TAIL_SIGMAS = 9.0


def _phi(x):
    return np.exp(-0.5 * x * x) / _SQRT_2PI


def binom_pmf_window(n: int, p: float):
    """Binomial(n, p) pmf on the interval of non-negligible mass.

    Returns ``(k0, pmf)`` with ``pmf[i]`` the probability of ``k0 + i``
    successes.  Uses the multiplicative recursion seeded at the mode so that
    no intermediate value under- or overflows for any ``n``.
    """
    if p <= 0.0:
        return 0, np.array([1.0])
    if p >= 1.0:
        return n, np.array([1.0])
    sd = np.sqrt(n * p * (1.0 - p))
    mode = int(np.floor((n + 1) * p))
    mode = min(max(mode, 0), n)
    # the absolute buffer covers the Poisson-like skew when p is extreme
    half = _PMF_TAIL_SIGMAS * sd + 20
    k0 = max(0, int(np.floor(mode - half)))
    k1 = min(n, int(np.ceil(mode + half)))
    from scipy.special import gammaln

    log_mode = (
        gammaln(n + 1)
        - gammaln(mode + 1)
        - gammaln(n - mode + 1)
        + mode * np.log(p)
        + (n - mode) * np.log1p(-p)
    )
    pmf = np.empty(k1 - k0 + 1)
    pmf[mode - k0] = np.exp(log_mode)
    ratio = p / (1.0 - p)
    for k in range(mode + 1, k1 + 1):
        pmf[k - k0] = pmf[k - 1 - k0] * ratio * (n - k + 1) / k
    for k in range(mode - 1, k0 - 1, -1):
        pmf[k - k0] = pmf[k + 1 - k0] * (k + 1) / (ratio * (n - k))
    return k0, pmf


def beta_mix(n: int, etas: np.ndarray, mu: float, p: float) -> np.ndarray:
    """Exact false-negative probability of the mean test at each threshold.

    Computes ``sum_k C(n,k) p^k (1-p)^(n-k) Phi((eta - k mu / n) sqrt(n/2))``.
    """
    k0, pmf = binom_pmf_window(n, p)
    k = np.arange(k0, k0 + len(pmf))
    z = (np.asarray(etas, dtype=float)[:, None] - k[None, :] * (mu / n)) * np.sqrt(n / 2.0)
    return ndtr(z) @ pmf


def beta_mix_pdf(n: int, xs: np.ndarray, mu: float, p: float) -> np.ndarray:
    """Density of the standardized mean under the mixture alternative."""
    k0, pmf = binom_pmf_window(n, p)
    k = np.arange(k0, k0 + len(pmf))
    s = np.sqrt(n / 2.0)
    z = (np.asarray(xs, dtype=float)[:, None] - k[None, :] * (mu / n)) * s
    return (_phi(z) * s) @ pmf


def _stage1_nodes(eta0: float, eta1s: np.ndarray):
    mid = 0.5 * (eta1s + eta0)
    half = 0.5 * (eta1s - eta0)
    x = mid[:, None] + half[:, None] * _GL_X[None, :]
    return x, half


def solve_eta2(
    n1: int,
    eta0: float,
    eta1s: np.ndarray,
    alpha1s: np.ndarray,
    n2s: np.ndarray,
    alpha: float,
) -> np.ndarray:
    """Final-stage thresholds solving the level equation for each batch item.

    The left-hand side is strictly decreasing in eta2, so a bracket plus
    safeguarded Newton converges quickly; residuals end below 1e-10.
    """
    eta1s = np.atleast_1d(np.asarray(eta1s, dtype=float))
    alpha1s = np.atleast_1d(np.asarray(alpha1s, dtype=float))
    n2s = np.atleast_1d(np.asarray(n2s, dtype=float))
    x, half = _stage1_nodes(eta0, eta1s)
    s1 = np.sqrt(n1 / 2.0)
    w = half[:, None] * _GL_W[None, :] * s1 * _phi(x * s1)
    c = (n1 + n2s) / n2s
    r = n1 / n2s
    sq = np.sqrt(n2s / 2.0)

    def resid(e2):
        z = ((c * e2)[:, None] - r[:, None] * x) * sq[:, None]
        return (w * (1.0 - ndtr(z))).sum(axis=1) + alpha1s - alpha

    def dresid(e2):
        z = ((c * e2)[:, None] - r[:, None] * x) * sq[:, None]
        return -(c * sq) * (w * _phi(z)).sum(axis=1)

    lo = np.full(eta1s.shape, -1.0)
    hi = np.full(eta1s.shape, 1.0)
    for _ in range(8):
        if np.all(resid(lo) > 0.0) and np.all(resid(hi) < 0.0):
            break
        lo *= 2.0
        hi *= 2.0
    else:
        raise RuntimeError(
            "eta2 bracketing failed: the level equation has no root in the "
            "widened interval; check that 1 - alpha0 > alpha > alpha1"
        )
    e2 = 0.5 * (lo + hi)
    for _ in range(100):
        f = resid(e2)
        lo = np.where(f > 0.0, e2, lo)
        hi = np.where(f <= 0.0, e2, hi)
        if np.max(np.abs(f)) < 1e-11:
            break
        step = f / dresid(e2)
        cand = e2 - step
        bad = (cand <= lo) | (cand >= hi) | ~np.isfinite(cand)
        e2 = np.where(bad, 0.5 * (lo + hi), cand)
    return e2


def beta2_se_approx(
    n1: int,
    eta0: float,
    eta1s: np.ndarray,
    n2s: np.ndarray,
    eta2s: np.ndarray,
    mus: np.ndarray,
    ps: np.ndarray,
) -> np.ndarray:
    """CLT-mode two-stage type II error, maximized over the given corners.

    ``n2s`` may be non-integral: the normal approximation is defined for real
    stage sizes, which the continuous relaxation of the n2 search exploits.
    """
    eta1s = np.atleast_1d(np.asarray(eta1s, dtype=float))
    n2s = np.atleast_1d(np.asarray(n2s, dtype=float))
    eta2s = np.atleast_1d(np.asarray(eta2s, dtype=float))
    x, half = _stage1_nodes(eta0, eta1s)
    c = (n1 + n2s) / n2s
    r = n1 / n2s
    out = np.zeros(eta1s.shape)
    for mu, p in zip(mus, ps):
        v = 2.0 + (1.0 - p) * p * mu * mu
        s1 = np.sqrt(v / n1)
        s2 = np.sqrt(v / n2s)
        w = half[:, None] * _GL_W[None, :] * _phi((x - mu * p) / s1) / s1
        t = ((c * eta2s)[:, None] - r[:, None] * x - mu * p) / s2[:, None]
        val = ndtr((eta0 - mu * p) / s1) + (w * ndtr(t)).sum(axis=1)
        out = np.maximum(out, val)
    return out


def beta2_point(
    n1: int,
    eta0: float,
    eta1: float,
    n2: float,
    eta2: float,
    mu: float,
    p: float,
    exact: bool,
) -> float:
    """Two-stage false-negative probability at one alternative."""
    x = 0.5 * (eta1 + eta0) + 0.5 * (eta1 - eta0) * _GL_X
    half = 0.5 * (eta1 - eta0)
    t = (n1 + n2) / n2 * eta2 - n1 / n2 * x
    if exact:
        n2 = int(n2)
        w = half * _GL_W * beta_mix_pdf(n1, x, mu, p)
        b2 = beta_mix(n2, t, mu, p)
        base = beta_mix(n1, np.array([eta0]), mu, p)[0]
    else:
        v = 2.0 + (1.0 - p) * p * mu * mu
        s1 = np.sqrt(v / n1)
        s2 = np.sqrt(v / n2)
        w = half * _GL_W * _phi((x - mu * p) / s1) / s1
        b2 = ndtr((t - mu * p) / s2)
        base = ndtr((eta0 - mu * p) / s1)
    return float(base + w @ b2)


def beta2_se_exact(
    n1: int,
    eta0: float,
    eta1: float,
    n2: int,
    eta2: float,
    mus: np.ndarray,
    ps: np.ndarray,
) -> float:
    return max(beta2_point(n1, eta0, eta1, n2, eta2, mu, p, True) for mu, p in zip(mus, ps))


def pvalue2(
    n1: int,
    eta0: float,
    eta1: float,
    n2: int,
    alpha1: float,
    xbar1s: np.ndarray,
    xbar2s: np.ndarray,
) -> np.ndarray:
    """Continued-trial p-values for batches of (stage-1, stage-2) means."""
    xbar1s = np.atleast_1d(np.asarray(xbar1s, dtype=float))
    xbar2s = np.atleast_1d(np.asarray(xbar2s, dtype=float))
    mid = 0.5 * (eta1 + eta0)
    half = 0.5 * (eta1 - eta0)
    x = mid + half * _GL_X
    s1 = np.sqrt(n1 / 2.0)
    w = half * _GL_W * s1 * _phi(x * s1)
    out = np.empty(xbar1s.shape)
    chunk = max(1, int(2_000_000 // max(len(x), 1)))
    sn2 = np.sqrt(float(n2))
    for i in range(0, len(xbar1s), chunk):
        x1 = xbar1s[i : i + chunk, None]
        x2 = xbar2s[i : i + chunk, None]
        z = (sn2 * x2 + (n1 / sn2) * (x1 - x[None, :])) / np.sqrt(2.0)
        out[i : i + chunk] = (w[None, :] * (1.0 - ndtr(z))).sum(axis=1)
    return out + alpha1
