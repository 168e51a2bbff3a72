# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Cython implementation of the numerical kernels.

Mirrors the function surface of ``mixtrial._core_py`` (which documents the
semantics); the two backends agree to ~1e-12 and tests enforce that.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport M_PI, erfc, exp, fabs, floor, lgamma, log, log1p, sqrt

cnp.import_array()

BACKEND = "cython"

_gl_nodes, _gl_weights = np.polynomial.legendre.leggauss(61)
_gl_nodes = np.ascontiguousarray(_gl_nodes)
_gl_weights = np.ascontiguousarray(_gl_weights)

cdef double[::1] GLX = _gl_nodes
cdef double[::1] GLW = _gl_weights
cdef int NGL = 61

cdef double SQRT2 = sqrt(2.0)
cdef double INV_SQRT_2PI = 1.0 / sqrt(2.0 * M_PI)
cdef double PMF_TAIL = 9.0


cdef inline double _ndtr(double x) noexcept nogil:
    return 0.5 * erfc(-x / SQRT2)


cdef inline double _npdf(double x) noexcept nogil:
    return exp(-0.5 * x * x) * INV_SQRT_2PI


cdef object _pmf_window(int n, double p):
    """(k0, pmf array) on the interval of non-negligible binomial mass."""
    if p <= 0.0:
        return 0, np.array([1.0])
    if p >= 1.0:
        return n, np.array([1.0])
    cdef double sd = sqrt(n * p * (1.0 - p))
    cdef int mode = <int> floor((n + 1) * p)
    if mode > n:
        mode = n
    # the absolute buffer covers the Poisson-like skew when p is extreme
    cdef double half = PMF_TAIL * sd + 20.0
    cdef int k0 = <int> floor(mode - half)
    if k0 < 0:
        k0 = 0
    cdef int k1 = <int> (mode + half + 1.0)
    if k1 > n:
        k1 = n
    out = np.empty(k1 - k0 + 1)
    cdef double[::1] pmf = out
    cdef double log_mode = (
        lgamma(n + 1.0) - lgamma(mode + 1.0) - lgamma(n - mode + 1.0)
        + mode * log(p) + (n - mode) * log1p(-p)
    )
    cdef double ratio = p / (1.0 - p)
    cdef int k
    pmf[mode - k0] = exp(log_mode)
    for k in range(mode + 1, k1 + 1):
        pmf[k - k0] = pmf[k - 1 - k0] * ratio * (n - k + 1) / k
    for k in range(mode - 1, k0 - 1, -1):
        pmf[k - k0] = pmf[k + 1 - k0] * (k + 1) / (ratio * (n - k))
    return k0, out


def binom_pmf_window(int n, double p):
    return _pmf_window(n, p)


cdef double _beta_mix_scalar(int n, double eta, double mu, double p,
                             int k0, double[::1] pmf) noexcept nogil:
    cdef double s = sqrt(n / 2.0)
    cdef double step = mu / n
    cdef double acc = 0.0
    cdef int k
    for k in range(pmf.shape[0]):
        acc += pmf[k] * _ndtr((eta - (k0 + k) * step) * s)
    return acc


cdef double _mix_pdf_scalar(int n, double x, double mu, double p,
                            int k0, double[::1] pmf) noexcept nogil:
    cdef double s = sqrt(n / 2.0)
    cdef double step = mu / n
    cdef double acc = 0.0
    cdef int k
    for k in range(pmf.shape[0]):
        acc += pmf[k] * s * _npdf((x - (k0 + k) * step) * s)
    return acc


def beta_mix(int n, object etas, double mu, double p):
    e_arr = np.ascontiguousarray(etas, dtype=np.float64)
    k0, pmf_arr = _pmf_window(n, p)
    cdef double[::1] e = e_arr
    cdef double[::1] pmf = pmf_arr
    cdef int kk0 = k0
    out = np.empty(e_arr.shape[0])
    cdef double[::1] o = out
    cdef int i
    for i in range(e.shape[0]):
        o[i] = _beta_mix_scalar(n, e[i], mu, p, kk0, pmf)
    return out


def beta_mix_pdf(int n, object xs, double mu, double p):
    x_arr = np.ascontiguousarray(xs, dtype=np.float64)
    k0, pmf_arr = _pmf_window(n, p)
    cdef double[::1] x = x_arr
    cdef double[::1] pmf = pmf_arr
    cdef int kk0 = k0
    out = np.empty(x_arr.shape[0])
    cdef double[::1] o = out
    cdef int i
    for i in range(x.shape[0]):
        o[i] = _mix_pdf_scalar(n, x[i], mu, p, kk0, pmf)
    return out


cdef double _eta2_resid(int n1, double eta0, double eta1, double alpha1,
                        double n2, double alpha, double e2) noexcept nogil:
    cdef double mid = 0.5 * (eta1 + eta0)
    cdef double half = 0.5 * (eta1 - eta0)
    cdef double s1 = sqrt(n1 / 2.0)
    cdef double c = (n1 + n2) / n2
    cdef double r = n1 / n2
    cdef double sq = sqrt(n2 / 2.0)
    cdef double acc = 0.0
    cdef double x, w
    cdef int j
    for j in range(NGL):
        x = mid + half * GLX[j]
        w = half * GLW[j] * s1 * _npdf(x * s1)
        acc += w * (1.0 - _ndtr((c * e2 - r * x) * sq))
    return acc + alpha1 - alpha


cdef double _eta2_dresid(int n1, double eta0, double eta1,
                         double n2, double e2) noexcept nogil:
    cdef double mid = 0.5 * (eta1 + eta0)
    cdef double half = 0.5 * (eta1 - eta0)
    cdef double s1 = sqrt(n1 / 2.0)
    cdef double c = (n1 + n2) / n2
    cdef double r = n1 / n2
    cdef double sq = sqrt(n2 / 2.0)
    cdef double acc = 0.0
    cdef double x, w
    cdef int j
    for j in range(NGL):
        x = mid + half * GLX[j]
        w = half * GLW[j] * s1 * _npdf(x * s1)
        acc += w * _npdf((c * e2 - r * x) * sq)
    return -acc * c * sq


def solve_eta2(int n1, double eta0, object eta1s, object alpha1s, object n2s,
               double alpha):
    e1_arr = np.atleast_1d(np.ascontiguousarray(eta1s, dtype=np.float64))
    a1_arr = np.atleast_1d(np.ascontiguousarray(alpha1s, dtype=np.float64))
    n2_arr = np.atleast_1d(np.ascontiguousarray(n2s, dtype=np.float64))
    cdef double[::1] e1 = e1_arr
    cdef double[::1] a1 = a1_arr
    cdef double[::1] n2 = n2_arr
    out = np.empty(e1_arr.shape[0])
    cdef double[::1] o = out
    cdef int i, it, widen
    cdef double lo, hi, e2, f, df, cand
    cdef bint ok
    for i in range(e1.shape[0]):
        lo, hi = -1.0, 1.0
        ok = False
        for widen in range(8):
            if (_eta2_resid(n1, eta0, e1[i], a1[i], n2[i], alpha, lo) > 0.0
                    and _eta2_resid(n1, eta0, e1[i], a1[i], n2[i], alpha, hi) < 0.0):
                ok = True
                break
            lo *= 2.0
            hi *= 2.0
        if not ok:
            raise RuntimeError(
                "eta2 bracketing failed: the level equation has no root in the "
                "widened interval; check that 1 - alpha0 > alpha > alpha1"
            )
        e2 = 0.5 * (lo + hi)
        for it in range(100):
            f = _eta2_resid(n1, eta0, e1[i], a1[i], n2[i], alpha, e2)
            if f > 0.0:
                lo = e2
            else:
                hi = e2
            if fabs(f) < 1e-12:
                break
            df = _eta2_dresid(n1, eta0, e1[i], n2[i], e2)
            cand = e2 - f / df
            if cand <= lo or cand >= hi or cand != cand:
                e2 = 0.5 * (lo + hi)
            else:
                e2 = cand
        o[i] = e2
    return out


def beta2_se_approx(int n1, double eta0, object eta1s, object n2s, object eta2s,
                    object mus, object ps):
    e1_arr = np.atleast_1d(np.ascontiguousarray(eta1s, dtype=np.float64))
    n2_arr = np.atleast_1d(np.ascontiguousarray(n2s, dtype=np.float64))
    e2_arr = np.atleast_1d(np.ascontiguousarray(eta2s, dtype=np.float64))
    mu_arr = np.atleast_1d(np.ascontiguousarray(mus, dtype=np.float64))
    p_arr = np.atleast_1d(np.ascontiguousarray(ps, dtype=np.float64))
    cdef double[::1] e1 = e1_arr
    cdef double[::1] n2 = n2_arr
    cdef double[::1] e2 = e2_arr
    cdef double[::1] mu = mu_arr
    cdef double[::1] pp = p_arr
    out = np.zeros(e1_arr.shape[0])
    cdef double[::1] o = out
    cdef int i, ci, j
    cdef double m, p, v, s1, s2, mid, half, c, r, acc, x, w, t, val
    for i in range(e1.shape[0]):
        mid = 0.5 * (e1[i] + eta0)
        half = 0.5 * (e1[i] - eta0)
        c = (n1 + n2[i]) / n2[i]
        r = n1 / n2[i]
        val = 0.0
        for ci in range(mu.shape[0]):
            m = mu[ci]
            p = pp[ci]
            v = 2.0 + (1.0 - p) * p * m * m
            s1 = sqrt(v / n1)
            s2 = sqrt(v / n2[i])
            acc = _ndtr((eta0 - m * p) / s1)
            for j in range(NGL):
                x = mid + half * GLX[j]
                w = half * GLW[j] * _npdf((x - m * p) / s1) / s1
                t = (c * e2[i] - r * x - m * p) / s2
                acc += w * _ndtr(t)
            if acc > val:
                val = acc
        o[i] = val
    return out


def beta2_point(int n1, double eta0, double eta1, double n2, double eta2,
                double mu, double p, bint exact):
    cdef double mid = 0.5 * (eta1 + eta0)
    cdef double half = 0.5 * (eta1 - eta0)
    cdef double c = (n1 + n2) / n2
    cdef double r = n1 / n2
    cdef double acc, x, w, t, v, s1, s2
    cdef int j, in2, k01, k02
    cdef double[::1] pmf1, pmf2
    if exact:
        in2 = <int> n2
        k01_obj, pmf1_arr = _pmf_window(n1, p)
        k02_obj, pmf2_arr = _pmf_window(in2, p)
        pmf1 = pmf1_arr
        pmf2 = pmf2_arr
        k01 = k01_obj
        k02 = k02_obj
        acc = _beta_mix_scalar(n1, eta0, mu, p, k01, pmf1)
        for j in range(NGL):
            x = mid + half * GLX[j]
            w = half * GLW[j] * _mix_pdf_scalar(n1, x, mu, p, k01, pmf1)
            t = c * eta2 - r * x
            acc += w * _beta_mix_scalar(in2, t, mu, p, k02, pmf2)
        return acc
    v = 2.0 + (1.0 - p) * p * mu * mu
    s1 = sqrt(v / n1)
    s2 = sqrt(v / n2)
    acc = _ndtr((eta0 - mu * p) / s1)
    for j in range(NGL):
        x = mid + half * GLX[j]
        w = half * GLW[j] * _npdf((x - mu * p) / s1) / s1
        t = (c * eta2 - r * x - mu * p) / s2
        acc += w * _ndtr(t)
    return acc


def beta2_se_exact(int n1, double eta0, double eta1, int n2, double eta2,
                   object mus, object ps):
    mu_arr = np.atleast_1d(np.ascontiguousarray(mus, dtype=np.float64))
    p_arr = np.atleast_1d(np.ascontiguousarray(ps, dtype=np.float64))
    cdef double best = 0.0
    cdef double val
    cdef int i
    for i in range(mu_arr.shape[0]):
        val = beta2_point(n1, eta0, eta1, n2, eta2, mu_arr[i], p_arr[i], True)
        if val > best:
            best = val
    return best


def pvalue2(int n1, double eta0, double eta1, int n2, double alpha1,
            object xbar1s, object xbar2s):
    x1_arr = np.atleast_1d(np.ascontiguousarray(xbar1s, dtype=np.float64))
    x2_arr = np.atleast_1d(np.ascontiguousarray(xbar2s, dtype=np.float64))
    cdef double[::1] x1 = x1_arr
    cdef double[::1] x2 = x2_arr
    out = np.empty(x1_arr.shape[0])
    cdef double[::1] o = out
    cdef double mid = 0.5 * (eta1 + eta0)
    cdef double half = 0.5 * (eta1 - eta0)
    cdef double s1 = sqrt(n1 / 2.0)
    cdef double sn2 = sqrt(<double> n2)
    cdef double acc, x, w, z
    cdef int i, j
    for i in range(x1.shape[0]):
        acc = 0.0
        for j in range(NGL):
            x = mid + half * GLX[j]
            w = half * GLW[j] * s1 * _npdf(x * s1)
            z = (sn2 * x2[i] + (n1 / sn2) * (x1[i] - x)) / SQRT2
            acc += w * (1.0 - _ndtr(z))
        o[i] = acc + alpha1
    return out
