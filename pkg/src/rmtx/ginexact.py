"""Exact and asymptotic Ginibre machinery.

Kostlan sampling (the moduli of Ginibre eigenvalues are independent
gamma variables: |sigma| =d sqrt(Gamma_k / n), k = 1..n, a normalization
pinned empirically against direct eigendecompositions), the exact radius
CDF, the Gumbel/Poisson rescalings, the rescaled determinantal kernel with
all arithmetic in log space, sector traces and Hilbert-Schmidt norms by
adaptive quadrature, Fredholm gap probabilities with a rigorous error
bound, and Laplace functionals of radial observables.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import (GammaConvergenceFailure, NonPositiveScale,
                     QuadratureBudgetExceeded)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class RescaleParams:
    n: int
    gamma_n: float
    gamma_n_prime: float


@dataclass(frozen=True)
class AnnulusSector:
    """A(t, a, b): rescaled radius >= t, argument in [a, b)."""

    t: float
    a: float = 0.0
    b: float = TWO_PI

    def __post_init__(self):
        if not (0.0 <= self.a < self.b <= TWO_PI + 1e-15):
            if self.a != self.b:
                raise ValueError("need 0 <= a < b <= 2 pi")

    @property
    def arc(self):
        return self.b - self.a


def gamma_n(n) -> float:
    """gamma_n = log n - 2 log log n - log(2 pi)."""
    n = float(n)
    if n < 3:
        raise NonPositiveScale("n >= 3 required")
    return math.log(n) - 2.0 * math.log(math.log(n)) - math.log(TWO_PI)


def gamma_n_prime(n) -> float:
    """gamma'_n = (log n - 5 log log n - log (2 pi)^4) / 2.

    Raises NonPositiveScale when the value is <= 0, which happens for every
    n below ~1e12: the rightmost-eigenvalue Gumbel rescaling is out of
    desk-scale reach.
    """
    n = float(n)
    if n < 3:
        raise NonPositiveScale("n >= 3 required")
    val = (math.log(n) - 5.0 * math.log(math.log(n))
           - 4.0 * math.log(TWO_PI)) / 2.0
    if val <= 0.0:
        raise NonPositiveScale(
            f"gamma'_n = {val:.4f} <= 0 at n = {n:.3g}; the rightmost "
            "rescaling is refused at this size")
    return val


def rescale_params(n) -> RescaleParams:
    try:
        gp = gamma_n_prime(n)
    except NonPositiveScale:
        gp = float("nan")
    return RescaleParams(n=int(n), gamma_n=gamma_n(n), gamma_n_prime=gp)


def rescale_radius(n, modulus):
    """r = sqrt(4 n gamma_n) (modulus - 1 - sqrt(gamma_n / 4n))."""
    g = gamma_n(n)
    if g <= 0:
        raise NonPositiveScale(f"gamma_n(n={n}) = {g} <= 0")
    return np.sqrt(4.0 * n * g) * (np.asarray(modulus)
                                   - 1.0 - np.sqrt(g / (4.0 * n)))


def modulus_from_rescaled(n, r):
    """Inverse of rescale_radius (exact round trip)."""
    g = gamma_n(n)
    if g <= 0:
        raise NonPositiveScale(f"gamma_n(n={n}) = {g} <= 0")
    return 1.0 + np.sqrt(g / (4.0 * n)) + np.asarray(r) / np.sqrt(4.0 * n * g)


def kostlan_sample(n, k, rng):
    """Top-k Ginibre eigenvalue moduli via Kostlan: sqrt(Gamma_j / n).

    Draws n independent Gamma(shape=j, scale=1) variables and returns the
    k largest of sqrt(g_j / n) in decreasing order.
    """
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    g = rng.gamma(np.arange(1, n + 1, dtype=float))
    moduli = np.sqrt(g / n)
    if k == n:
        return np.sort(moduli)[::-1].copy()
    top = np.partition(moduli, n - k)[n - k:]
    return np.sort(top)[::-1].copy()


def radius_cdf_exact(n, x) -> float:
    """P(spectral radius <= x) for Ginibre: prod_k P(k, n x^2), log space.

    Only shapes k with non-negligible regularized-gamma defect contribute;
    the window k >= n x^2 - 50 sqrt(n x^2) captures them to below 1e-300.
    """
    if x <= 0:
        return 0.0
    y = n * float(x) ** 2
    k_lo = 1
    if n > 200_000:
        k_lo = max(1, int(y - 50.0 * math.sqrt(y)))
        if k_lo > n:
            return 1.0
    ks = np.arange(k_lo, n + 1, dtype=float)
    p = special.gammainc(ks, y)
    if np.any(p <= 0.0):
        return 0.0
    return float(np.exp(np.sum(np.log(p))))


# --- complex upper incomplete gamma ----------------------------------------

def log_gammaincc_complex(s, y, tol=1e-13, max_iter=100_000):
    """log of Q(s, y) = Gamma(s, y)/Gamma(s) for real s > 0, complex y.

    Modified Lentz continued fraction,

        Gamma(s, y) = e^{-y} y^s / (y + 1 - s - 1(1-s)/(y + 3 - s - ...)),

    evaluated to ``tol``; the principal branch of log y is used.  Real
    non-negative y delegates to scipy.  Raises GammaConvergenceFailure if
    the fraction does not settle.
    """
    y = complex(y)
    if y.imag == 0.0 and y.real >= 0.0:
        q = special.gammaincc(s, y.real)
        if q == 0.0:
            # log-space tail: Gamma(s,x) ~ x^{s-1} e^{-x} for large x
            x = y.real
            return (s - 1.0) * math.log(x) - x - special.gammaln(s) \
                + math.log1p((s - 1.0) / x)
        return complex(math.log(q))
    tiny = 1e-300
    b = y + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b if b != 0 else 1.0 / tiny
    h = d
    for i in range(1, max_iter + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return -y + s * np.log(y) + np.log(h) - special.gammaln(s)
    raise GammaConvergenceFailure(
        f"continued fraction stalled at s={s}, y={y}")


def _log_gammaincc_grid(s, y, tol=1e-13, max_iter=100_000):
    """Vectorized Lentz CF over an array of complex y (same real s)."""
    y = np.asarray(y, dtype=complex)
    out = np.empty(y.shape, dtype=complex)
    flat = y.ravel()
    res = np.empty(flat.shape, dtype=complex)
    tiny = 1e-300
    b = flat + 1.0 - s
    d = np.where(b != 0, b, tiny).astype(complex)
    d = 1.0 / d
    c = np.full(flat.shape, 1.0 / tiny, dtype=complex)
    h = d.copy()
    active = np.ones(flat.shape, dtype=bool)
    b_cur = flat + 1.0 - s
    for i in range(1, max_iter + 1):
        if not active.any():
            break
        an = -i * (i - s)
        b_cur = b_cur + 2.0
        d_new = an * d + b_cur
        np.copyto(d_new, tiny, where=np.abs(d_new) < tiny)
        c_new = b_cur + an / c
        np.copyto(c_new, tiny, where=np.abs(c_new) < tiny)
        d_new = 1.0 / d_new
        delta = d_new * c_new
        h_new = h * delta
        upd = active
        d[upd], c[upd], h[upd] = d_new[upd], c_new[upd], h_new[upd]
        active = active & (np.abs(delta - 1.0) >= tol)
    if active.any():
        raise GammaConvergenceFailure(
            f"CF stalled for {int(active.sum())} grid points at s={s}")
    res = -flat + s * np.log(flat) + np.log(h) - special.gammaln(s)
    out.ravel()[:] = res
    return out


def kernel(n, z, w):
    """Rescaled Ginibre kernel K~_n(z, w), computed entirely in log space.

    K~_n(z, w) = (n/pi) e^{-n(|z|^2 + |w|^2 - 2 z conj(w))/2}
                 Gamma(n, n z conj(w)) / Gamma(n).

    The diagonal specializes to (n/pi) Q(n, n|z|^2) with Q the regularized
    upper incomplete gamma.
    """
    z = complex(z)
    w = complex(w)
    if abs(z) > 3.0 or abs(w) > 3.0:
        raise ValueError("kernel evaluated for |z|, |w| <= 3 only")
    y = n * z * np.conj(w)
    logpre = math.log(n / math.pi) \
        - 0.5 * n * (abs(z) ** 2 + abs(w) ** 2) + y
    logq = log_gammaincc_complex(float(n), y)
    return complex(np.exp(logpre + logq))


def _kernel_diag_over_scale(n, r):
    """K~_n(z, z) / sqrt(4 n gamma_n) on the rescaled radial grid r."""
    m = modulus_from_rescaled(n, r)
    y = n * m * m
    logq = np.array([log_gammaincc_complex(float(n), complex(v)).real
                     for v in np.atleast_1d(y)])
    scale = math.sqrt(4.0 * n * gamma_n(n))
    return np.exp(math.log(n / math.pi) + logq) / scale, m


def _gauss_legendre(a, b, m):
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def _adaptive_1d(f, a, b, rtol, start=64, max_nodes=1 << 14):
    prev = None
    m = start
    while m <= max_nodes:
        x, w = _gauss_legendre(a, b, m)
        val = float(np.sum(f(x) * w))
        if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-300):
            return val
        prev = val
        m *= 2
    raise QuadratureBudgetExceeded(f"1d quadrature did not settle at {m} nodes")


#: radial cutoff (in rescaled units) beyond which e^{-r} kernel mass is
#: negligible at double precision
R_CUT = 46.0


def trace_K(n, sector: AnnulusSector, rtol=1e-6):
    """Tr K over the sector: 2D integral reduced radially via rescaling."""
    if n < 1000:
        raise ValueError("trace_K calibrated for n >= 1e3")
    g = gamma_n(n)
    scale = math.sqrt(4.0 * n * g)

    def integrand(r):
        dens, m = _kernel_diag_over_scale(n, r)
        return dens * m  # (K~/scale) * modulus; dr absorbs 1/scale

    val = _adaptive_1d(integrand, sector.t, sector.t + R_CUT, rtol)
    return sector.arc * val


def hs_norm_K(n, sector: AnnulusSector, rtol=1e-4, nodes=(96, 180)):
    """Hilbert-Schmidt norm ||K||_2 over the sector.

    The integrand depends on the angles only through their difference, so
    the 4D integral reduces to radii (r1, r2) x angle difference phi with
    the wedge weight (arc - |phi|).  The phi grid is graded (log-spaced)
    toward 0 where the kernel peaks on scale sqrt(gamma_n / n).
    """
    if n < 1000:
        raise ValueError("hs_norm_K calibrated for n >= 1e3")
    g = gamma_n(n)
    scale2 = 4.0 * n * g
    nr, nphi = nodes
    arc = sector.arc

    r, wr = _gauss_legendre(sector.t, sector.t + R_CUT, nr)
    m = np.asarray(modulus_from_rescaled(n, r))
    # graded phi >= 0 grid: log-spaced from well below the kernel width
    width = math.sqrt(g / n)
    phi = np.geomspace(width * 1e-3, arc, nphi)
    phi = np.concatenate([[0.0], phi])

    logpre_r = math.log(n / math.pi) - 0.5 * n * (m * m)[:, None] \
        - 0.5 * n * (m * m)[None, :]
    mm = m[:, None] * m[None, :]

    total = 0.0
    vals = np.empty(phi.size)
    for ip, p in enumerate(phi):
        y = n * mm * np.exp(1j * p)
        logq = _log_gammaincc_grid(float(n), y)
        log_abs_k = logpre_r + np.real(y) + np.real(logq)
        k2 = np.exp(2.0 * log_abs_k)  # |K~|^2
        # radial measure: m dm = m dr / scale per variable
        inner = np.einsum("i,j,ij->", wr * m, wr * m, k2) / scale2
        vals[ip] = inner
    # wedge-weighted phi integral over (-arc, arc): 2 * int_0^arc (arc-p) f(p) dp
    wedge = (arc - phi)
    total = 2.0 * np.trapezoid(vals * wedge, phi)
    return math.sqrt(max(total, 0.0))


def gap_prob_fredholm(n, sector: AnnulusSector):
    """(exp(-Tr K), rigorous Fredholm error bound) for the sector.

    det(1 - K) lies within ``error`` of the returned probability, with
    error = ||K||_2 exp((||K||_2 + 1)^2 / 2 - Tr K).
    """
    if sector.a == sector.b:
        return 1.0, 0.0
    tr = trace_K(n, sector)
    hs = hs_norm_K(n, sector)
    prob = math.exp(-tr)
    err = hs * math.exp((hs + 1.0) ** 2 / 2.0 - tr)
    return prob, err


@dataclass(frozen=True)
class RadialQuad:
    """Quadrature budget for Laplace functionals."""

    nodes: int = 800
    r_max: float = float("nan")  # nan: choose from the Gamma tail
    rtol: float = 1e-8
    tail: float = 1e-18


def laplace_functional_radial(n, g, quad: RadialQuad = RadialQuad()):
    """prod_k E[exp(-g(r(sqrt(Gamma_k/n))))] for a radial observable g.

    g maps the rescaled radius r to [0, inf) and must vanish below some
    finite t (pass g with compact lower support).  Each factor is a 1D
    quadrature of (1 - e^{-g}) against the Gamma(k, 1) density, expressed
    in the rescaled variable; factors with negligible mass above the
    support are skipped.
    """
    gn = gamma_n(n)
    scale = math.sqrt(4.0 * n * gn)

    # support detection: find the smallest r with g > 0 on a coarse probe
    probe = np.linspace(-8.0, 60.0, 4097)
    gp = np.asarray([g(r) for r in probe])
    if np.any(gp < 0):
        raise ValueError("g must be non-negative")
    nz = np.nonzero(gp > 0)[0]
    if nz.size == 0:
        return 1.0
    t = probe[max(nz[0] - 1, 0)]

    if math.isnan(quad.r_max):
        # cover the Gamma_n upper tail: x up to n + 50 sqrt(n)
        r_hi = (n + 50.0 * math.sqrt(n)) / n
        r_max = float(rescale_radius(n, math.sqrt(r_hi)))
    else:
        r_max = quad.r_max
    if r_max <= t:
        return 1.0

    x_lo = n * float(modulus_from_rescaled(n, t)) ** 2
    ks = np.arange(1, n + 1, dtype=float)
    tail_mass = special.gammaincc(ks, x_lo)
    keep = tail_mass > quad.tail
    if not keep.any():
        return 1.0
    ks = ks[keep]

    prev = None
    m_nodes = quad.nodes
    for _ in range(6):
        r, w = _gauss_legendre(t, r_max, m_nodes)
        m = np.asarray(modulus_from_rescaled(n, r))
        x = n * m * m
        dxdr = 2.0 * n * m / scale
        one_minus = -np.expm1(-np.asarray([g(v) for v in r]))
        # log Gamma(k,1) density at x, vectorized over (k, node)
        logpdf = ((ks[:, None] - 1.0) * np.log(x)[None, :]
                  - x[None, :] - special.gammaln(ks)[:, None])
        integ = np.exp(logpdf) @ (w * dxdr * one_minus)
        integ = np.clip(integ, 0.0, 1.0 - 1e-15)
        val = float(np.exp(np.sum(np.log1p(-integ))))
        if prev is not None and abs(val - prev) <= quad.rtol * max(abs(val), 1e-300):
            return val
        prev = val
        m_nodes *= 2
    raise QuadratureBudgetExceeded("laplace functional quadrature did not settle")


def smoothstep(u):
    """C^1 smoothstep: 0 below 0, 1 above 1, 3u^2 - 2u^3 between."""
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def indicator_smoothed(t, width=0.05, height=1.0):
    """Smoothed height * 1[r >= t] ramping up on [t, t + width]."""
    def g(r):
        return height * smoothstep((r - t) / width)
    return g
