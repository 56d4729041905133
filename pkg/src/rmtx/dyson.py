"""Scalar Dyson equation for the Hermitization of X - z.

The self-consistent scalar function m = m^z(w) is the unique solution of

    -1/m = w + m - |z|^2 / (w + m),        Im(m) Im(w) > 0.

Clearing denominators gives the monic cubic actually solved here,

    m^3 + 2 w m^2 + (w^2 - |z|^2 + 1) m + w = 0,

which avoids fixed-point iteration stalls near the cusp |z| = 1.  The
auxiliary ratio u = m / (w + m) and the density rho = |Im m| / pi complete
the solution.  On the imaginary axis (w = i eta) m is purely imaginary and
u is real.

Boundary values (eta -> 0) are exposed only through :func:`density` and
:func:`support_gap`, which evaluate at ``eta = BOUNDARY_ETA`` with one
Richardson step; :func:`solve_m` itself rejects Im(w) = 0.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from .errors import AmbiguousRoot, NoGap, NoValidRoot, QuadratureFailure

#: spectral height used for eta -> 0+ boundary evaluations
BOUNDARY_ETA = 1e-9

#: calibrated constant for the quartic-order expansion residuals; the exact
#: next-order coefficients are pi^4 |z|^2 (for u) and 2 pi^4 |z|^6 (for
#: eta/Im m), i.e. up to ~941 on the admissible domain |z| <= 1.3
EXPANSION_C = 1000.0


@dataclass(frozen=True)
class SpectralPoint:
    """A pair (z, w) parameterizing resolvents and Dyson solutions."""

    z: complex
    w: complex

    def __post_init__(self):
        if complex(self.w).imag == 0:
            raise NoValidRoot("SpectralPoint requires Im w != 0")


@dataclass(frozen=True)
class DysonSolution:
    """Admissible root m, ratio u = m/(w+m) and density value rho."""

    m: complex
    u: complex
    rho: float


def _cubic_residual(m, z, w):
    zz = abs(z) ** 2
    return m ** 3 + 2.0 * w * m ** 2 + (w * w - zz + 1.0) * m + w


_OMEGA = complex(-0.5, math.sqrt(3.0) / 2.0)


def _cubic_roots(b, c, d):
    """All three roots of m^3 + b m^2 + c m + d via Cardano.

    The cube-root source is picked with the larger magnitude to avoid
    cancellation; degenerate p = q = 0 collapses to the triple root.
    """
    p = c - b * b / 3.0
    q = 2.0 * b ** 3 / 27.0 - b * c / 3.0 + d
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    sq = np.sqrt(complex(disc))
    s1 = -q / 2.0 + sq
    s2 = -q / 2.0 - sq
    s = s1 if abs(s1) >= abs(s2) else s2
    if s == 0:
        t0 = 0.0 + 0.0j
        return (t0 - b / 3.0,) * 3
    u = s ** (1.0 / 3.0)
    roots = []
    for k in range(3):
        uk = u * _OMEGA ** k
        roots.append(uk - p / (3.0 * uk) - b / 3.0)
    return tuple(roots)


def _newton_refine(m, z, w, steps=3):
    zz = abs(z) ** 2
    for _ in range(steps):
        f = m ** 3 + 2.0 * w * m ** 2 + (w * w - zz + 1.0) * m + w
        fp = 3.0 * m ** 2 + 4.0 * w * m + (w * w - zz + 1.0)
        if fp == 0:
            break
        step = f / fp
        m = m - step
        if abs(step) <= 1e-17 * (1.0 + abs(m)):
            break
    return m


def solve_m(z, w) -> DysonSolution:
    """Solve the scalar cubic at (z, w) and select the admissible root.

    Raises
    ------
    NoValidRoot
        If Im(w) = 0 or no root satisfies the side condition.
    AmbiguousRoot
        If two distinct roots satisfy the side condition beyond tolerance.
    """
    z = complex(z)
    w = complex(w)
    if w.imag == 0:
        raise NoValidRoot("solve_m requires Im w != 0")

    zz = abs(z) ** 2
    roots = _cubic_roots(2.0 * w, w * w - zz + 1.0, w)
    sgn = 1.0 if w.imag > 0 else -1.0
    tol = 1e-15 * abs(w.imag)
    roots = [_newton_refine(complex(m), z, w) for m in roots]
    candidates = [m for m in roots if sgn * m.imag > tol]
    if not candidates:
        # fall back to the companion-matrix roots once before giving up
        roots = [_newton_refine(complex(m), z, w)
                 for m in np.roots([1.0, 2.0 * w, w * w - zz + 1.0, w])]
        candidates = [m for m in roots if sgn * m.imag > tol]
    if not candidates:
        raise NoValidRoot(f"no admissible root at z={z}, w={w}")
    if len(candidates) > 1:
        # np.roots noise can push a spurious root marginally across zero;
        # only a second root clearly on the admissible side is ambiguous.
        ranked = sorted(candidates, key=lambda m: sgn * m.imag, reverse=True)
        if sgn * ranked[1].imag > 1e-10 * (1.0 + abs(ranked[0].imag)):
            raise AmbiguousRoot(f"two admissible roots at z={z}, w={w}")
    m = max(candidates, key=lambda c: sgn * c.imag)

    if sgn * m.imag <= 0:
        raise NoValidRoot(f"refined root lost the side condition at z={z}, w={w}")
    # residual of the original equation, measured against its term size:
    # for |m| << 1 the terms are O(1/|m|), so an absolute 1e-12 target is
    # not representable in float64 and the check must be scale-aware
    res = abs(-1.0 / m - (w + m - zz / (w + m)))
    scale = max(1.0, abs(1.0 / m))
    if res > 1e-12 * (1.0 + abs(m)) * scale:
        raise NoValidRoot(f"cubic residual {res:.3e} too large at z={z}, w={w}")

    if w.real == 0.0:
        # exactify the symmetry class: m purely imaginary, u real
        m = complex(0.0, m.imag)
    u = m / (w + m)
    if w.real == 0.0:
        u = complex(u.real, 0.0)
    return DysonSolution(m=m, u=u, rho=abs(m.imag) / math.pi)


def solve_point(p: SpectralPoint) -> DysonSolution:
    return solve_m(p.z, p.w)


def _im_m(z, E, eta):
    return solve_m(z, complex(E, eta)).m.imag


def density(z, E) -> float:
    """Boundary density lim_{eta->0+} Im m^z(E + i eta) / pi.

    Evaluated at ``eta = BOUNDARY_ETA`` with one Richardson extrapolation
    step (the linear-in-eta term cancels, so values inside a spectral gap
    come out at the 1e-12 level rather than O(eta)).
    """
    f1 = _im_m(z, E, BOUNDARY_ETA)
    f2 = _im_m(z, E, BOUNDARY_ETA / 2.0)
    return max((2.0 * f2 - f1) / math.pi, 0.0)


@lru_cache(maxsize=256)
def _gap_edges_key(zr, zi):
    try:
        return (support_gap(complex(zr, zi)) / 2.0,)
    except NoGap:
        return ()


def _gap_edges(z):
    """Points worth flagging to the quadrature (gap edge if |z| > 1)."""
    if abs(z) <= 1.0:
        return []
    z = complex(z)
    return list(_gap_edges_key(z.real, z.imag))


def _mass(z, a, b, edges):
    pts = [p for p in edges if a < p < b]
    val, _ = integrate.quad(
        lambda x: density(z, x), a, b,
        points=pts or None, limit=300, epsabs=1e-13, epsrel=1e-11,
    )
    return val


@lru_cache(maxsize=64)
def _quantile_cache(z_key, n):
    return {}


def quantiles(z, n, i) -> float:
    """Quantile gamma_i of the boundary density: int_0^{gamma_i} rho = i/(2n).

    Computed by adaptive quadrature plus bracketed root finding to absolute
    tolerance 1e-10 in the integral; monotone in i (i = 0 returns 0 by the
    empty-integral convention).
    """
    z = complex(z)
    n = int(n)
    i = int(i)
    if i == 0:
        return 0.0
    if i < 0 or n < 1:
        raise QuadratureFailure(f"invalid quantile index i={i}, n={n}")
    cache = _quantile_cache((z.real, z.imag), n)
    if i in cache:
        return cache[i]

    target = i / (2.0 * n)
    edges = _gap_edges(z)

    # bracket: total mass is 1/2, so expand until the target is enclosed
    hi = 1.0
    total = _mass(z, 0.0, hi, edges)
    while total < target:
        if hi > 64.0:
            raise QuadratureFailure(
                f"target {target} not bracketed (total mass {total})")
        new_hi = 2.0 * hi
        total += _mass(z, hi, new_hi, edges)
        hi = new_hi

    # ascending sweep from the largest cached quantile below i
    done = [j for j in cache if j < i]
    if done:
        j0 = max(done)
        x0, f0 = cache[j0], j0 / (2.0 * n)
    else:
        x0, f0 = 0.0, 0.0

    def g(x):
        if x >= x0:
            return f0 + _mass(z, x0, x, edges) - target
        return f0 - _mass(z, x, x0, edges) - target

    gamma = optimize.brentq(g, x0, hi, xtol=1e-13, rtol=8.9e-16, maxiter=200)
    cache[i] = gamma
    return gamma


def quantile_list(z, n, indices):
    """Quantiles for several indices, sharing the cumulative sweep."""
    for i in sorted(set(int(j) for j in indices)):
        quantiles(z, n, i)  # warm the ascending cache
    return [quantiles(z, n, int(i)) for i in indices]


def support_gap(z) -> float:
    """Width Delta of the gap of rho^z around 0 (requires |z| > 1).

    Found by scan-plus-bisection: density <= 1e-12 for |E| < Delta/2 and
    > 1e-8 just above (the edge is a sharp square-root onset, so the two
    thresholds bracket the same point to ~1e-12).
    """
    z = complex(z)
    if density(z, 0.0) > 1e-8:
        raise NoGap(f"density at 0 is positive for z={z}")
    lo, hi = 0.0, None
    step = 0.02
    e = step
    while e <= 2.0:
        if density(z, e) > 1e-8:
            hi = e
            break
        lo = e
        e += step
    if hi is None:
        raise NoGap(f"no density onset found below E=2 for z={z}")
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if density(z, mid) > 1e-10:
            hi = mid
        else:
            lo = mid
    return 2.0 * lo


def expansion_checks(z, eta):
    """Quartic-order expansion residuals of u and eta/Im(m) near |z| ~ 1.

    Returns a dict with the two residuals, rho, and the calibrated bound
    ``EXPANSION_C * rho**4`` they are checked against.
    """
    sol = solve_m(z, 1j * eta)
    rho = sol.rho
    zz = abs(z) ** 2
    r_u = abs(sol.u.real - (1.0 / zz - math.pi ** 2 * rho ** 2))
    r_eta = abs(eta / sol.m.imag - (zz - 1.0 + math.pi ** 2 * rho ** 2 * zz ** 2))
    bound = EXPANSION_C * rho ** 4
    return {
        "residual_u": r_u,
        "residual_eta": r_eta,
        "rho": rho,
        "bound": bound,
        "ok": bool(r_u <= bound and r_eta <= bound),
    }
