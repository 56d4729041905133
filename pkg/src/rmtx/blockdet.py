"""Deterministic block-matrix layer.

Every block-constant 2n x 2n matrix is represented by its 2 x 2 block of
scalars; the canonical basis is

    E_PLUS = diag(1, 1)     E_MINUS = diag(1, -1)
    F      = [[0, 1],       F_STAR  = [[0, 0],
              [0, 0]]                  [1, 0]]

and <V> = (v11 + v22)/2 is the normalized trace.  The covariance operator
S, the deterministic one-resolvent approximation M^z, the two-body
stability operator and its small eigenvalues beta_+/-, and the
two-resolvent deterministic approximations all live here.

The closed-form beta_+/- / b / a_+/- expressions and the numerical 4 x 4
inversion of the stability operator are two independent computational
routes; tests hold them against each other to 1e-12.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import dyson
from .errors import DegenerateStability, SingularM

E_PLUS = np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex)
E_MINUS = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
F = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
F_STAR = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)

#: basis order used by the 4x4 representation of the stability operator
BASIS = (E_PLUS, E_MINUS, F, F_STAR)


@dataclass(frozen=True)
class StabilityData:
    """Small eigenvalues and derived scalars of the stability operator."""

    beta_plus: complex
    beta_minus: complex
    b: float
    a_plus: complex
    a_minus: complex


def ntrace(V):
    """Normalized trace <V> of the block-constant matrix V."""
    return (V[0, 0] + V[1, 1]) / 2.0


def to_coords(V):
    """Coordinates of V in the basis (E_PLUS, E_MINUS, F, F_STAR)."""
    return np.array([
        (V[0, 0] + V[1, 1]) / 2.0,
        (V[0, 0] - V[1, 1]) / 2.0,
        V[0, 1],
        V[1, 0],
    ], dtype=complex)


def from_coords(c):
    return c[0] * E_PLUS + c[1] * E_MINUS + c[2] * F + c[3] * F_STAR


def cov_S(V):
    """Covariance operator S[V] = <V E+> E+ - <V E-> E-.

    On 2x2 representatives this is the diagonal swap diag(v22, v11) with
    off-diagonals zeroed.
    """
    return np.array([[V[1, 1], 0.0], [0.0, V[0, 0]]], dtype=complex)


def z_matrix(z):
    z = complex(z)
    return np.array([[0.0, z], [np.conj(z), 0.0]], dtype=complex)


def m_matrix(z, eta):
    """Deterministic approximation M^z(i eta) = [[m, -z u], [-conj(z) u, m]]."""
    sol = dyson.solve_m(z, 1j * eta)
    z = complex(z)
    return np.array([
        [sol.m, -z * sol.u],
        [-np.conj(z) * sol.u, sol.m],
    ], dtype=complex)


def mde_residual(M, z, eta):
    """Max-entry norm of -M^{-1} - (i eta E+ + Z + S[M])."""
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if abs(det) < 1e-300:
        raise SingularM(f"det M = {det}")
    Minv = np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]],
                    dtype=complex) / det
    R = -Minv - (1j * eta * E_PLUS + z_matrix(z) + cov_S(M))
    return float(np.max(np.abs(R)))


def _solutions(z1, eta1, z2, eta2):
    s1 = dyson.solve_m(z1, 1j * eta1)
    s2 = dyson.solve_m(z2, 1j * eta2)
    return s1, s2


def stab_eigs(z1, eta1, z2, eta2) -> StabilityData:
    """Closed-form small eigenvalues beta_+/- of the stability operator.

    beta_+/- = 1 - u1 u2 Re[z1 conj(z2)] +/- sqrt(s) with
    s = m1^2 m2^2 - u1^2 u2^2 (Im[z1 conj(z2)])^2 and the principal branch
    of the square root.  Also returns

        b   = Im[z1 conj(z2)] u1 u2 / (beta_+ beta_-)           (real)
        a_+ = <M12^{E+} E+>,  a_- = -<M12^{E-} E->

    in closed form; the sign bookkeeping of a_+/- is pinned by the 4x4
    oracle, not re-derived.
    """
    s1, s2 = _solutions(z1, eta1, z2, eta2)
    z1, z2 = complex(z1), complex(z2)
    zw = z1 * np.conj(z2)
    uu = s1.u * s2.u
    mm = s1.m * s2.m
    s = mm * mm - uu * uu * (zw.imag ** 2)
    root = np.sqrt(complex(s))
    base = 1.0 - uu * zw.real
    beta_plus = base + root
    beta_minus = base - root
    prod = beta_plus * beta_minus
    if abs(prod) < 1e-300:
        raise DegenerateStability(f"beta_+ beta_- = {prod}")
    b = (zw.imag * uu / prod).real
    a_plus = -1.0 + (mm + (beta_plus + beta_minus) / 2.0) / prod
    a_minus = -1.0 + (-mm + (beta_plus + beta_minus) / 2.0) / prod
    return StabilityData(beta_plus=complex(beta_plus),
                         beta_minus=complex(beta_minus),
                         b=float(b),
                         a_plus=complex(a_plus),
                         a_minus=complex(a_minus))


def stab_matrix(z1, eta1, z2, eta2):
    """4x4 matrix of V -> V - M1 S[V] M2 on the basis (E+, E-, F, F*)."""
    M1 = m_matrix(z1, eta1)
    M2 = m_matrix(z2, eta2)
    cols = []
    for B in BASIS:
        cols.append(to_coords(B - M1 @ cov_S(B) @ M2))
    return np.column_stack(cols)


def m12(z1, eta1, z2, eta2, A):
    """Two-resolvent deterministic approximation M12^A = B12^{-1}[M1 A M2].

    Solved as a 4x4 linear system for the action of the stability operator
    on the block basis; the residual ||B12[result] - M1 A M2|| is checked
    to 1e-11.
    """
    M1 = m_matrix(z1, eta1)
    M2 = m_matrix(z2, eta2)
    B = stab_matrix(z1, eta1, z2, eta2)
    rhs = M1 @ np.asarray(A, dtype=complex) @ M2
    try:
        x = np.linalg.solve(B, to_coords(rhs))
    except np.linalg.LinAlgError as exc:
        raise DegenerateStability(str(exc)) from exc
    out = from_coords(x)
    res = out - M1 @ cov_S(out) @ M2 - rhs
    scale = max(1.0, float(np.max(np.abs(rhs))))
    if float(np.max(np.abs(res))) > 1e-11 * scale:
        raise DegenerateStability(
            f"stability solve residual {np.max(np.abs(res)):.3e}")
    return out


def m12_im(z1, eta1, z2, eta2, A):
    """Deterministic approximation of Im G1 A Im G2.

    Uses Im G(i eta) = (G(i eta) - G(-i eta)) / (2i) twice, i.e. the
    fourfold combination -(1/4) sum_{s1,s2} s1 s2 M12^A(s1 eta1, s2 eta2).
    """
    if eta1 <= 0 or eta2 <= 0:
        raise DegenerateStability("m12_im requires eta1, eta2 > 0")
    out = np.zeros((2, 2), dtype=complex)
    for sgn1 in (+1.0, -1.0):
        for sgn2 in (+1.0, -1.0):
            out -= 0.25 * sgn1 * sgn2 * m12(z1, sgn1 * eta1, z2, sgn2 * eta2, A)
    return out


def gamma_param(z1, eta1, z2, eta2):
    """Control parameter gamma = |z1 - z2| + |eta1|/rho1 + |eta2|/rho2."""
    s1, s2 = _solutions(z1, eta1, z2, eta2)
    return (abs(complex(z1) - complex(z2))
            + abs(eta1) / s1.rho + abs(eta2) / s2.rho)


def ell_param(z1, eta1, z2, eta2):
    """Control parameter ell = min_i |eta_i| rho_i."""
    s1, s2 = _solutions(z1, eta1, z2, eta2)
    return min(abs(eta1) * s1.rho, abs(eta2) * s2.rho)
