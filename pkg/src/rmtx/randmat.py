"""Matrix sampling and spectral computations.

Samples n x n i.i.d. matrices (entries n^{-1/2} chi for the supported
entry laws), forms the Hermitization of X - z, and computes everything
spectral: non-Hermitian eigenvalues, singular triples, resolvent traces,
two-resolvent traces, and singular-vector overlaps.

All resolvent quantities are evaluated from singular decompositions, never
from direct (H - i eta)^{-1} solves: one O(n^3) factorization per z serves
every (eta, A) query.  Singular vectors carry the 1/2-normalization
||u||^2 = ||v||^2 = 1/2, so the Hermitization eigenvectors w_{+-i} =
(u_i, +-v_i) are unit vectors.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import EigFailure, IndexOutOfRange, MissingZ, SvdFailure

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class EntryLaw:
    """Entry distribution chi with E chi = 0, E|chi|^2 = 1, E chi^2 = 0."""

    tag: str

    def sample(self, rng, shape):
        if self.tag == "ComplexGaussian":
            return (rng.standard_normal(shape) +
                    1j * rng.standard_normal(shape)) / _SQRT2
        if self.tag == "ComplexBernoulli":
            re = rng.integers(0, 2, size=shape) * 2 - 1
            im = rng.integers(0, 2, size=shape) * 2 - 1
            return (re + 1j * im) / _SQRT2
        if self.tag == "ComplexUniform":
            re = rng.uniform(-1.0, 1.0, size=shape)
            im = rng.uniform(-1.0, 1.0, size=shape)
            return np.sqrt(1.5) * (re + 1j * im)
        raise ValueError(f"unknown entry law {self.tag!r}")


COMPLEX_GAUSSIAN = EntryLaw("ComplexGaussian")
COMPLEX_BERNOULLI = EntryLaw("ComplexBernoulli")
COMPLEX_UNIFORM = EntryLaw("ComplexUniform")

LAWS = {law.tag: law for law in
        (COMPLEX_GAUSSIAN, COMPLEX_BERNOULLI, COMPLEX_UNIFORM)}


def sample_iid(n, law=COMPLEX_GAUSSIAN, seed=None):
    """n x n matrix with i.i.d. entries n^{-1/2} chi; deterministic per seed."""
    if n < 2:
        raise ValueError("n >= 2 required")
    rng = seed if isinstance(seed, np.random.Generator) \
        else np.random.default_rng(seed)
    if isinstance(law, str):
        law = LAWS[law]
    return law.sample(rng, (n, n)) / np.sqrt(n)


def ou_interpolate(X, XGin, s):
    """Ornstein-Uhlenbeck interpolation sqrt(1 - s^2) X + s XGin."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    if X.shape != XGin.shape:
        raise ValueError("shape mismatch")
    return np.sqrt(1.0 - s * s) * X + s * XGin


@dataclass
class SpectralData:
    """Spectral decomposition of one sample: eigenvalues + per-z triples."""

    n: int
    sigma: np.ndarray = None          # eigenvalues, decreasing modulus
    svd: dict = field(default_factory=dict)  # z -> (lam asc, U, V); cols 1/2-normalized
    _overlap_cache: dict = field(default_factory=dict, repr=False)

    def zs(self):
        return list(self.svd.keys())

    def _entry(self, z):
        key = complex(z)
        if key not in self.svd:
            raise MissingZ(f"no singular data cached for z={z}")
        return self.svd[key]

    def overlap_matrices(self, z1, z2):
        """Cached n x n overlap matrices (UU, UV, VU, VV) between two z's.

        Entry (i, j) of UU is <u_i^{z1}, u_j^{z2}> with the
        1/2-normalization, and similarly for the mixed blocks.
        """
        key = (complex(z1), complex(z2))
        if key not in self._overlap_cache:
            _, U1, V1 = self._entry(z1)
            _, U2, V2 = self._entry(z2)
            self._overlap_cache[key] = (
                U1.conj().T @ U2, U1.conj().T @ V2,
                V1.conj().T @ U2, V1.conj().T @ V2,
            )
        return self._overlap_cache[key]


def spectrum(X) -> SpectralData:
    """Full non-Hermitian eigendecomposition, modulus-sorted."""
    try:
        sig = np.linalg.eigvals(np.asarray(X, dtype=complex))
    except np.linalg.LinAlgError as exc:
        raise EigFailure(str(exc)) from exc
    order = np.argsort(-np.abs(sig), kind="stable")
    n = X.shape[0]
    return SpectralData(n=n, sigma=sig[order])


def svd_z(X, z, data: SpectralData = None) -> SpectralData:
    """Singular triples of X - z with the 1/2-normalization, lam ascending.

    Pass an existing SpectralData to accumulate several z's on one sample.
    """
    X = np.asarray(X, dtype=complex)
    n = X.shape[0]
    if data is None:
        data = SpectralData(n=n)
    try:
        U, s, Vh = np.linalg.svd(X - complex(z) * np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(str(exc)) from exc
    # ascending order; halve the norms so ||u||^2 = ||v||^2 = 1/2
    U = U[:, ::-1] / _SQRT2
    V = Vh.conj().T[:, ::-1] / _SQRT2
    data.svd[complex(z)] = (s[::-1].copy(), U, V)
    return data


def singular_values(X, z):
    """Ascending singular values of X - z (no vectors)."""
    X = np.asarray(X, dtype=complex)
    n = X.shape[0]
    try:
        s = np.linalg.svd(X - complex(z) * np.eye(n), compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(str(exc)) from exc
    return s[::-1].copy()


def resolvent_trace(S: SpectralData, z, eta, A):
    """<G^z(i eta) A> for a block-constant A from cached singular triples.

    Spectral sum over the mirrored Hermitization pairs: with
    s_i = <u_i, v_i>,

        <G A> = (1/2n) sum_i [ (a11 + a22) i eta / (lam_i^2 + eta^2)
                              + 2 lam_i (a12 s_i + a21 conj(s_i))
                                / (lam_i^2 + eta^2) ].
    """
    if eta == 0:
        raise ValueError("eta must be nonzero")
    lam, U, V = S._entry(z)
    A = np.asarray(A, dtype=complex)
    denom = lam * lam + eta * eta
    total = (A[0, 0] + A[1, 1]) * np.sum(1j * eta / denom)
    if A[0, 1] != 0 or A[1, 0] != 0:
        s = np.einsum("ij,ij->j", U.conj(), V)
        total += 2.0 * np.sum(lam * (A[0, 1] * s + A[1, 0] * s.conj()) / denom)
    return complex(total / (2.0 * S.n))


def resolvent_iso(S: SpectralData, z, eta, x, y):
    """Isotropic matrix element <x, G^z(i eta) y>."""
    lam, U, V = S._entry(z)
    n = S.n
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    # w_{+-i} = (u_i, +-v_i); <x, w> <w, y> / (lam - i eta)
    xu = x[:n].conj() @ U
    xv = x[n:].conj() @ V
    yu = U.conj().T @ y[:n]
    yv = V.conj().T @ y[n:]
    plus = (xu + xv) * (yu + yv)
    minus = (xu - xv) * (yu - yv)
    return complex(np.sum(plus / (lam - 1j * eta) + minus / (-lam - 1j * eta)))


def _kernel(lam, eta, kind):
    if kind == "g":
        return 1.0 / (lam - 1j * eta)
    if kind == "gstar":
        return 1.0 / (lam + 1j * eta)
    if kind == "im":
        return eta / (lam * lam + eta * eta)
    raise ValueError(f"unknown resolvent kind {kind!r}")


def two_resolvent_trace(S: SpectralData, z1, eta1, z2, eta2, A, B,
                        im_flags=("g", "g")):
    """<G1 A G2 B> (or Im/conjugate variants) via double spectral sums.

    ``im_flags`` selects the kernel per resolvent: "g" for G(i eta),
    "gstar" for G(i eta)^* = G(-i eta), "im" for Im G(i eta).  Cost is
    O(n^2) per evaluation once the overlap matrices are cached.
    """
    lam1, _, _ = S._entry(z1)
    lam2, _, _ = S._entry(z2)
    UU, UV, VU, VV = S.overlap_matrices(z1, z2)
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)

    def sign_block(a11, a12, a21, a22, M_uu, M_uv, M_vu, M_vv):
        # rows: sign of z1-side eigenvalue; cols: sign of z2-side
        return np.block([
            [a11 * M_uu + a12 * M_uv + a21 * M_vu + a22 * M_vv,
             a11 * M_uu - a12 * M_uv + a21 * M_vu - a22 * M_vv],
            [a11 * M_uu + a12 * M_uv - a21 * M_vu - a22 * M_vv,
             a11 * M_uu - a12 * M_uv - a21 * M_vu + a22 * M_vv],
        ])

    WAW = sign_block(A[0, 0], A[0, 1], A[1, 0], A[1, 1], UU, UV, VU, VV)
    # <w_l^{(2)}, B w_k^{(1)}> as a (k, l) array: conjugate transposed blocks
    WBW = sign_block(B[0, 0].conjugate(), B[1, 0].conjugate(),
                     B[0, 1].conjugate(), B[1, 1].conjugate(),
                     UU.conj(), UV.conj(), VU.conj(), VV.conj())

    g1 = np.concatenate([_kernel(lam1, eta1, im_flags[0]),
                         _kernel(-lam1, eta1, im_flags[0])])
    g2 = np.concatenate([_kernel(lam2, eta2, im_flags[1]),
                         _kernel(-lam2, eta2, im_flags[1])])
    total = np.einsum("k,kl,kl,l->", g1, WAW, WBW, g2)
    return complex(total / (2.0 * S.n))


def overlaps(S: SpectralData, z1, z2, i, j):
    """(|<u_i, u_j>|^2, |<v_i, v_j>|^2, |<u_i, v_j>|^2) across two z's.

    Indices follow the +-i convention: u_{-i} = u_i, v_{-i} = -v_i; i = 0
    is invalid.
    """
    n = S.n
    for idx in (i, j):
        if idx == 0 or abs(idx) > n:
            raise IndexOutOfRange(f"index {idx} outside [-{n}, {n}] \\ 0")
    UU, UV, VU, VV = S.overlap_matrices(z1, z2)
    ii, jj = abs(i) - 1, abs(j) - 1
    sv = np.sign(j)  # v-sign on the z2 side
    ov_uu = abs(UU[ii, jj]) ** 2
    ov_vv = abs(VV[ii, jj]) ** 2
    ov_uv = abs(UV[ii, jj] * sv) ** 2
    return float(ov_uu), float(ov_vv), float(ov_uv)


def hermitization(X, z):
    """Dense 2n x 2n Hermitization of X - z (test/oracle use)."""
    X = np.asarray(X, dtype=complex)
    n = X.shape[0]
    Y = X - complex(z) * np.eye(n)
    top = np.hstack([np.zeros((n, n)), Y])
    bot = np.hstack([Y.conj().T, np.zeros((n, n))])
    return np.vstack([top, bot])
