"""Dense complex-matrix kernel for the C*-algebra of n x n matrices.

Elements of the algebra are plain ``numpy`` complex arrays. The spectral
engine is a cyclic Jacobi method with round-robin (parallel) pair ordering:
within one round every pair is disjoint, so the whole round is applied as a
single unitary. Singular values come from the one-sided (Hestenes) variant,
which keeps small singular values accurate to working precision instead of
squaring them.
"""
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import NoConvergence, NotHermitian, NotPSD

EPS = np.finfo(float).eps
DEFAULT_TOL = 1e-9
DEFAULT_RANK_TOL = 1e-10
MAX_SWEEPS = 100


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(a):
    """Coerce ``a`` to a square complex 2-d array (scalars become 1x1)."""
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def star(a):
    """Involution of the algebra: the conjugate transpose."""
    return np.asarray(a).conj().T


def sym(a):
    """Hermitian part (a + a*) / 2."""
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + a.conj().T)


def scale(a):
    """max(1, ||a||_F): the factor relative tolerances are multiplied by."""
    return max(1.0, float(np.linalg.norm(a)))


@lru_cache(maxsize=None)
def _rounds(n):
    """Round-robin schedule: n-1 (or n) rounds of disjoint index pairs."""
    players = list(range(n + n % 2))
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        if pairs:
            p, q = zip(*pairs)
            rounds.append((np.array(p), np.array(q)))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _rotations(app, aqq, apq):
    """Vectorized 2x2 Hermitian Jacobi rotations.

    Returns ``(c, s, u)`` such that the unitary ``[[c, s], [-u s, u c]]``
    annihilates the off-diagonal entry of ``[[app, apq], [conj(apq), aqq]]``.
    """
    r = np.abs(apq)
    active = r > 0.0
    safe_r = np.where(active, r, 1.0)
    u = np.where(active, np.conj(apq) / safe_r, 1.0)
    theta = (aqq - app) / (2.0 * safe_r)
    sign = np.where(theta >= 0.0, 1.0, -1.0)
    big = np.abs(theta) > 1e150
    theta_sq = np.where(big, 0.0, theta) ** 2
    t = np.where(big, 0.5 / np.where(big, theta, 1.0), sign / (np.abs(theta) + np.sqrt(theta_sq + 1.0)))
    t = np.where(active, t, 0.0)
    c = 1.0 / np.sqrt(t * t + 1.0)
    return c, t * c, u


def _rotation_matrix(n, p, q, c, s, u):
    j = np.eye(n, dtype=complex)
    j[p, p] = c
    j[p, q] = s
    j[q, p] = -u * s
    j[q, q] = u * c
    return j


def hermitian_defect(a):
    """Operator norm of a - a*."""
    a = np.asarray(a, dtype=complex)
    d = a - a.conj().T
    fro = float(np.linalg.norm(d))
    if fro == 0.0:
        return 0.0
    # i(a - a*) is Hermitian; its spectral radius is the operator norm
    w = _jacobi(1j * d).eigenvalues
    return float(np.max(np.abs(w)))


def _check_hermitian(a, tol_herm):
    d = a - a.conj().T
    bound = tol_herm * scale(a)
    # Frobenius bounds the operator norm from above: cheap accept path
    if float(np.linalg.norm(d)) <= bound:
        return
    defect = hermitian_defect(a)
    if defect > bound:
        raise NotHermitian(defect, bound)


def _jacobi(h, max_sweeps=MAX_SWEEPS):
    n = h.shape[0]
    a = 0.5 * (h + h.conj().T)
    v = np.eye(n, dtype=complex)
    fro = float(np.linalg.norm(a))
    if n == 1 or fro == 0.0:
        return SpectralDecomposition(np.real(np.diag(a)).copy(), v)
    stop = 4.0 * n * EPS * fro
    rounds = _rounds(n)
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= stop:
            break
        for p, q in rounds:
            c, s, u = _rotations(a[p, p].real, a[q, q].real, a[p, q])
            j = _rotation_matrix(n, p, q, c, s, u)
            a = j.conj().T @ a @ j
            a[p, q] = 0.0
            a[q, p] = 0.0
            v = v @ j
        a = 0.5 * (a + a.conj().T)
    else:
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off > stop:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps (off-norm {off:.3e})")
    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return SpectralDecomposition(w[order], v[:, order])


def hermitian_eigen(a, tol_herm=DEFAULT_TOL, max_sweeps=MAX_SWEEPS):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Eigenvalues are returned ascending with unitary eigenvectors as columns.

    Raises:
        NotHermitian: if ||a - a*|| exceeds ``tol_herm * max(1, ||a||)``.
        NoConvergence: if the sweep budget is exhausted.
    """
    a = as_matrix(a)
    _check_hermitian(a, tol_herm)
    return _jacobi(a, max_sweeps)


def eigvalsh(a, tol_herm=DEFAULT_TOL):
    return hermitian_eigen(a, tol_herm).eigenvalues


def lambda_min(a, tol_herm=DEFAULT_TOL):
    return float(eigvalsh(a, tol_herm)[0])


def lambda_max(a, tol_herm=DEFAULT_TOL):
    return float(eigvalsh(a, tol_herm)[-1])


def loewner_leq(a, b, tol=DEFAULT_TOL):
    """Decide a <= b in the Loewner order.

    True iff lambda_min(b - a) >= -tol * max(1, ||a||_F, ||b||_F). Scaling by
    the operands rather than by b - a keeps the test homogeneous when b - a is
    itself rounding residue, as at a tight bound. Both inputs must be
    Hermitian up to the same relative tolerance.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    _check_hermitian(a, tol)
    _check_hermitian(b, tol)
    w = _jacobi(b - a).eigenvalues
    return bool(w[0] >= -tol * max(scale(a), scale(b)))


def svd(a, max_sweeps=MAX_SWEEPS):
    """Singular value decomposition by one-sided Jacobi.

    Returns ``(u, s, vh)`` with ``s`` descending and ``a = u @ diag(s) @ vh``.
    Columns of ``u`` paired with zero singular values are left as zero.
    """
    w = np.array(a, dtype=complex, ndmin=2)
    _, n = w.shape
    v = np.eye(n, dtype=complex)
    rounds = _rounds(n) if n > 1 else ()
    tiny = np.finfo(float).tiny
    for _ in range(max_sweeps):
        worst = 0.0
        for p, q in rounds:
            wp, wq = w[:, p], w[:, q]
            alpha = np.sum(np.abs(wp) ** 2, axis=0)
            beta = np.sum(np.abs(wq) ** 2, axis=0)
            gamma = np.sum(wp.conj() * wq, axis=0)
            denom = np.sqrt(alpha * beta)
            live = denom > tiny
            rel = np.where(live, np.abs(gamma) / np.where(live, denom, 1.0), 0.0)
            worst = max(worst, float(rel.max()))
            gamma = np.where(live, gamma, 0.0)
            c, s, u = _rotations(alpha, beta, gamma)
            j = _rotation_matrix(n, p, q, c, s, u)
            w = w @ j
            v = v @ j
        if worst <= 2.0 * n * EPS:
            break
    else:
        raise NoConvergence(f"one-sided Jacobi did not converge in {max_sweeps} sweeps")
    sv = np.sqrt(np.sum(np.abs(w) ** 2, axis=0))
    order = np.argsort(-sv, kind="stable")
    sv = sv[order]
    w = w[:, order]
    v = v[:, order]
    nz = sv > 0.0
    u_mat = np.zeros_like(w)
    u_mat[:, nz] = w[:, nz] / sv[nz]
    return u_mat, sv, v.conj().T


def singular_values(a):
    return svd(a)[1]


def operator_norm(a):
    """C*-norm of the algebra: the largest singular value."""
    a = np.array(a, dtype=complex, ndmin=2)
    if not a.size:
        return 0.0
    return float(singular_values(a)[0])


def pseudo_inverse(a, rank_tol=DEFAULT_RANK_TOL):
    """Moore-Penrose inverse; singular values below rank_tol * sigma_max count as zero."""
    u, s, vh = svd(a)
    if not s.size or s[0] == 0.0:
        return np.zeros_like(np.asarray(a, dtype=complex).T)
    keep = s > rank_tol * s[0]
    return (vh[keep].conj().T / s[keep]) @ u[:, keep].conj().T


def numerical_rank(a, rank_tol=DEFAULT_RANK_TOL):
    s = singular_values(a)
    if not s.size or s[0] == 0.0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def psd_function(a, func, tol=DEFAULT_TOL):
    """Apply ``func`` to the spectrum of a PSD matrix, clamping [-tol, 0) to 0."""
    a = as_matrix(a)
    dec = hermitian_eigen(a, tol)
    w = dec.eigenvalues
    bound = tol * scale(a)
    if w[0] < -bound:
        raise NotPSD(w[0], bound)
    w = np.clip(w, 0.0, None)
    v = dec.eigenvectors
    return (v * func(w)) @ v.conj().T


def positive_sqrt(a, tol=DEFAULT_TOL):
    """The unique PSD square root; NotPSD when lambda_min < -tol * max(1, ||a||)."""
    return psd_function(a, np.sqrt, tol)


def abs_element(a, tol=DEFAULT_TOL):
    """|a| = (a* a)^(1/2)."""
    a = as_matrix(a)
    return positive_sqrt(star(a) @ a, tol)


def commutator_norm(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    return operator_norm(a @ b - b @ a)
