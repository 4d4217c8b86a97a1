"""(C, C')-controlled K-operator frames and their bounds.

For a family {T_i} with controllers C, C' and operator K, the middle sum of
the frame inequality is, in stacked form,

    sum_i <T_i C x, T_i C' x> = X phi X*,   phi = rep(C) G rep(C'),

where G = sum_i rep(T_i) rep(T_i)*. Likewise <K* x, K* x> = X rep(K)* rep(K) X*.
Because X ranges over all n x (n d) matrices, each A-valued inequality for
all x is equivalent to a single Loewner inequality between these (n d)-square
matrices. All checks below are such certificates, never samples.
"""
from dataclasses import dataclass, field, replace
import math

import numpy as np

from .algebra import (
    DEFAULT_RANK_TOL,
    DEFAULT_TOL,
    hermitian_defect,
    hermitian_eigen,
    loewner_leq,
    operator_norm,
    positive_sqrt,
    scale,
    sym,
)
from .errors import (
    DimensionMismatch,
    NonCommutingControllers,
    NonHermitianMiddle,
    NotPositive,
    TooManyVectors,
)
from .module import ModuleVector
from .operators import GLPlusOperator, ModuleOperator, surjectivity_lower_bound


def pairwise_sum(mats):
    """Sum with a fixed pairwise-tree order so results are bit-stable."""
    mats = list(mats)
    if not mats:
        raise ValueError("empty sum")
    while len(mats) > 1:
        nxt = [mats[i] + mats[i + 1] for i in range(0, len(mats) - 1, 2)]
        if len(mats) % 2:
            nxt.append(mats[-1])
        mats = nxt
    return mats[0]


def _as_glplus(op, tol):
    if isinstance(op, GLPlusOperator):
        return op
    return GLPlusOperator.certify(op, tol)


@dataclass(frozen=True, eq=False)
class ControlledSystem:
    """The datum ({T_i}, C, C', K) of a controlled K-operator frame candidate."""

    family: tuple
    C: GLPlusOperator
    Cp: GLPlusOperator
    K: ModuleOperator

    def __post_init__(self):
        family = tuple(self.family)
        if not family:
            raise ValueError("the operator family must be non-empty")
        ref = family[0]
        for op in family[1:] + (self.C, self.Cp, self.K):
            ref.same_space(op)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "C", _as_glplus(self.C, DEFAULT_TOL))
        object.__setattr__(self, "Cp", _as_glplus(self.Cp, DEFAULT_TOL))

    @classmethod
    def plain(cls, family, K=None):
        """C = C' = I, i.e. a (K-)operator frame."""
        ref = family[0]
        ident = GLPlusOperator(ref.n, ref.d, np.eye(ref.size), 1.0)
        return cls(tuple(family), ident, ident, K if K is not None else ModuleOperator.identity(ref.n, ref.d))

    @property
    def n(self):
        return self.family[0].n

    @property
    def d(self):
        return self.family[0].d

    @property
    def m(self):
        return len(self.family)

    @property
    def size(self):
        return self.n * self.d

    def replace(self, **changes):
        return replace(self, **changes)

    def gram(self):
        """G = sum_i rep(T_i) rep(T_i)*, i.e. the rep of sum_i T_i* T_i."""
        return pairwise_sum(t.rep @ t.rep.conj().T for t in self.family)

    def k_gram(self):
        """rep(K K*) = rep(K)* rep(K)."""
        return self.K.rep.conj().T @ self.K.rep

    def __eq__(self, other):
        if not isinstance(other, ControlledSystem):
            return NotImplemented
        return (
            self.m == other.m
            and all(a == b for a, b in zip(self.family, other.family))
            and self.C == other.C
            and self.Cp == other.Cp
            and self.K == other.K
        )

    __hash__ = None


@dataclass(frozen=True)
class FrameBounds:
    lower: float
    upper: float
    tol: float = DEFAULT_TOL

    def as_tuple(self):
        return self.lower, self.upper


@dataclass(frozen=True, eq=False)
class MiddleOperator:
    phi: np.ndarray
    hermitian_defect: float
    symmetrized: bool = field(default=False)

    @property
    def hermitian(self):
        return sym(self.phi)


@dataclass(frozen=True)
class BoundsVerdict:
    """Outcome of verify_bounds; ``None`` marks an inequality that was not requested."""

    lower: bool | None
    upper: bool | None

    @property
    def ok(self):
        return self.lower is not False and self.upper is not False

    def __bool__(self):
        return self.ok


def middle_operator(sys):
    phi = sys.C.rep @ sys.gram() @ sys.Cp.rep
    return MiddleOperator(phi, hermitian_defect(phi))


def _checked_middle(sys, tol, symmetrize):
    mid = middle_operator(sys)
    bound = tol * scale(mid.phi)
    if mid.hermitian_defect > bound:
        if not symmetrize:
            raise NonHermitianMiddle(mid.hermitian_defect, bound)
        mid = replace(mid, symmetrized=True)
    return mid


def verify_bounds(sys, A=None, B=None, tol=DEFAULT_TOL, symmetrize=False):
    """Certify A <K* x, K* x> <= middle(x) <= B <x, x> for all x.

    Either constant may be None to skip that inequality (B alone is the
    Bessel check). ``symmetrize`` replaces a non-Hermitian middle operator by
    its Hermitian part instead of raising.
    """
    mid = _checked_middle(sys, tol, symmetrize)
    h = mid.hermitian
    lower = upper = None
    if A is not None:
        lower = loewner_leq(A * sys.k_gram(), h, tol)
    if B is not None:
        dec = hermitian_eigen(h, tol)
        if dec.eigenvalues[0] < -tol * scale(h):
            raise NotPositive(dec.eigenvalues[0], tol * scale(h))
        upper = loewner_leq(h, B * np.eye(sys.size), tol)
    return BoundsVerdict(lower, upper)


def restricted_lower_bound(h, M, rank_tol=DEFAULT_RANK_TOL, tol=DEFAULT_TOL):
    """Largest a >= 0 with a M <= h for PSD h, M.

    By the Douglas factorization such a > 0 exists iff ran(M) lies in ran(h),
    and then the optimum is 1 / lambda_max(M^(1/2) h^+ M^(1/2)). Eigenvalues of
    h below ``rank_tol * lambda_max(h)`` are treated as zero. Returns ``inf``
    for M = 0 (the inequality is vacuous) and 0.0 when the range test fails.
    """
    if not np.any(M):
        return math.inf
    dec = hermitian_eigen(h, tol)
    w, v = dec.eigenvalues, dec.eigenvectors
    if w[0] < -tol * scale(h):
        raise NotPositive(w[0], tol * scale(h))
    top = max(float(w[-1]), 0.0)
    keep = w > rank_tol * top if top > 0.0 else np.zeros(w.shape, dtype=bool)
    root_m = positive_sqrt(sym(M), tol)
    if not keep.any():
        return 0.0
    null = v[:, ~keep]
    if null.size:
        leak = operator_norm(null.conj().T @ root_m)
        if leak > math.sqrt(rank_tol) * operator_norm(root_m):
            return 0.0
    vk = v[:, keep]
    pinv = (vk / w[keep]) @ vk.conj().T
    lam = hermitian_eigen(sym(root_m @ pinv @ root_m), tol).eigenvalues[-1]
    return float(1.0 / lam)


def optimal_bounds(sys, rank_tol=DEFAULT_RANK_TOL, tol=DEFAULT_TOL, symmetrize=False):
    """Best constants: B = lambda_max(phi), A = largest a with a KK* <= phi.

    A is ``inf`` when K = 0 and 0.0 when the system is Bessel but not a
    K-frame (ran K not inside ran phi).
    """
    h = _checked_middle(sys, tol, symmetrize).hermitian
    dec = hermitian_eigen(h, tol)
    if dec.eigenvalues[0] < -tol * scale(h):
        raise NotPositive(dec.eigenvalues[0], tol * scale(h))
    upper = float(dec.eigenvalues[-1])
    lower = restricted_lower_bound(h, sys.k_gram(), rank_tol, tol)
    return FrameBounds(lower, upper, tol)


def controller_root(sys, tol=DEFAULT_TOL):
    """(C C')^(1/2); C C' must be self-adjoint, i.e. C and C' commute."""
    prod = sys.Cp.rep @ sys.C.rep
    bound = tol * scale(prod)
    defect = hermitian_defect(prod)
    if defect > bound:
        raise NonCommutingControllers(defect, bound)
    return ModuleOperator(sys.n, sys.d, positive_sqrt(sym(prod), tol))


def analysis(sys, x, tol=DEFAULT_TOL):
    """x -> {T_i (C C')^(1/2) x}_i."""
    root = controller_root(sys, tol).rep
    if (x.n, x.d) != (sys.n, sys.d):
        raise DimensionMismatch("vector and system live in different modules")
    base = x.stacked @ root
    return [ModuleVector(x.n, x.d, base @ t.rep) for t in sys.family]


def synthesis(sys, coeffs, tol=DEFAULT_TOL):
    """{a_i} -> sum_i (C C')^(1/2) T_i* a_i, the adjoint of ``analysis``."""
    coeffs = list(coeffs)
    if len(coeffs) != sys.m:
        raise DimensionMismatch(f"expected {sys.m} coefficients, got {len(coeffs)}")
    root = controller_root(sys, tol).rep
    total = pairwise_sum(a.stacked @ t.rep.conj().T for a, t in zip(coeffs, sys.family))
    return ModuleVector(sys.n, sys.d, total @ root)


def l2_pairing(xs, ys):
    """sum_i <x_i, y_i> on l^2(H)."""
    return pairwise_sum(x.stacked @ y.stacked.conj().T for x, y in zip(xs, ys))


def controlled_frame_operator(sys):
    """S = sum_i C' T_i* T_i C; rep = rep(C) G rep(C'), equal to phi."""
    return ModuleOperator(sys.n, sys.d, sys.C.rep @ sys.gram() @ sys.Cp.rep)


# C-controlled K-frames of module vectors

def _vector_space(vectors):
    vectors = list(vectors)
    if not vectors:
        raise ValueError("need at least one vector")
    n, d = vectors[0].n, vectors[0].d
    for v in vectors:
        if (v.n, v.d) != (n, d):
            raise DimensionMismatch("vectors live in different modules")
    return vectors, n, d


def vector_frame_middle(vectors, C):
    """Rep of x -> sum_i <x, x_i><C x_i, x>, which is (sum_i X_i* X_i) rep(C)."""
    vectors, _, _ = _vector_space(vectors)
    gram = pairwise_sum(v.stacked.conj().T @ v.stacked for v in vectors)
    return gram @ C.rep


def _vector_frame_parts(vectors, C, K, tol):
    F = vector_frame_middle(vectors, C)
    defect = hermitian_defect(F)
    bound = tol * scale(F)
    if defect > bound:
        raise NonHermitianMiddle(defect, bound)
    # <C^(1/2) K* x, C^(1/2) K* x> = X rep(K)* rep(C) rep(K) X*
    M = K.rep.conj().T @ C.rep @ K.rep
    return sym(F), sym(M)


def verify_c_controlled_k_frame(vectors, C, K, A, B, tol=DEFAULT_TOL):
    """Certify A<C^(1/2)K*x, C^(1/2)K*x> <= sum_i <x,x_i><Cx_i,x> <= B<x,x>."""
    h, M = _vector_frame_parts(vectors, C, K, tol)
    return loewner_leq(A * M, h, tol) and loewner_leq(h, B * np.eye(h.shape[0]), tol)


def c_controlled_k_frame_bounds(vectors, C, K, rank_tol=DEFAULT_RANK_TOL, tol=DEFAULT_TOL):
    h, M = _vector_frame_parts(vectors, C, K, tol)
    upper = float(hermitian_eigen(h, tol).eigenvalues[-1])
    return FrameBounds(restricted_lower_bound(h, M, rank_tol, tol), upper, tol)


def gamma_operator(x, i):
    """Gamma_i(x') = <x', x> e_i, with rep = X* S_i (S_i selects block i)."""
    n, d = x.n, x.d
    if not 0 <= i < d:
        raise TooManyVectors(f"block index {i} out of range for d = {d}")
    rep = np.zeros((n * d, n * d), dtype=complex)
    rep[:, i * n:(i + 1) * n] = x.stacked.conj().T
    return ModuleOperator(n, d, rep)


def lift_from_controlled_k_frame(vectors, C, K):
    """Turn a C-controlled K-frame {x_i} into the (Id, C)-controlled K-operator frame {Gamma_i}."""
    vectors, n, d = _vector_space(vectors)
    if len(vectors) > d:
        raise TooManyVectors(f"{len(vectors)} vectors but only d = {d} orthonormal e_i in A^{d}")
    family = tuple(gamma_operator(x, i) for i, x in enumerate(vectors))
    ident = GLPlusOperator(n, d, np.eye(n * d), 1.0)
    return ControlledSystem(family, ident, _as_glplus(C, DEFAULT_TOL), K)


def lift_constants(A, B, C, rank_tol=DEFAULT_RANK_TOL, tol=DEFAULT_TOL):
    """(A m, B) with m the surjectivity bound of C^(1/2)."""
    m = surjectivity_lower_bound(ModuleOperator(C.n, C.d, positive_sqrt(C.rep, tol)), rank_tol)
    if m is None:
        raise ValueError("controller is not surjective")
    return A * m, B, m
