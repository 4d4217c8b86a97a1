"""Adjointable operators on A^d, with surjectivity and norm-domination checks.

Every adjointable operator on A^d acts on the stacked form by right
multiplication, ``stacked(T x) = stacked(x) @ rep``. Right multiplication
reverses products, so ``rep(S o T) = rep(T) @ rep(S)``; this reversal is the
one convention everything downstream relies on.
"""
from dataclasses import dataclass

import numpy as np

from .algebra import (
    DEFAULT_RANK_TOL,
    DEFAULT_TOL,
    hermitian_defect,
    lambda_min,
    loewner_leq,
    operator_norm,
    positive_sqrt,
    pseudo_inverse,
    scale,
    singular_values,
    sym,
)
from .errors import DimensionMismatch, NotPSD
from .module import ModuleVector, complex_normal, inner_product, make_rng, random_vector


@dataclass(frozen=True, eq=False)
class ModuleOperator:
    n: int
    d: int
    rep: np.ndarray

    def __post_init__(self):
        r = np.array(self.rep, dtype=complex, ndmin=2)
        size = self.n * self.d
        if r.shape != (size, size):
            raise DimensionMismatch(f"rep must be {size}x{size}, got {r.shape}")
        r.setflags(write=False)
        object.__setattr__(self, "rep", r)

    @classmethod
    def identity(cls, n, d):
        return cls(n, d, np.eye(n * d))

    @classmethod
    def zeros(cls, n, d):
        return cls(n, d, np.zeros((n * d, n * d)))

    @classmethod
    def scalar(cls, n, d, t):
        return cls(n, d, t * np.eye(n * d))

    @classmethod
    def from_block_matrix(cls, blocks):
        """Build from a d x d matrix over A, (T x)_j = sum_k x_k t_kj."""
        blocks = np.asarray(blocks, dtype=complex)
        d, d2, n, n2 = blocks.shape
        if d != d2 or n != n2:
            raise DimensionMismatch(f"expected (d, d, n, n) blocks, got {blocks.shape}")
        return cls(n, d, blocks.transpose(0, 2, 1, 3).reshape(n * d, n * d))

    @property
    def size(self):
        return self.n * self.d

    def block_matrix(self):
        n, d = self.n, self.d
        return self.rep.reshape(d, n, d, n).transpose(0, 2, 1, 3)

    def same_space(self, other):
        if (self.n, self.d) != (other.n, other.d):
            raise DimensionMismatch(f"(n, d) = {(self.n, self.d)} vs {(other.n, other.d)}")

    def __call__(self, x):
        return apply(self, x)

    def __matmul__(self, other):
        return compose(self, other)

    def __add__(self, other):
        self.same_space(other)
        return ModuleOperator(self.n, self.d, self.rep + other.rep)

    def __sub__(self, other):
        self.same_space(other)
        return ModuleOperator(self.n, self.d, self.rep - other.rep)

    def __mul__(self, t):
        return ModuleOperator(self.n, self.d, self.rep * t)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, ModuleOperator):
            return NotImplemented
        return (self.n, self.d) == (other.n, other.d) and np.array_equal(self.rep, other.rep)

    __hash__ = None

    def power(self, k):
        return ModuleOperator(self.n, self.d, np.linalg.matrix_power(self.rep, k))

    def norm(self):
        return operator_norm(self.rep)


@dataclass(frozen=True, eq=False)
class GLPlusOperator(ModuleOperator):
    """Positive invertible operator with a certified spectral floor."""

    lam_min: float = 0.0

    @classmethod
    def certify(cls, op, tol=DEFAULT_TOL):
        """Wrap a positive invertible operator, measuring lambda_min."""
        lam = lambda_min(op.rep, tol)
        if lam <= 0.0:
            raise NotPSD(lam, 0.0)
        return cls(op.n, op.d, sym(op.rep), lam)

    def sqrt(self, tol=DEFAULT_TOL):
        return ModuleOperator(self.n, self.d, positive_sqrt(self.rep, tol))


def apply(T, x):
    if (T.n, T.d) != (x.n, x.d):
        raise DimensionMismatch(f"operator on {(T.n, T.d)} applied to vector in {(x.n, x.d)}")
    return ModuleVector(x.n, x.d, x.stacked @ T.rep)


def adjoint(T):
    return ModuleOperator(T.n, T.d, T.rep.conj().T)


def compose(S, T):
    """S o T, i.e. x -> S(T(x)); rep(S o T) = rep(T) @ rep(S)."""
    S.same_space(T)
    return ModuleOperator(S.n, S.d, T.rep @ S.rep)


def compose_all(*ops):
    """ops[0] o ops[1] o ... o ops[-1]."""
    out = ops[-1]
    for op in reversed(ops[:-1]):
        out = compose(op, out)
    return out


def is_self_adjoint(T, tol=DEFAULT_TOL):
    return hermitian_defect(T.rep) <= tol * scale(T.rep)


def is_positive(T, tol=DEFAULT_TOL):
    if not is_self_adjoint(T, tol):
        return False
    return lambda_min(sym(T.rep)) >= -tol * scale(T.rep)


def inverse(T, rank_tol=DEFAULT_RANK_TOL):
    """Inverse of an invertible operator (Moore-Penrose otherwise)."""
    return ModuleOperator(T.n, T.d, pseudo_inverse(T.rep, rank_tol))


def operator_sqrt(T, tol=DEFAULT_TOL):
    return ModuleOperator(T.n, T.d, positive_sqrt(T.rep, tol))


def commutator_norm(S, T):
    S.same_space(T)
    return operator_norm(S.rep @ T.rep - T.rep @ S.rep)


def surjectivity_lower_bound(T, rank_tol=DEFAULT_RANK_TOL):
    """Largest m with <T* x, T* x> >= m <x, x> for all x, or None.

    ``<T* x, T* x> = X rep* rep X*`` so the optimum is sigma_min(rep)^2. A
    rank-deficient rep (sigma_min <= rank_tol * sigma_max) means T is not
    surjective and no positive m exists.
    """
    s = singular_values(T.rep)
    if s[0] == 0.0 or s[-1] <= rank_tol * s[0]:
        return None
    return float(s[-1] ** 2)


def norm_dominance_check(T, trials=10, tol=DEFAULT_TOL, seed=0):
    """Check <Tx, Tx> <= ||T||^2 <x, x> on samples and by a global certificate."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    norm_sq = T.norm() ** 2
    gram = T.rep.conj().T @ T.rep
    if not loewner_leq(gram, norm_sq * np.eye(T.size), tol):
        return False
    rng = make_rng(seed)
    for _ in range(trials):
        x = random_vector(T.n, T.d, int(rng.integers(2**63)))
        tx = apply(T, x)
        if not loewner_leq(inner_product(tx, tx), norm_sq * inner_product(x, x), tol):
            return False
    return True


def random_operator(n, d, seed, scale_=None):
    """Complex Gaussian rep, entries scaled by 1/sqrt(n d) unless given."""
    rng = make_rng(seed)
    size = n * d
    s = 1.0 / np.sqrt(size) if scale_ is None else scale_
    return ModuleOperator(n, d, s * complex_normal(rng, (size, size)))


def random_glplus(n, d, eps=0.1, seed=0, spread=1.0):
    """rep = G* G + eps I with Gaussian G (scaled by ``spread``)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    g = random_operator(n, d, seed).rep * spread
    rep = g.conj().T @ g + eps * np.eye(n * d)
    lam = lambda_min(rep)
    return GLPlusOperator(n, d, sym(rep), lam)
