"""The Hilbert A-module H = A^d over A = M_n(C).

A vector x = (x_1, ..., x_d) is stored in stacked form as the n x (n d)
matrix [x_1 ... x_d]. The algebra acts on the left, and the A-valued inner
product is <x, y> = sum_k x_k y_k^* = X Y^*.
"""
from dataclasses import dataclass

import numpy as np

from .algebra import DEFAULT_TOL, operator_norm, positive_sqrt
from .errors import DimensionMismatch


def make_rng(seed):
    """Seeded Philox (counter-based, 64-bit key) generator used everywhere."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


def complex_normal(rng, shape):
    """i.i.d. complex normals with unit-variance real and imaginary parts."""
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@dataclass(frozen=True, eq=False)
class ModuleVector:
    n: int
    d: int
    stacked: np.ndarray

    def __post_init__(self):
        s = np.array(self.stacked, dtype=complex, ndmin=2)
        if s.shape != (self.n, self.n * self.d):
            raise DimensionMismatch(
                f"stacked form must be {self.n}x{self.n * self.d}, got {s.shape}"
            )
        s.setflags(write=False)
        object.__setattr__(self, "stacked", s)

    @classmethod
    def from_blocks(cls, blocks):
        blocks = [np.array(b, dtype=complex, ndmin=2) for b in blocks]
        if not blocks:
            raise DimensionMismatch("a module vector needs at least one block")
        n = blocks[0].shape[0]
        for k, b in enumerate(blocks):
            if b.shape != (n, n):
                raise DimensionMismatch(f"block {k} has shape {b.shape}, expected {(n, n)}")
        return cls(n, len(blocks), np.hstack(blocks))

    @classmethod
    def zeros(cls, n, d):
        return cls(n, d, np.zeros((n, n * d), dtype=complex))

    @classmethod
    def basis(cls, n, d, i):
        """e_i: identity in block i, zero elsewhere; <e_i, e_j> = delta_ij 1."""
        s = np.zeros((n, n * d), dtype=complex)
        s[:, i * n:(i + 1) * n] = np.eye(n)
        return cls(n, d, s)

    @property
    def blocks(self):
        n = self.n
        return tuple(self.stacked[:, k * n:(k + 1) * n] for k in range(self.d))

    def left_mul(self, a):
        """The module action a . x (every block multiplied on the left)."""
        a = np.asarray(a, dtype=complex)
        if a.shape != (self.n, self.n):
            raise DimensionMismatch(f"algebra element has shape {a.shape}, expected {(self.n, self.n)}")
        return ModuleVector(self.n, self.d, a @ self.stacked)

    def _same_space(self, other):
        if (self.n, self.d) != (other.n, other.d):
            raise DimensionMismatch(f"(n, d) = {(self.n, self.d)} vs {(other.n, other.d)}")

    def __add__(self, other):
        self._same_space(other)
        return ModuleVector(self.n, self.d, self.stacked + other.stacked)

    def __sub__(self, other):
        self._same_space(other)
        return ModuleVector(self.n, self.d, self.stacked - other.stacked)

    def __mul__(self, t):
        return ModuleVector(self.n, self.d, self.stacked * t)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, ModuleVector):
            return NotImplemented
        return (self.n, self.d) == (other.n, other.d) and np.array_equal(self.stacked, other.stacked)

    __hash__ = None


def inner_product(x, y):
    """A-valued inner product <x, y> = sum_k x_k y_k^*."""
    x._same_space(y)
    return x.stacked @ y.stacked.conj().T


def a_valued_norm(x, tol=DEFAULT_TOL):
    """|x| = <x, x>^(1/2)."""
    return positive_sqrt(inner_product(x, x), tol)


def module_norm(x):
    """||x|| = ||<x, x>||^(1/2)."""
    return float(np.sqrt(operator_norm(inner_product(x, x))))


def random_vector(n, d, seed):
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    rng = make_rng(seed)
    return ModuleVector(n, d, complex_normal(rng, (n, n * d)))
