"""Douglas factorization on A^d: majorization, domination, factorization, range.

With right-multiplication reps, ``rep(T T*) = rep(T)* rep(T)`` and the range of
T is spanned by the rows of rep(T). ``T' = T o D`` reads
``rep(T') = rep(D) @ rep(T)``, so the minimal-norm solution is
``rep(D) = rep(T') @ pinv(rep(T))``.

The four equivalent conditions are evaluated by separate numerical routes:
bisection over Loewner checks (majorization), a reduced pencil eigenvalue
(domination constant), a pseudoinverse solve (factorization) and a row-space
projector (range inclusion).
"""
from dataclasses import dataclass
import math

import numpy as np

from .algebra import (
    DEFAULT_RANK_TOL,
    DEFAULT_TOL,
    hermitian_eigen,
    loewner_leq,
    operator_norm,
    pseudo_inverse,
    singular_values,
    sym,
)
from .errors import NoSolution
from .operators import ModuleOperator

BISECTION_RTOL = 1e-12
MAX_BISECTIONS = 200


@dataclass(frozen=True, eq=False)
class DouglasReport:
    majorization_lambda: float | None
    mu: float | None
    solution_D: ModuleOperator | None
    range_included: bool
    consistent: bool
    residual: float
    range_residual: float

    @property
    def verdicts(self):
        return (
            self.majorization_lambda is not None,
            self.mu is not None,
            self.solution_D is not None,
            self.range_included,
        )


def _range_residual(rep_p, rep_t, rank_tol):
    """||rep(T') (I - P)|| with P the projector onto the row space of rep(T)."""
    proj = pseudo_inverse(rep_t, rank_tol) @ rep_t
    return operator_norm(rep_p - rep_p @ proj)


def range_inclusion(Tp, T, rank_tol=DEFAULT_RANK_TOL):
    """R(T') inside R(T), decided on the row spaces of the reps."""
    Tp.same_space(T)
    resid = _range_residual(Tp.rep, T.rep, rank_tol)
    return resid <= rank_tol * max(1.0, operator_norm(Tp.rep))


def _smallest_positive_sv(rep, rank_tol):
    s = singular_values(rep)
    if not s.size or s[0] == 0.0:
        return None
    live = s[s > rank_tol * s[0]]
    return float(live[-1])


def majorization_lambda(Tp, T, tol=DEFAULT_TOL, rank_tol=DEFAULT_RANK_TOL):
    """Least lambda with T'T'* <= lambda T T*, found by bisection; None if none exists."""
    Tp.same_space(T)
    big = Tp.rep.conj().T @ Tp.rep
    small = T.rep.conj().T @ T.rep
    norm_p = operator_norm(Tp.rep)
    if norm_p == 0.0:
        return 0.0
    smin = _smallest_positive_sv(T.rep, rank_tol)
    if smin is None:
        return None
    hi = (norm_p / smin) ** 2 + 1.0
    if not loewner_leq(big, hi * small, tol):
        return None
    lo = 0.0
    for _ in range(MAX_BISECTIONS):
        if hi - lo <= BISECTION_RTOL * hi:
            break
        mid = 0.5 * (lo + hi)
        if loewner_leq(big, mid * small, tol):
            hi = mid
        else:
            lo = mid
    return hi


def pencil_lambda(Tp, T, tol=DEFAULT_TOL, rank_tol=DEFAULT_RANK_TOL):
    """lambda_max of T'T'* against TT*, compressed onto ran(TT*); None on leakage.

    Returns ``(mu_squared or None, leak)``. Eigenvalues of TT* below
    ``rank_tol * lambda_max`` count as its kernel; T' leaking into that kernel
    by more than ``sqrt(rank_tol)`` (relative) means no finite constant.
    """
    big = Tp.rep.conj().T @ Tp.rep
    small = T.rep.conj().T @ T.rep
    norm_p = operator_norm(Tp.rep)
    if norm_p == 0.0:
        return 0.0, 0.0
    dec = hermitian_eigen(small, tol)
    w, v = dec.eigenvalues, dec.eigenvectors
    top = max(float(w[-1]), 0.0)
    keep = w > rank_tol * top if top > 0.0 else np.zeros(w.shape, dtype=bool)
    null = v[:, ~keep]
    leak = operator_norm(Tp.rep @ null) / norm_p if null.size else 0.0
    if leak > math.sqrt(rank_tol) or not keep.any():
        return None, leak
    vk = v[:, keep]
    whiten = (vk / np.sqrt(w[keep])) @ vk.conj().T
    return float(hermitian_eigen(sym(whiten @ big @ whiten), tol).eigenvalues[-1]), leak


def domination_constant(Tp, T, tol=DEFAULT_TOL, rank_tol=DEFAULT_RANK_TOL):
    """Least mu with ||T'* x|| <= mu ||T* x|| for all x, or None."""
    lam, _ = pencil_lambda(Tp, T, tol, rank_tol)
    return None if lam is None else math.sqrt(max(lam, 0.0))


def factorize(Tp, T, rank_tol=DEFAULT_RANK_TOL):
    """Minimal-norm D with T o D = T'.

    Raises:
        NoSolution: when R(T') is not contained in R(T); carries the residual.
    """
    Tp.same_space(T)
    d_rep = Tp.rep @ pseudo_inverse(T.rep, rank_tol)
    resid = operator_norm(d_rep @ T.rep - Tp.rep)
    if resid > rank_tol * max(1.0, operator_norm(Tp.rep)):
        raise NoSolution(resid)
    return ModuleOperator(T.n, T.d, d_rep)


def equivalence_report(Tp, T, tol=DEFAULT_TOL, rank_tol=DEFAULT_RANK_TOL):
    """Evaluate all four Douglas conditions and whether they agree."""
    Tp.same_space(T)
    lam = majorization_lambda(Tp, T, tol, rank_tol)
    mu = domination_constant(Tp, T, tol, rank_tol)
    d_rep = Tp.rep @ pseudo_inverse(T.rep, rank_tol)
    resid = operator_norm(d_rep @ T.rep - Tp.rep)
    bound = rank_tol * max(1.0, operator_norm(Tp.rep))
    solution = ModuleOperator(T.n, T.d, d_rep) if resid <= bound else None
    range_resid = _range_residual(Tp.rep, T.rep, rank_tol)
    included = range_resid <= bound
    flags = (lam is not None, mu is not None, solution is not None, included)
    return DouglasReport(
        majorization_lambda=lam,
        mu=mu,
        solution_D=solution,
        range_included=included,
        consistent=len(set(flags)) == 1,
        residual=resid,
        range_residual=range_resid,
    )
