"""Executable checkers for the controlled K-operator frame results.

Each checker evaluates the hypotheses of one result on a concrete instance,
then certifies the conclusion with Loewner-order checks. Hypothesis failures
never produce a positive or negative conclusion: the verdict records
``hypothesis_ok=False`` and the offending residuals. A conclusion is reported
false only when the violation exceeds ten times the tolerance; smaller
misses raise :class:`Inconclusive`.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .algebra import (
    DEFAULT_RANK_TOL,
    DEFAULT_TOL,
    hermitian_eigen,
    loewner_leq,
    operator_norm,
    positive_sqrt,
    psd_function,
    scale,
    sym,
)
from .douglas import factorize, range_inclusion
from .errors import Inconclusive, NoSolution
from .frames import (
    ControlledSystem,
    controlled_frame_operator,
    middle_operator,
    optimal_bounds,
    verify_bounds,
)
from .operators import (
    ModuleOperator,
    adjoint,
    compose,
    inverse,
    is_positive,
    surjectivity_lower_bound,
)

THEOREM_IDS = (
    "opframe_is_kframe",
    "surjective_upgrade",
    "commuting_upgrade",
    "frame_iff_S_iff_factor",
    "compose_Q",
    "tight_iff",
    "power_shift",
    "perturbation",
)


@dataclass
class TheoremVerdict:
    theorem_id: str
    hypothesis_ok: bool
    conclusion_ok: bool
    witnesses: dict = field(default_factory=dict)
    defects: dict = field(default_factory=dict)

    def to_dict(self):
        from .serialize import encode_value

        return {
            "theorem_id": self.theorem_id,
            "hypothesis_ok": self.hypothesis_ok,
            "conclusion_ok": self.conclusion_ok,
            "witnesses": {k: encode_value(v) for k, v in self.witnesses.items()},
            "defects": {k: encode_value(v) for k, v in self.defects.items()},
        }


def _rel_commutator(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    return operator_norm(a @ b - b @ a) / max(1.0, operator_norm(a) * operator_norm(b))


def _hypothesis_failed(theorem_id, witnesses, defects):
    return TheoremVerdict(theorem_id, False, False, witnesses, defects)


def lower_margin(sys, A):
    """Margin of A <K*x,K*x> <= middle(x), normalized as in loewner_leq; negative means violated."""
    h = sym(middle_operator(sys).phi)
    lhs = A * sys.k_gram()
    w = hermitian_eigen(sym(h - lhs)).eigenvalues
    return float(w[0] / max(scale(h), scale(lhs)))


def upper_margin(sys, B):
    h = sym(middle_operator(sys).phi)
    rhs = B * np.eye(sys.size)
    w = hermitian_eigen(sym(rhs - h)).eigenvalues
    return float(w[0] / max(scale(h), scale(rhs)))


def _certify(sys, A, B, tol, defects):
    """verify_bounds with margins recorded; Inconclusive for near misses."""
    verdict = verify_bounds(sys, A, B, tol)
    if A is not None:
        defects["lower_margin"] = lower_margin(sys, A)
    if B is not None:
        defects["upper_margin"] = upper_margin(sys, B)
    if verdict.ok:
        return True
    worst = min(v for k, v in defects.items() if k in ("lower_margin", "upper_margin"))
    if worst > -10 * tol:
        raise Inconclusive(f"bound certificate missed by {-worst:.3e}, within 10 tol")
    return False


def _sandwich_ok(lhs, rhs, tol):
    """lhs <= rhs up to 10 tol, Inconclusive in the grey zone."""
    slack = tol * max(1.0, abs(rhs))
    if lhs <= rhs + slack:
        return True
    if lhs <= rhs + 10 * slack:
        raise Inconclusive(f"{lhs!r} <= {rhs!r} missed by {lhs - rhs:.3e}")
    return False


def _frame_bounds(sys, tol, rank_tol):
    b = optimal_bounds(sys, rank_tol, tol)
    return b.lower, b.upper


def prop_opframe_is_kframe(sys, tol=DEFAULT_TOL, rank_tol=DEFAULT_RANK_TOL):
    """A controlled operator frame with bounds (A, B) is a controlled K-frame with (A/||K||^2, B)."""
    tid = "opframe_is_kframe"
    ident = ModuleOperator.identity(sys.n, sys.d)
    A, B = _frame_bounds(sys.replace(K=ident), tol, rank_tol)
    if not A > 0:
        return _hypothesis_failed(tid, {"A": A, "B": B}, {"lower_bound": A})
    k_norm = sys.K.norm()
    witnesses = {"A": A, "B": B, "K_norm": k_norm}
    if k_norm < rank_tol:
        witnesses["vacuous"] = True
        return TheoremVerdict(tid, True, True, witnesses, {})
    lower = A / k_norm**2
    witnesses["lower"] = lower
    defects = {}
    ok = _certify(sys, lower, B, tol, defects)
    return TheoremVerdict(tid, True, ok, witnesses, defects)


def prop_surjective_upgrade(sys, tol=DEFAULT_TOL, rank_tol=DEFAULT_RANK_TOL):
    """A controlled K-frame with surjective K is a controlled operator frame with (A m, B)."""
    tid = "surjective_upgrade"
    A, B = _frame_bounds(sys, tol, rank_tol)
    m = surjectivity_lower_bound(sys.K, rank_tol)
    if m is None or not A > 0:
        return _hypothesis_failed(tid, {"A": A, "B": B, "m": m}, {"surjective": m is not None})
    witnesses = {"A": A, "B": B, "m": m, "lower": A * m}
    defects = {}
    ok = _certify(sys.replace(K=ModuleOperator.identity(sys.n, sys.d)), A * m, B, tol, defects)
    return TheoremVerdict(tid, True, ok, witnesses, defects)


def prop_commuting_upgrade(family, K, C, Cp, tol=DEFAULT_TOL, rank_tol=DEFAULT_RANK_TOL):
    """A K-operator frame stays a (C, C')-controlled K-frame when everything commutes."""
    tid = "commuting_upgrade"
    defects = {}
    for i, t in enumerate(family):
        defects[f"[C,T{i}]"] = _rel_commutator(C.rep, t.rep)
        defects[f"[C',T{i}]"] = _rel_commutator(Cp.rep, t.rep)
    defects["[C,K]"] = _rel_commutator(C.rep, K.rep)
    defects["[C',K]"] = _rel_commutator(Cp.rep, K.rep)
    defects["[C,C']"] = _rel_commutator(C.rep, Cp.rep)
    offending = {k: v for k, v in defects.items() if v > tol}
    plain = ControlledSystem.plain(family, K)
    A, B = _frame_bounds(plain, tol, rank_tol)
    if offending or not A > 0:
        return _hypothesis_failed(tid, {"A": A, "B": B, "offending": sorted(offending)}, defects)
    root = ModuleOperator(K.n, K.d, positive_sqrt(sym(Cp.rep @ C.rep), tol))
    m = surjectivity_lower_bound(root, rank_tol)
    root_norm = root.norm()
    lower, upper = A * m, B * root_norm**2
    witnesses = {"A": A, "B": B, "m": m, "root_norm": root_norm, "lower": lower, "upper": upper}
    ok = _certify(ControlledSystem(tuple(family), C, Cp, K), lower, upper, tol, defects)
    return TheoremVerdict(tid, True, ok, witnesses, defects)


def _largest_scaling(S, M, tol, iterations=200):
    """Largest a with S >= a M by bisection over Loewner checks."""
    norm_m = operator_norm(M)
    if norm_m == 0.0:
        return math.inf
    hi = 2.0 * operator_norm(S) / norm_m + 1.0
    lo = 0.0
    for _ in range(iterations):
        if hi - lo <= 1e-12 * hi:
            break
        mid = 0.5 * (lo + hi)
        if loewner_leq(mid * M, S, tol):
            lo = mid
        else:
            hi = mid
    return lo


def thm_frame_iff_S_iff_factor(sys, tol=DEFAULT_TOL, rank_tol=DEFAULT_RANK_TOL):
    """Lower frame property, S >= A KK*, and K = S^(1/2) Q must agree."""
    tid = "frame_iff_S_iff_factor"
    defects = {"[C,C']": _rel_commutator(sys.C.rep, sys.Cp.rep)}
    for i, t in enumerate(sys.family):
        tt = t.rep @ t.rep.conj().T
        defects[f"[C,T{i}*T{i}]"] = _rel_commutator(sys.C.rep, tt)
        defects[f"[C',T{i}*T{i}]"] = _rel_commutator(sys.Cp.rep, tt)
    S = controlled_frame_operator(sys)
    offending = sorted(k for k, v in defects.items() if v > tol)
    if offending or not is_positive(S, tol):
        return _hypothesis_failed(tid, {"offending": offending}, defects)

    s_rep = sym(S.rep)
    M = sys.k_gram()
    A_opt, B_opt = _frame_bounds(sys, tol, rank_tol)
    frame = A_opt > 0

    A_bis = _largest_scaling(s_rep, M, tol)
    # a certificate at the level of the Loewner tolerance alone is no lower bound
    noise = 1e3 * tol * scale(s_rep) / max(operator_norm(M), np.finfo(float).tiny)
    dominated = A_bis > noise

    top = hermitian_eigen(s_rep, tol).eigenvalues[-1]
    # S^(1/2) with the same numerical-rank cut as the bound computation
    root = ModuleOperator(sys.n, sys.d, psd_function(
        s_rep, lambda w: np.where(w > rank_tol * top, np.sqrt(w), 0.0), tol))
    try:
        Q = factorize(sys.K, root, rank_tol)
        factor_resid = operator_norm(compose(root, Q).rep - sys.K.rep)
    except NoSolution as exc:
        Q = None
        factor_resid = exc.residual
    factored = Q is not None

    witnesses = {
        "A_opt": A_opt,
        "B_opt": B_opt,
        "A_bisection": A_bis,
        "frame": frame,
        "dominated": dominated,
        "factored": factored,
        "range_included": range_inclusion(sys.K, root, rank_tol),
    }
    if Q is not None:
        witnesses["Q"] = Q.rep
    defects["factor_residual"] = factor_resid
    if frame != dominated and A_opt <= 100 * noise:
        raise Inconclusive("optimal lower bound is at the Loewner noise level")
    ok = frame == dominated == factored
    return TheoremVerdict(tid, True, ok, witnesses, defects)


def thm_compose_Q(sys, Q, tol=DEFAULT_TOL, rank_tol=DEFAULT_RANK_TOL):
    """{T_i Q} is a (C, C')-controlled Q*K-frame with bounds (A, B ||Q||^2)."""
    tid = "compose_Q"
    defects = {
        "[Q,C]": _rel_commutator(Q.rep, sys.C.rep),
        "[Q,C']": _rel_commutator(Q.rep, sys.Cp.rep),
        "[Q,K]": _rel_commutator(Q.rep, sys.K.rep),
    }
    A, B = _frame_bounds(sys, tol, rank_tol)
    offending = sorted(k for k, v in defects.items() if v > tol)
    if offending or not A > 0:
        return _hypothesis_failed(tid, {"A": A, "B": B, "offending": offending}, defects)
    q_norm = Q.norm()
    moved = sys.replace(
        family=tuple(compose(t, Q) for t in sys.family),
        K=compose(adjoint(Q), sys.K),
    )
    lower = None if math.isinf(A) else A
    witnesses = {"A": A, "B": B, "Q_norm": q_norm, "upper": B * q_norm**2}
    ok = _certify(moved, lower, B * q_norm**2, tol, defects)
    return TheoremVerdict(tid, True, ok, witnesses, defects)


def tight_constant(sys):
    """Least-squares lambda with sym(phi) ~ lambda KK*, and the residual."""
    h = sym(middle_operator(sys).phi)
    M = sys.k_gram()
    denom = float(np.vdot(M, M).real)
    if denom == 0.0:
        return math.nan, operator_norm(h)
    lam = float(np.vdot(M, h).real) / denom
    return lam, operator_norm(h - lam * M)


def thm_tight_iff(sys, A1, A2, tol=DEFAULT_TOL):
    """A1-tight K-frame: A2-tight operator frame iff KK* = (A2/A1) Id."""
    tid = "tight_iff"
    h = sym(middle_operator(sys).phi)
    M = sys.k_gram()
    ident = np.eye(sys.size)
    tight_defect = operator_norm(h - A1 * M) / scale(h)
    defects = {"k_tight_defect": tight_defect}
    if tight_defect > tol or not A1 > 0 or not A2 > 0:
        return _hypothesis_failed(tid, {"A1": A1, "A2": A2}, defects)
    frame_defect = operator_norm(h - A2 * ident) / scale(h)
    kk_defect = operator_norm(M - (A2 / A1) * ident) / scale(M)
    defects.update({"frame_tight_defect": frame_defect, "kk_defect": kk_defect})
    forward = frame_defect > tol or kk_defect <= 10 * tol
    backward = kk_defect > tol or frame_defect <= 10 * tol
    witnesses = {"A1": A1, "A2": A2, "tight_frame": frame_defect <= tol, "kk_scalar": kk_defect <= tol,
                 "forward": forward, "backward": backward}
    return TheoremVerdict(tid, True, forward and backward, witnesses, defects)


def cor_power_shift(sys, n_pow=1, tol=DEFAULT_TOL, K=None):
    """Tightness transfer under composition with powers of K*.

    With ``K=None`` (case 1): sys is a tight controlled sys.K-frame and
    {T_i (K^n)*} is checked to be a tight K^(n+1)-frame with the same
    constant. With ``K`` given (case 2): sys is a tight controlled operator
    frame and {T_i K*} is checked to be a tight K-frame.
    """
    tid = "power_shift"
    ident = np.eye(sys.size)
    h = sym(middle_operator(sys).phi)
    if K is None:
        K = sys.K
        lam, resid = tight_constant(sys)
        base_defect = resid / scale(h)
        power = K.power(n_pow)
        target_k = K.power(n_pow + 1)
        case = 1
    else:
        lam = float(np.trace(h).real) / sys.size
        base_defect = operator_norm(h - lam * ident) / scale(h)
        power = K
        target_k = K
        case = 2
    defects = {
        "tight_defect": base_defect,
        "[K,C]": _rel_commutator(K.rep, sys.C.rep),
        "[K,C']": _rel_commutator(K.rep, sys.Cp.rep),
    }
    witnesses = {"case": case, "n_pow": n_pow, "lambda": lam}
    if base_defect > tol or defects["[K,C]"] > tol or defects["[K,C']"] > tol or not lam > 0:
        return _hypothesis_failed(tid, witnesses, defects)
    shifted = sys.replace(family=tuple(compose(t, adjoint(power)) for t in sys.family), K=target_k)
    h2 = sym(middle_operator(shifted).phi)
    out_defect = operator_norm(h2 - lam * shifted.k_gram()) / scale(h2)
    defects["shifted_tight_defect"] = out_defect
    if out_defect <= 10 * tol:
        return TheoremVerdict(tid, True, True, witnesses, defects)
    if out_defect <= 100 * tol:
        raise Inconclusive(f"shifted tightness defect {out_defect:.3e}")
    return TheoremVerdict(tid, True, False, witnesses, defects)


def thm_perturbation(sys, Q, tol=DEFAULT_TOL, rank_tol=DEFAULT_RANK_TOL):
    """Best bounds (M, N) of {T_i Q} against best bounds (A, B) of {T_i}.

    Checks A||Q^-1||^-2 <= M <= A||Q||^2 and A||Q^-1||^-2 <= N <= B||Q||^2.
    Besides invertibility of Q and [Q^-1, K*] = 0, the checker requires Q to
    commute with C and C' and A <= B; without these the sandwich can fail.
    """
    tid = "perturbation"
    m_q = surjectivity_lower_bound(Q, rank_tol)
    if m_q is None:
        return _hypothesis_failed(tid, {"invertible": False}, {})
    q_inv = inverse(Q, rank_tol)
    defects = {
        "[Q^-1,K*]": _rel_commutator(q_inv.rep, sys.K.rep.conj().T),
        "[Q,C]": _rel_commutator(Q.rep, sys.C.rep),
        "[Q,C']": _rel_commutator(Q.rep, sys.Cp.rep),
    }
    A, B = _frame_bounds(sys, tol, rank_tol)
    offending = sorted(k for k, v in defects.items() if v > tol)
    witnesses = {"A": A, "B": B}
    if offending or not 0 < A <= B * (1 + tol) or math.isinf(A):
        witnesses["offending"] = offending
        return _hypothesis_failed(tid, witnesses, defects)
    moved = sys.replace(family=tuple(compose(t, Q) for t in sys.family))
    M, N = _frame_bounds(moved, tol, rank_tol)
    q_norm = Q.norm()
    q_inv_norm = q_inv.norm()
    floor = A / q_inv_norm**2
    witnesses.update({"M": M, "N": N, "Q_norm": q_norm, "Q_inv_norm": q_inv_norm})
    checks = {
        "floor<=M": (floor, M),
        "M<=A|Q|^2": (M, A * q_norm**2),
        "floor<=N": (floor, N),
        "N<=B|Q|^2": (N, B * q_norm**2),
    }
    ok = True
    for name, (lhs, rhs) in checks.items():
        defects[f"margin {name}"] = (rhs - lhs) / max(1.0, abs(rhs))
        ok = _sandwich_ok(lhs, rhs, 10 * tol) and ok
    return TheoremVerdict(tid, True, ok, witnesses, defects)
