"""Seeded instance generators and the batch theorem-suite runner.

All randomness flows from ``make_rng(seed)`` (Philox), and every generator
draws in a fixed order, so an identical :class:`GenSpec` always yields a
bit-identical instance.

Commuting instances come from one random unitary U: every commuting operator
is ``U diag(.) U*`` with non-constant diagonals, so controllers are never
mere scalars.
"""
from dataclasses import dataclass, field, replace
import math
import time

import numpy as np

from .algebra import DEFAULT_TOL, operator_norm, psd_function, sym
from .errors import Inconclusive, InfeasibleSpec, OpFrameError
from .frames import ControlledSystem, pairwise_sum
from .module import ModuleVector, complex_normal, make_rng
from .operators import GLPlusOperator, ModuleOperator
from . import theorems

MODES = (
    "general",
    "commuting_diagonal",
    "parseval",
    "tight",
    "rank_deficient_K",
    "controlled_k_vector_frame",
)
K_KINDS = ("random", "identity", "unitary")


@dataclass(frozen=True)
class GenSpec:
    """Instance recipe.

    ``lam`` is the tight constant (``tight`` mode), ``rank`` the rank of K
    (``rank_deficient_K``), ``k_kind`` picks K in the commuting modes,
    ``null_dim`` kills that many common eigendirections of the family in
    ``commuting_diagonal`` mode (``k_in_range`` then decides whether K is
    killed there too), ``k_norm`` rescales K, and ``coupled`` sets C' = C in
    ``general`` mode so the middle operator is Hermitian.
    """

    n: int
    d: int
    m: int
    mode: str = "general"
    seed: int = 0
    eps: float = 0.1
    lam: float = 1.0
    rank: int | None = None
    k_kind: str = "random"
    k_scale: float = 1.0
    k_norm: float | None = None
    null_dim: int = 0
    k_in_range: bool = True
    coupled: bool = True

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise InfeasibleSpec("n and d must be positive")
        if self.m < 1:
            raise InfeasibleSpec("the family needs m >= 1 members")
        if self.mode not in MODES:
            raise InfeasibleSpec(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.eps <= 0:
            raise InfeasibleSpec("eps must be positive")
        if self.k_kind not in K_KINDS:
            raise InfeasibleSpec(f"unknown k_kind {self.k_kind!r}")
        if self.mode == "tight" and not self.lam > 0:
            raise InfeasibleSpec("tight constant must be positive")
        size = self.n * self.d
        if self.mode == "rank_deficient_K":
            r = self.rank if self.rank is not None else size - 1
            if not 0 <= r < size:
                raise InfeasibleSpec(f"rank {r} must be in [0, {size})")
        if self.mode == "controlled_k_vector_frame" and self.m > self.d:
            raise InfeasibleSpec(f"{self.m} vectors but d = {self.d}")
        if not 0 <= self.null_dim < size:
            raise InfeasibleSpec(f"null_dim must be in [0, {size})")


@dataclass(frozen=True, eq=False)
class VectorFrameInstance:
    vectors: tuple
    C: GLPlusOperator
    K: ModuleOperator
    basis: np.ndarray = field(repr=False)


def random_unitary(rng, size):
    z = complex_normal(rng, (size, size))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _diag_in(u, values):
    return (u * values) @ u.conj().T


def _positive_diag(rng, size, eps):
    return eps + np.abs(complex_normal(rng, size)) ** 2 / 2.0


def _glplus(n, d, rep):
    rep = sym(rep)
    return GLPlusOperator(n, d, rep, float(np.linalg.eigvalsh(rep)[0]))


def shared_basis(spec):
    """The unitary U the commuting modes diagonalize everything in."""
    return random_unitary(make_rng(spec.seed), spec.n * spec.d)


def _whiten_family(rng, n, d, m, target, eps):
    """Random family with sum_i rep_i rep_i* equal to the PSD ``target``."""
    size = n * d
    raw = [complex_normal(rng, (size, size)) / math.sqrt(size) for _ in range(m)]
    g0 = pairwise_sum(r @ r.conj().T for r in raw)
    w = psd_function(target, np.sqrt) @ psd_function(g0, lambda x: 1.0 / np.sqrt(x))
    return tuple(ModuleOperator(n, d, w @ r) for r in raw)


def _commuting_k(rng, u, spec):
    size = spec.n * spec.d
    if spec.k_kind == "identity":
        vals = np.ones(size, dtype=complex)
    elif spec.k_kind == "unitary":
        vals = spec.k_scale * np.exp(2j * np.pi * rng.random(size))
    else:
        vals = spec.k_scale * complex_normal(rng, size) / math.sqrt(2.0)
    return vals


def _scale_k(K, spec):
    if spec.k_norm is None:
        return K
    norm = K.norm()
    return K if norm == 0.0 else K * (spec.k_norm / norm)


def generate(spec):
    """Build the instance described by ``spec``.

    Returns a :class:`ControlledSystem`, or a :class:`VectorFrameInstance` in
    ``controlled_k_vector_frame`` mode.
    """
    n, d, m = spec.n, spec.d, spec.m
    size = n * d
    rng = make_rng(spec.seed)
    # U is always the first draw so shared_basis(spec) reproduces it
    u = random_unitary(rng, size)

    if spec.mode in ("general", "rank_deficient_K"):
        family = tuple(
            ModuleOperator(n, d, complex_normal(rng, (size, size)) / math.sqrt(size)) for _ in range(m)
        )
        g = complex_normal(rng, (size, size)) / math.sqrt(size)
        C = _glplus(n, d, g.conj().T @ g + spec.eps * np.eye(size))
        if spec.coupled:
            Cp = C
        else:
            g2 = complex_normal(rng, (size, size)) / math.sqrt(size)
            Cp = _glplus(n, d, g2.conj().T @ g2 + spec.eps * np.eye(size))
        if spec.mode == "general":
            k = complex_normal(rng, (size, size)) / math.sqrt(size)
        else:
            r = spec.rank if spec.rank is not None else size - 1
            a = complex_normal(rng, (size, r))
            b = complex_normal(rng, (size, r))
            k = (a @ b.conj().T) / size
        K = _scale_k(ModuleOperator(n, d, spec.k_scale * k), spec)
        return ControlledSystem(family, C, Cp, K)

    c_vals = _positive_diag(rng, size, spec.eps)
    cp_vals = _positive_diag(rng, size, spec.eps)
    C = _glplus(n, d, _diag_in(u, c_vals))
    Cp = _glplus(n, d, _diag_in(u, cp_vals))

    if spec.mode == "commuting_diagonal":
        t_vals = [complex_normal(rng, size) / math.sqrt(2.0) for _ in range(m)]
        k_vals = _commuting_k(rng, u, spec)
        if spec.null_dim:
            dead = np.arange(size - spec.null_dim, size)
            for t in t_vals:
                t[dead] = 0.0
            if spec.k_in_range:
                k_vals[dead] = 0.0
        family = tuple(ModuleOperator(n, d, _diag_in(u, t)) for t in t_vals)
        K = _scale_k(ModuleOperator(n, d, _diag_in(u, k_vals)), spec)
        return ControlledSystem(family, C, Cp, K)

    if spec.mode == "parseval":
        # diagonal family with sum_i |t_i|^2 = 1 / (c c'), so C G C' = Id exactly in U
        t_vals = np.array([complex_normal(rng, size) for _ in range(m)])
        t_vals *= 1.0 / np.sqrt(np.sum(np.abs(t_vals) ** 2, axis=0) * c_vals * cp_vals)
        family = tuple(ModuleOperator(n, d, _diag_in(u, t)) for t in t_vals)
        return ControlledSystem(family, C, Cp, ModuleOperator.identity(n, d))

    if spec.mode == "tight":
        k_vals = _commuting_k(rng, u, spec)
        K = ModuleOperator(n, d, _diag_in(u, k_vals))
        # phi = C G C' = lam K K*  with  G = lam (C C')^-1 K K*, all diagonal in U
        target = _diag_in(u, spec.lam * np.abs(k_vals) ** 2 / (c_vals * cp_vals))
        family = _whiten_family(rng, n, d, m, sym(target), spec.eps)
        return ControlledSystem(family, C, Cp, K)

    # controlled_k_vector_frame: sum_i X_i* X_i = U diag(v) U* commutes with C
    rows = m * n
    live = min(rows, size)
    v_vals = np.zeros(size)
    v_vals[:live] = 0.5 + rng.random(live)
    w = random_unitary(rng, rows)[:, :live]
    y = (w * np.sqrt(v_vals[:live])) @ u[:, :live].conj().T
    vectors = tuple(ModuleVector(n, d, y[i * n:(i + 1) * n]) for i in range(m))
    b = complex_normal(rng, (size, live)) / math.sqrt(size)
    # rows of rep(K) inside ran(V), so M = K* C K has range in ran(V)
    K = ModuleOperator(n, d, b @ u[:, :live].conj().T)
    return VectorFrameInstance(vectors, C, K, u)


def commuting_operator(spec, seed, magnitude=(0.5, 2.0)):
    """Random normal operator diagonal in the shared basis of ``spec``."""
    u = shared_basis(spec)
    rng = make_rng(seed)
    size = spec.n * spec.d
    lo, hi = magnitude
    vals = (lo + (hi - lo) * rng.random(size)) * np.exp(2j * np.pi * rng.random(size))
    return ModuleOperator(spec.n, spec.d, _diag_in(u, vals))


def commutators(sys):
    """Largest pairwise commutator among C, C', K and the family."""
    ops = [sys.C, sys.Cp, sys.K, *sys.family]
    worst = 0.0
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            a, b = ops[i].rep, ops[j].rep
            worst = max(worst, operator_norm(a @ b - b @ a))
    return worst


# suite runner

def trial_seed(seed, theorem_index, trial):
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, theorem_index, trial])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _sizes(rng, n, d, m):
    n = n if n is not None else int(rng.integers(1, 3))
    d = d if d is not None else int(rng.integers(1, 5))
    m = m if m is not None else int(rng.integers(1, 7))
    return n, d, m


def _run_one(theorem_id, tseed, tol, n=None, d=None, m=None, mode=None):
    rng = make_rng(tseed)
    n, d, m = _sizes(rng, n, d, m)
    variant = int(rng.integers(0, 1 << 30))
    size = n * d
    base = dict(n=n, d=d, m=m, seed=tseed)

    def spec_for(default_mode, **kw):
        return GenSpec(mode=mode or default_mode, **kw, **base)

    if theorem_id == "opframe_is_kframe":
        sys = generate(spec_for("general"))
        return theorems.prop_opframe_is_kframe(sys, tol)
    if theorem_id == "surjective_upgrade":
        sys = generate(spec_for("general"))
        return theorems.prop_surjective_upgrade(sys, tol)
    if theorem_id == "commuting_upgrade":
        sys = generate(spec_for("commuting_diagonal"))
        return theorems.prop_commuting_upgrade(sys.family, sys.K, sys.C, sys.Cp, tol)
    if theorem_id == "frame_iff_S_iff_factor":
        kind = variant % 3
        null_dim = 0 if kind == 0 or size == 1 else 1 + variant % max(1, size - 1)
        null_dim = min(null_dim, size - 1)
        spec = spec_for("commuting_diagonal", null_dim=null_dim, k_in_range=(kind != 2))
        return theorems.thm_frame_iff_S_iff_factor(generate(spec), tol)
    if theorem_id == "compose_Q":
        spec = spec_for("commuting_diagonal")
        Q = commuting_operator(spec, tseed ^ 0x5A5A)
        return theorems.thm_compose_Q(generate(spec), Q, tol)
    if theorem_id == "tight_iff":
        lam = 0.5 + 2.0 * rng.random()
        if variant % 2 == 0:
            spec = spec_for("tight", lam=lam, k_kind="unitary", k_scale=0.5 + rng.random())
        else:
            spec = spec_for("tight", lam=lam, k_kind="random")
        sys = generate(spec)
        A1, _ = theorems.tight_constant(sys)
        A2 = float(np.linalg.eigvalsh(sym(theorems.middle_operator(sys).phi))[-1])
        return theorems.thm_tight_iff(sys, A1, A2, tol)
    if theorem_id == "power_shift":
        lam = 0.5 + 2.0 * rng.random()
        n_pow = variant % 3
        case1 = theorems.cor_power_shift(generate(spec_for("tight", lam=lam)), n_pow, tol)
        spec2 = spec_for("tight", lam=lam, k_kind="identity")
        K2 = commuting_operator(spec2, tseed ^ 0xA5A5)
        case2 = theorems.cor_power_shift(generate(spec2), 1, tol, K=K2)
        return theorems.TheoremVerdict(
            "power_shift",
            case1.hypothesis_ok and case2.hypothesis_ok,
            case1.conclusion_ok and case2.conclusion_ok,
            {"case1": case1.witnesses, "case2": case2.witnesses},
            {**{f"case1 {k}": v for k, v in case1.defects.items()},
             **{f"case2 {k}": v for k, v in case2.defects.items()}},
        )
    if theorem_id == "perturbation":
        spec = spec_for("commuting_diagonal", k_norm=1.0)
        Q = commuting_operator(spec, tseed ^ 0x3C3C)
        return theorems.thm_perturbation(generate(spec), Q, tol)
    raise KeyError(theorem_id)


def _hypothesis_key(key):
    # commutator residuals and base tightness; conclusion defects may be large by design
    last = key.split()[-1]
    return last.startswith("[") or last in ("tight_defect", "k_tight_defect")


def run_suite(suite, trials=10, seed=0, tol=DEFAULT_TOL, n=None, d=None, m=None, mode=None, max_attempts=20):
    """Run each theorem checker on ``trials`` hypothesis-satisfying instances.

    Instances whose hypotheses fail are redrawn (up to ``max_attempts`` per
    trial) and counted under ``hypothesis_redraws``. ``mode`` forces one
    generator mode for every theorem instead of each theorem's own choice. Returns a JSON-ready
    summary; ``summary["ok"]`` is False iff some conclusion failed or was
    inconclusive.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if mode is not None and mode not in MODES[:-1]:
        raise InfeasibleSpec(f"run_suite needs a system-producing mode, got {mode!r}")
    results = {}
    all_ok = True
    for theorem_id in suite:
        if theorem_id not in theorems.THEOREM_IDS:
            raise KeyError(theorem_id)
        index = theorems.THEOREM_IDS.index(theorem_id)
        start = time.perf_counter()
        passed = failed = inconclusive = redraws = 0
        failing, max_defect = [], 0.0
        for t in range(trials):
            for attempt in range(max_attempts):
                tseed = trial_seed(seed, index, t * max_attempts + attempt)
                try:
                    verdict = _run_one(theorem_id, tseed, tol, n, d, m, mode)
                except Inconclusive:
                    inconclusive += 1
                    failing.append(tseed)
                    break
                except OpFrameError:
                    redraws += 1
                    continue
                if not verdict.hypothesis_ok:
                    redraws += 1
                    continue
                for key, val in verdict.defects.items():
                    if _hypothesis_key(key) and math.isfinite(val):
                        max_defect = max(max_defect, float(val))
                if verdict.conclusion_ok:
                    passed += 1
                else:
                    failed += 1
                    failing.append(tseed)
                break
            else:
                failed += 1
                failing.append(tseed)
        ok = failed == 0 and inconclusive == 0
        all_ok = all_ok and ok
        results[theorem_id] = {
            "trials": trials,
            "passed": passed,
            "failed": failed,
            "inconclusive": inconclusive,
            "hypothesis_redraws": redraws,
            "max_hypothesis_defect": max_defect,
            "failing_seeds": sorted(failing),
            "seconds": round(time.perf_counter() - start, 3),
            "ok": ok,
        }
    return {"seed": seed, "tol": tol, "ok": all_ok, "theorems": results}


def format_table(summary):
    lines = [f"{'theorem':<24}{'pass':>6}{'fail':>6}{'inc':>5}{'redraw':>8}{'max hyp defect':>16}{'sec':>8}"]
    for tid, row in summary["theorems"].items():
        lines.append(
            f"{tid:<24}{row['passed']:>6}{row['failed']:>6}{row['inconclusive']:>5}"
            f"{row['hypothesis_redraws']:>8}{row['max_hypothesis_defect']:>16.2e}{row['seconds']:>8.2f}"
        )
    lines.append("PASS" if summary["ok"] else "FAIL")
    return "\n".join(lines)
