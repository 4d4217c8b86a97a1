import json
import math

import numpy as np
import pytest

from opframe import theorems as th
from opframe.errors import Inconclusive
from opframe.frames import ControlledSystem, optimal_bounds
from opframe.lab import GenSpec, commuting_operator, generate
from opframe.operators import GLPlusOperator, ModuleOperator


def scalar(n, d, t):
    return ModuleOperator.scalar(n, d, t)


def glplus(n, d, t):
    return GLPlusOperator(n, d, t * np.eye(n * d, dtype=complex), float(t))


def diag_sys(values, K=None):
    """n = 1 system with one diagonal family member."""
    d = len(values)
    fam = (ModuleOperator(1, d, np.diag(np.sqrt(np.array(values, dtype=float))).astype(complex)),)
    return ControlledSystem.plain(fam, K)


# opframe_is_kframe

def test_opframe_identity_k():
    sys = diag_sys([1.0, 2.0, 3.0])
    v = th.prop_opframe_is_kframe(sys)
    assert v.hypothesis_ok and v.conclusion_ok
    assert v.witnesses["lower"] == pytest.approx(1.0)


def test_opframe_k_two():
    sys = diag_sys([1.0, 2.0], scalar(1, 2, 2.0))
    v = th.prop_opframe_is_kframe(sys)
    assert v.conclusion_ok and v.witnesses["lower"] == pytest.approx(0.25)


def test_opframe_random():
    for s in range(20):
        v = th.prop_opframe_is_kframe(generate(GenSpec(2, 2, 3, "general", seed=s)))
        assert v.hypothesis_ok and v.conclusion_ok


def test_opframe_hypothesis_gate():
    # not an operator frame: the family kills a direction
    sys = ControlledSystem.plain((ModuleOperator(1, 2, np.diag([1.0, 0.0]).astype(complex)),))
    v = th.prop_opframe_is_kframe(sys)
    assert not v.hypothesis_ok and not v.conclusion_ok


# surjective_upgrade

def test_surjective_identity_and_scalar():
    v = th.prop_surjective_upgrade(diag_sys([1.0, 2.0]))
    assert v.conclusion_ok and v.witnesses["m"] == pytest.approx(1.0)
    t = 3.0
    v = th.prop_surjective_upgrade(diag_sys([1.0, 2.0], scalar(1, 2, t)))
    assert v.witnesses["m"] == pytest.approx(t**2)
    # A for K = tI is A_plain / t^2, so A m recovers the plain lower bound
    assert v.witnesses["lower"] == pytest.approx(1.0)


def test_surjective_gate():
    v = th.prop_surjective_upgrade(diag_sys([1.0, 2.0], ModuleOperator(1, 2, np.diag([1.0, 0.0]).astype(complex))))
    assert not v.hypothesis_ok


# commuting_upgrade

def test_commuting_trivial_and_scalar():
    fam = (ModuleOperator(1, 2, np.diag([1.0, 2.0]).astype(complex)),)
    K = ModuleOperator.identity(1, 2)
    v = th.prop_commuting_upgrade(fam, K, glplus(1, 2, 1.0), glplus(1, 2, 1.0))
    assert v.conclusion_ok and v.witnesses["m"] == pytest.approx(1.0)
    v = th.prop_commuting_upgrade(fam, K, glplus(1, 2, 2.0), glplus(1, 2, 3.0))
    assert v.conclusion_ok
    assert v.witnesses["lower"] == pytest.approx(6 * v.witnesses["A"])
    assert v.witnesses["upper"] == pytest.approx(6 * v.witnesses["B"])


def test_commuting_gate_names_offender():
    sys = generate(GenSpec(2, 2, 2, "general", seed=0))
    v = th.prop_commuting_upgrade(sys.family, sys.K, sys.C, sys.Cp)
    assert not v.hypothesis_ok
    assert "[C,T0]" in v.witnesses["offending"]


# frame_iff_S_iff_factor

def test_frame_iff_parseval():
    sys = generate(GenSpec(1, 3, 2, "parseval", seed=0))
    v = th.thm_frame_iff_S_iff_factor(sys)
    assert v.conclusion_ok and v.witnesses["frame"] and v.witnesses["factored"]
    assert v.witnesses["A_opt"] == pytest.approx(1.0, rel=1e-9)


def test_frame_iff_plain_parseval_q_is_identity():
    I = ModuleOperator.identity(1, 2)
    v = th.thm_frame_iff_S_iff_factor(ControlledSystem.plain((I,)))
    assert v.conclusion_ok
    assert np.allclose(v.witnesses["Q"], np.eye(2))


def test_frame_iff_built_to_fail():
    spec = GenSpec(2, 2, 3, "commuting_diagonal", seed=2, null_dim=1, k_in_range=False)
    v = th.thm_frame_iff_S_iff_factor(generate(spec))
    assert v.hypothesis_ok and v.conclusion_ok
    assert not v.witnesses["frame"] and not v.witnesses["dominated"] and not v.witnesses["factored"]


def test_frame_iff_random_commuting():
    for s in range(10):
        spec = GenSpec(2, 2, 3, "commuting_diagonal", seed=s, null_dim=s % 3, k_in_range=s % 2 == 0)
        v = th.thm_frame_iff_S_iff_factor(generate(spec))
        assert v.hypothesis_ok and v.conclusion_ok


# compose_Q

def test_compose_q_identity_and_two():
    sys = generate(GenSpec(2, 2, 2, "commuting_diagonal", seed=1))
    v = th.thm_compose_Q(sys, ModuleOperator.identity(2, 2))
    assert v.conclusion_ok and v.witnesses["upper"] == pytest.approx(v.witnesses["B"])
    v = th.thm_compose_Q(sys, scalar(2, 2, 2.0))
    assert v.conclusion_ok and v.witnesses["upper"] == pytest.approx(4 * v.witnesses["B"])


def test_compose_q_random_commuting():
    for s in range(10):
        spec = GenSpec(2, 2, 3, "commuting_diagonal", seed=s)
        v = th.thm_compose_Q(generate(spec), commuting_operator(spec, 1000 + s))
        assert v.hypothesis_ok and v.conclusion_ok


def test_compose_q_gate():
    spec = GenSpec(2, 2, 2, "commuting_diagonal", seed=3)
    Q = generate(GenSpec(2, 2, 1, "general", seed=4)).family[0]
    assert not th.thm_compose_Q(generate(spec), Q).hypothesis_ok


# tight_iff

def test_tight_scalar_example():
    I = ModuleOperator.identity(1, 2)
    sys = ControlledSystem.plain((I,), scalar(1, 2, 1 / math.sqrt(2)))
    v = th.thm_tight_iff(sys, 2.0, 1.0)
    assert v.conclusion_ok and v.witnesses["tight_frame"] and v.witnesses["kk_scalar"]


def test_tight_identity_case():
    sys = generate(GenSpec(1, 3, 2, "parseval", seed=5))
    v = th.thm_tight_iff(sys, 1.0, 1.0)
    assert v.conclusion_ok and v.witnesses["kk_scalar"]


@pytest.mark.parametrize("seed", range(10))
def test_tight_unitary_scaled(seed):
    rng = np.random.default_rng(seed)
    t = 0.5 + rng.random()
    lam = 0.5 + 2 * rng.random()
    sys = generate(GenSpec(2, 2, 3, "tight", seed=seed, lam=lam, k_kind="unitary", k_scale=t))
    A1, _ = th.tight_constant(sys)
    assert A1 == pytest.approx(lam, rel=1e-9)
    v = th.thm_tight_iff(sys, A1, A1 * t**2)
    assert v.conclusion_ok and v.witnesses["tight_frame"] and v.witnesses["kk_scalar"]


def test_tight_non_scalar_k_both_false():
    sys = generate(GenSpec(2, 2, 3, "tight", seed=1, lam=1.5, k_kind="random"))
    A1, _ = th.tight_constant(sys)
    v = th.thm_tight_iff(sys, A1, optimal_bounds(sys).upper)
    assert v.conclusion_ok and not v.witnesses["tight_frame"] and not v.witnesses["kk_scalar"]


def test_tight_gate():
    v = th.thm_tight_iff(generate(GenSpec(2, 2, 3, "general", seed=0)), 1.0, 1.0)
    assert not v.hypothesis_ok


# power_shift

def test_power_shift_zero_is_identity():
    sys = generate(GenSpec(2, 2, 2, "tight", seed=0, lam=2.0))
    v = th.cor_power_shift(sys, 0)
    assert v.conclusion_ok and v.witnesses["lambda"] == pytest.approx(2.0)


def test_power_shift_scalar_k():
    sys = generate(GenSpec(1, 3, 2, "tight", seed=0, lam=1.7, k_kind="identity"))
    # phi = 1.7 I and KK* = 1.69 I: still tight, with constant 1.7 / 1.69
    sys = sys.replace(K=scalar(1, 3, 1.3))
    lam, _ = th.tight_constant(sys)
    assert lam == pytest.approx(1.7 / 1.69)
    v = th.cor_power_shift(sys, 2)
    assert v.conclusion_ok and v.witnesses["lambda"] == pytest.approx(lam)


@pytest.mark.parametrize("n_pow", [1, 2])
def test_power_shift_random_normal_k(n_pow):
    for s in range(5):
        v = th.cor_power_shift(generate(GenSpec(2, 2, 3, "tight", seed=s, lam=1.2)), n_pow)
        assert v.hypothesis_ok and v.conclusion_ok


def test_power_shift_case_two():
    spec = GenSpec(2, 2, 3, "tight", seed=4, lam=0.8, k_kind="identity")
    v = th.cor_power_shift(generate(spec), 1, K=commuting_operator(spec, 9))
    assert v.witnesses["case"] == 2 and v.hypothesis_ok and v.conclusion_ok


# perturbation

def test_perturbation_scalar_q():
    sys = generate(GenSpec(1, 4, 2, "commuting_diagonal", seed=0, k_kind="identity"))
    v = th.thm_perturbation(sys, scalar(1, 4, 2.0))
    A, B = v.witnesses["A"], v.witnesses["B"]
    assert v.conclusion_ok
    assert v.witnesses["M"] == pytest.approx(4 * A, rel=1e-9)
    assert v.witnesses["N"] == pytest.approx(4 * B, rel=1e-9)
    v = th.thm_perturbation(sys, ModuleOperator.identity(1, 4))
    assert v.witnesses["M"] == pytest.approx(A) and v.witnesses["N"] == pytest.approx(B)


def test_perturbation_random_diagonal():
    for s in range(20):
        spec = GenSpec(1, 4, 3, "commuting_diagonal", seed=s, k_norm=1.0)
        v = th.thm_perturbation(generate(spec), commuting_operator(spec, 77 + s))
        assert v.hypothesis_ok and v.conclusion_ok


def test_perturbation_gates_a_greater_than_b():
    # K small makes the optimal lower bound exceed the upper bound
    sys = generate(GenSpec(1, 2, 2, "parseval", seed=0)).replace(K=scalar(1, 2, 0.1))
    v = th.thm_perturbation(sys, scalar(1, 2, 2.0))
    assert not v.hypothesis_ok


def test_perturbation_singular_q():
    sys = generate(GenSpec(1, 2, 2, "parseval", seed=0))
    v = th.thm_perturbation(sys, ModuleOperator(1, 2, np.diag([1.0, 0.0]).astype(complex)))
    assert not v.hypothesis_ok and v.witnesses["invertible"] is False


# shared behaviour

def test_verdict_serializes():
    v = th.thm_frame_iff_S_iff_factor(generate(GenSpec(1, 2, 2, "parseval", seed=0)))
    doc = json.loads(json.dumps(v.to_dict()))
    assert set(doc) == {"theorem_id", "hypothesis_ok", "conclusion_ok", "witnesses", "defects"}


def test_zero_k_vacuous():
    sys = generate(GenSpec(1, 2, 1, "parseval", seed=0)).replace(K=ModuleOperator.zeros(1, 2))
    v = th.prop_opframe_is_kframe(sys)
    assert v.conclusion_ok and v.witnesses["vacuous"]


def test_deterministic():
    sys = generate(GenSpec(2, 2, 3, "commuting_diagonal", seed=8))
    a = th.thm_frame_iff_S_iff_factor(sys).to_dict()
    b = th.thm_frame_iff_S_iff_factor(sys).to_dict()
    assert a == b


def test_inconclusive_near_boundary():
    # lower bound 1 certified at 1 + 5 tol: inside the grey zone
    I = ModuleOperator.identity(1, 2)
    sys = ControlledSystem.plain((I,))
    with pytest.raises(Inconclusive):
        th._certify(sys, 1.0 + 5e-9 * 1.5, None, 1e-9, {})
