import math

import numpy as np
import pytest

from opframe.errors import NonCommutingControllers, NonHermitianMiddle, NotPositive, TooManyVectors
from opframe.frames import (
    ControlledSystem,
    analysis,
    c_controlled_k_frame_bounds,
    controlled_frame_operator,
    gamma_operator,
    l2_pairing,
    lift_constants,
    lift_from_controlled_k_frame,
    middle_operator,
    optimal_bounds,
    synthesis,
    verify_bounds,
    verify_c_controlled_k_frame,
)
from opframe.lab import GenSpec, commuting_operator, generate
from opframe.module import ModuleVector, inner_product, random_vector
from opframe.operators import (
    GLPlusOperator,
    ModuleOperator,
    compose,
    is_positive,
    is_self_adjoint,
    random_glplus,
    random_operator,
)

import oracles


def scalar_glplus(n, d, t):
    return GLPlusOperator(n, d, t * np.eye(n * d, dtype=complex), float(t))


def worked_instance():
    fam = (ModuleOperator.identity(1, 2), ModuleOperator(1, 2, np.diag([1.0, 0.0])))
    return ControlledSystem.plain(fam)


def test_middle_examples():
    I = ModuleOperator.identity(2, 2)
    assert np.allclose(middle_operator(ControlledSystem.plain((I,))).phi, np.eye(4))
    sys = ControlledSystem((I,), scalar_glplus(2, 2, 2.0), scalar_glplus(2, 2, 3.0), I)
    assert np.allclose(middle_operator(sys).phi, 6 * np.eye(4))


def test_middle_hermitian_when_c_equals_cprime():
    sys = generate(GenSpec(2, 3, 4, "general", seed=5))
    assert middle_operator(sys).hermitian_defect <= 1e-12 * np.abs(middle_operator(sys).phi).max()


@pytest.mark.parametrize("seed", range(5))
def test_middle_represents_the_frame_sum(seed):
    sys = generate(GenSpec(2, 2, 3, "general", seed=seed))
    x = random_vector(2, 2, seed + 100)
    total = sum(
        inner_product(t(sys.C(x)), t(sys.Cp(x))) for t in sys.family
    )
    X = x.stacked
    assert np.abs(X @ middle_operator(sys).phi @ X.conj().T - total).max() <= 1e-10 * max(1, np.abs(total).max())


def test_verify_examples():
    I = ModuleOperator.identity(2, 2)
    parseval = ControlledSystem.plain((I,))
    assert verify_bounds(parseval, 1.0, 1.0).ok
    sys = ControlledSystem((I,), scalar_glplus(2, 2, 2.0), scalar_glplus(2, 2, 3.0), I)
    assert verify_bounds(sys, 6.0, 6.0).ok
    zero_k = sys.replace(K=ModuleOperator.zeros(2, 2))
    assert verify_bounds(zero_k, 123.0, None).lower is True


def test_verify_one_sided():
    v = verify_bounds(worked_instance(), None, 2.0)
    assert v.lower is None and v.upper is True and v.ok


def test_non_hermitian_middle_is_an_error():
    sys = generate(GenSpec(2, 2, 2, "general", seed=1, coupled=False))
    with pytest.raises(NonHermitianMiddle) as err:
        verify_bounds(sys, 0.0, 1e6)
    assert err.value.defect > err.value.bound
    # the escape hatch uses the Hermitian part, which need not be positive
    h = middle_operator(sys).hermitian
    assert verify_bounds(sys, 0.0, None, symmetrize=True).lower == oracles.psd_by_inertia(h, 1e-9)
    with pytest.raises(NotPositive):
        verify_bounds(sys, None, 1e6, symmetrize=True)


def test_worked_bounds():
    b = optimal_bounds(worked_instance())
    assert b.lower == pytest.approx(1.0, abs=1e-8)
    assert b.upper == pytest.approx(2.0, abs=1e-8)
    assert verify_bounds(worked_instance(), 1.0, 2.0).ok
    assert not verify_bounds(worked_instance(), 1.0 + 1e-8, None).ok
    assert not verify_bounds(worked_instance(), None, 2.0 - 1e-8).ok


def test_parseval_and_homogeneity():
    I = ModuleOperator.identity(1, 3)
    assert optimal_bounds(ControlledSystem.plain((I,))).as_tuple() == pytest.approx((1.0, 1.0))
    sys = generate(GenSpec(2, 2, 3, "general", seed=7))
    b = optimal_bounds(sys)
    scaled = sys.replace(family=tuple(t * 3.0 for t in sys.family))
    b3 = optimal_bounds(scaled)
    assert b3.lower == pytest.approx(9 * b.lower, rel=1e-9)
    assert b3.upper == pytest.approx(9 * b.upper, rel=1e-9)


def test_zero_k_lower_is_inf():
    sys = worked_instance().replace(K=ModuleOperator.zeros(1, 2))
    assert math.isinf(optimal_bounds(sys).lower)


@pytest.mark.parametrize("seed", range(8))
def test_optimal_bounds_are_sharp(seed):
    sys = generate(GenSpec(1 + seed % 2, 2, 3, "general", seed=seed))
    b = optimal_bounds(sys)
    tol = 1e-9
    assert verify_bounds(sys, b.lower * (1 - 10 * tol), b.upper * (1 + 10 * tol)).ok
    # resolution is relative to ||phi||, so ill-conditioned draws need a coarser step
    assert not verify_bounds(sys, b.lower * (1 + 1e-4), None).ok
    assert not verify_bounds(sys, None, b.upper * (1 - 1e-4)).ok
    h = middle_operator(sys).hermitian
    M = sys.k_gram()
    ref = oracles.largest_scaling_by_inertia(h, M, hi=10 * b.upper / max(np.abs(M).max(), 1e-300) + 10)
    assert b.lower == pytest.approx(ref, rel=1e-8)


def test_rank_deficient_k_lower_bound():
    # phi = [[1, .5], [.5, 1]], K = diag(1, 0): the best constant is 3/4
    s = np.array([[1.0, 0.5], [0.5, 1.0]])
    root = np.linalg.cholesky(s).conj().T
    fam = (ModuleOperator(1, 2, root.conj().T.astype(complex)),)
    sys = ControlledSystem.plain(fam, ModuleOperator(1, 2, np.diag([1.0, 0.0])))
    assert np.allclose(middle_operator(sys).phi, s)
    assert optimal_bounds(sys).lower == pytest.approx(0.75, rel=1e-12)


def test_range_failure_gives_zero_lower():
    fam = (ModuleOperator(1, 2, np.diag([1.0, 0.0])),)
    sys = ControlledSystem.plain(fam, ModuleOperator(1, 2, np.diag([0.0, 1.0])))
    assert optimal_bounds(sys).lower == 0.0


def test_analysis_synthesis_examples():
    I = ModuleOperator.identity(2, 2)
    fam = (random_operator(2, 2, 1), random_operator(2, 2, 2))
    x = random_vector(2, 2, 3)
    plain = ControlledSystem.plain(fam)
    for t, out in zip(fam, analysis(plain, x)):
        assert np.allclose(out.stacked, t(x).stacked)
    assert np.allclose(synthesis(ControlledSystem.plain((I,)), analysis(ControlledSystem.plain((I,)), x)).stacked, x.stacked)


def test_analysis_synthesis_pairing_with_commuting_controllers():
    spec = GenSpec(2, 2, 3, "commuting_diagonal", seed=4)
    sys = generate(spec)
    x = random_vector(2, 2, 5)
    coeffs = [random_vector(2, 2, 10 + i) for i in range(sys.m)]
    lhs = l2_pairing(analysis(sys, x), coeffs)
    rhs = inner_product(x, synthesis(sys, coeffs))
    assert np.abs(lhs - rhs).max() <= 1e-9


def test_analysis_needs_commuting_controllers():
    C = random_glplus(2, 2, seed=1)
    Cp = random_glplus(2, 2, seed=2)
    sys = ControlledSystem((random_operator(2, 2, 0),), C, Cp, ModuleOperator.identity(2, 2))
    with pytest.raises(NonCommutingControllers):
        analysis(sys, random_vector(2, 2, 0))


def test_frame_operator_examples():
    fam = (random_operator(2, 2, 1), random_operator(2, 2, 2))
    S = controlled_frame_operator(ControlledSystem.plain(fam))
    expected = sum(compose(t.__class__(2, 2, t.rep.conj().T), t).rep for t in fam)
    assert np.allclose(S.rep, expected)
    assert is_positive(S)
    I = ModuleOperator.identity(2, 2)
    sys = ControlledSystem((I,), scalar_glplus(2, 2, 2.0), scalar_glplus(2, 2, 3.0), I)
    assert np.allclose(controlled_frame_operator(sys).rep, 6 * np.eye(4))


def test_frame_operator_equals_composite_when_commuting():
    sys = generate(GenSpec(2, 2, 3, "commuting_diagonal", seed=9))
    S = controlled_frame_operator(sys)
    assert is_self_adjoint(S) and is_positive(S)
    x = random_vector(2, 2, 1)
    composite = synthesis(sys, analysis(sys, x))
    assert np.abs(S(x).stacked - composite.stacked).max() <= 1e-9


def test_vector_frame_examples():
    basis = [ModuleVector.basis(1, 3, i) for i in range(3)]
    I = ModuleOperator.identity(1, 3)
    assert verify_c_controlled_k_frame(basis, I, I, 1.0, 1.0)
    b = c_controlled_k_frame_bounds([v * 2.0 for v in basis], I, I)
    assert b.as_tuple() == pytest.approx((4.0, 4.0))


def test_vector_frame_classical_oracle():
    vecs = [random_vector(1, 3, s) for s in range(5)]
    I = ModuleOperator.identity(1, 3)
    b = c_controlled_k_frame_bounds(vecs, I, I)
    frame_matrix = sum(v.stacked.conj().T @ v.stacked for v in vecs)
    w = np.linalg.eigvalsh(frame_matrix)
    assert b.lower == pytest.approx(w[0], rel=1e-9)
    assert b.upper == pytest.approx(w[-1], rel=1e-9)


def test_gamma_definition():
    x = random_vector(2, 3, 0)
    for i in range(3):
        G = gamma_operator(x, i)
        for j in range(3):
            e = ModuleVector.basis(2, 3, j)
            want = ModuleVector.zeros(2, 3).stacked.copy()
            want[:, 2 * i:2 * i + 2] = inner_product(e, x)
            assert np.allclose(G(e).stacked, want)


def test_lift_parseval():
    basis = [ModuleVector.basis(1, 3, i) for i in range(3)]
    I = ModuleOperator.identity(1, 3)
    sys = lift_from_controlled_k_frame(basis, I, I)
    assert optimal_bounds(sys).as_tuple() == pytest.approx((1.0, 1.0))


def test_lift_too_many_vectors():
    with pytest.raises(TooManyVectors):
        lift_from_controlled_k_frame([random_vector(1, 2, s) for s in range(3)],
                                     ModuleOperator.identity(1, 2), ModuleOperator.identity(1, 2))


@pytest.mark.parametrize("seed", range(5))
def test_lift_end_to_end(seed):
    inst = generate(GenSpec(2, 3, 3, "controlled_k_vector_frame", seed=seed))
    b = c_controlled_k_frame_bounds(inst.vectors, inst.C, inst.K)
    assert b.lower > 0
    assert verify_c_controlled_k_frame(inst.vectors, inst.C, inst.K, b.lower, b.upper)
    A_m, B, m = lift_constants(b.lower, b.upper, inst.C)
    sys = lift_from_controlled_k_frame(inst.vectors, inst.C, inst.K)
    assert verify_bounds(sys, A_m, B).ok


def test_system_is_immutable():
    sys = worked_instance()
    with pytest.raises(Exception):
        sys.K = None
    assert sys == worked_instance()


def test_commuting_operator_commutes():
    spec = GenSpec(2, 2, 2, "commuting_diagonal", seed=3)
    sys = generate(spec)
    Q = commuting_operator(spec, 1)
    assert np.abs(Q.rep @ sys.C.rep - sys.C.rep @ Q.rep).max() <= 1e-12
