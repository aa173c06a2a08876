import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import traced_algebras
from vnspectral.algebra import (
    AlgebraElement,
    FiniteGroup,
    TracedAlgebra,
    compatibility_check,
    cyclic_group,
    dihedral_group,
    group_algebra,
    inner_product,
    load_group_table,
    right_multiply,
    symmetric_group,
    trace,
)

HALVES = TracedAlgebra(((1, 0.5), (1, 0.5)))


def test_trace_hand_values():
    m2 = TracedAlgebra(((2, 0.5),))
    assert trace(m2.element([np.diag([3.0, 5.0])])) == pytest.approx(4.0)
    assert trace(HALVES.element([np.array([[2.0]]), np.array([[6.0]])])) == pytest.approx(4.0)


@given(traced_algebras())
def test_identity_has_unit_trace(alg):
    assert trace(alg.identity()) == pytest.approx(1.0, abs=1e-12)
    assert inner_product(alg.identity(), alg.identity()) == pytest.approx(1.0, abs=1e-12)


def test_inner_product_nilpotent():
    alg = TracedAlgebra(((2, 0.5),))
    a = alg.element([np.array([[0.0, 1.0], [0.0, 0.0]])])
    assert inner_product(a, a) == pytest.approx(0.5)


@given(traced_algebras(), st.integers(0, 2 ** 32 - 1))
def test_tracial_and_faithful(alg, seed):
    rng = np.random.default_rng(seed)
    a, b = alg.random_element(rng), alg.random_element(rng)
    ab, ba = trace(a * b), trace(b * a)
    assert abs(ab - ba) <= 1e-12 * (1 + abs(ab))
    assert inner_product(a, a).real > 0
    assert abs(inner_product(a, a).imag) <= 1e-12
    # conjugate symmetry
    assert inner_product(a, b) == pytest.approx(np.conj(inner_product(b, a)), abs=1e-12)


def test_zero_element_has_zero_norm():
    alg = TracedAlgebra(((1, 0.25), (3, 0.25)))
    assert inner_product(alg.zero(), alg.zero()) == 0


@pytest.mark.parametrize("blocks", [((1, 0.5),), ((2, 0.5), (1, 0.5)), ((1, 0.0), (1, 1.0)), ((0, 1.0),)])
def test_invalid_algebras_rejected(blocks):
    with pytest.raises(ValueError):
        TracedAlgebra(blocks)


def test_element_shape_checked():
    with pytest.raises(ValueError):
        AlgebraElement(HALVES, [np.eye(2), np.eye(1)])


def test_parent_mismatch_rejected():
    other = TracedAlgebra.matrix(2)
    with pytest.raises(ValueError):
        inner_product(HALVES.identity(), other.identity())


def test_trivial_group_algebra():
    ga = group_algebra(cyclic_group(1))
    assert ga.algebra.blocks == ((1, 1.0),)
    assert trace(ga.embed([2.5])) == pytest.approx(2.5)


def test_z2_canonical_trace():
    ga = group_algebra(cyclic_group(2))
    assert trace(ga.embed([0.3, -1.7])) == pytest.approx(0.3)


def test_z3_sum_of_elements():
    ga = group_algebra(cyclic_group(3))
    f = [1.0, 1.0, 1.0]
    assert ga.canonical_trace(f) == pytest.approx(1.0)
    assert trace(ga.embed(f)) == pytest.approx(1.0)


@pytest.mark.parametrize("group", [cyclic_group(4), dihedral_group(3), dihedral_group(4), cyclic_group(8)],
                         ids=lambda g: g.name)
def test_group_algebra_round_trip_on_basis(group):
    ga = group_algebra(group)
    assert sum(w * n for n, w in ga.algebra.blocks) == pytest.approx(1.0, abs=1e-12)
    for g in range(group.order):
        coeffs = np.zeros(group.order)
        coeffs[g] = 1.0
        expected = 1.0 if g == group.identity_index else 0.0
        assert abs(trace(ga.embed(coeffs)) - expected) <= 1e-12


def test_nonabelian_block_structure():
    # S3 has irreducible representations of dimensions 1, 1, 2
    ga = group_algebra(symmetric_group(3))
    assert sorted(ga.algebra.dims) == [1, 1, 2]
    for n, w in ga.algebra.blocks:
        assert w == pytest.approx(n / 6)


def test_isomorphism_is_multiplicative(rng):
    group = dihedral_group(3)
    ga = group_algebra(group)
    for g in range(group.order):
        for h in range(group.order):
            prod = ga.element(g) * ga.element(h)
            assert prod.allclose(ga.element(group.mul(g, h)), atol=1e-12)


def test_group_axioms_checked():
    with pytest.raises(ValueError):
        FiniteGroup(np.array([[0, 1], [1, 1]]))
    with pytest.raises(ValueError):
        FiniteGroup(np.array([[1, 0], [0, 1]]))


def test_group_table_text_round_trip(tmp_path):
    group = dihedral_group(3)
    path = tmp_path / "d3.txt"
    path.write_text(group.to_text())
    back = load_group_table(path)
    assert np.array_equal(back.mult_table, group.mult_table)


def test_compatibility_over_z2(rng):
    alg = group_algebra(cyclic_group(2)).algebra
    for _ in range(20):
        a = alg.random_element(rng)
        x = [rng.standard_normal((3 * n, n)) + 1j * rng.standard_normal((3 * n, n)) for n in alg.dims]
        y = [rng.standard_normal((3 * n, n)) + 1j * rng.standard_normal((3 * n, n)) for n in alg.dims]
        assert compatibility_check(a, x, y)
        assert compatibility_check(alg.identity(), x, y)


def test_compatibility_negative_control(rng):
    alg = TracedAlgebra.matrix(2)
    a = alg.random_element(rng)
    x = [rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))]
    y = [rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))]

    shift = np.eye(4, k=1)

    def mixed(v, b):
        # right action composed with a non-self-adjoint row shift
        return [shift @ vv @ bb for vv, bb in zip(v, b.block_data)]

    assert compatibility_check(a, x, y, right_action=right_multiply)
    assert not compatibility_check(a, x, y, right_action=mixed)


def test_compatibility_dimension_mismatch(rng):
    alg = TracedAlgebra.matrix(2)
    with pytest.raises(ValueError):
        compatibility_check(alg.identity(), [np.zeros((3, 2))], [np.zeros((3, 2))])
