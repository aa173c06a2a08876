import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vnspectral.algebra import TracedAlgebra
from vnspectral.hilbert_module import counting_function
from vnspectral.lattice import (
    LatticeModel,
    Section,
    assemble_calD,
    cutoff_sequence,
    dirac,
    formal_adjoint,
    metric_gradient,
    multiplication_commutator,
    site_multiplication,
)

HALVES = TracedAlgebra(((1, 0.5), (1, 0.5)))


def test_dirac_hand_assembly():
    d = dirac(LatticeModel.uniform(3, 1.0))
    expect = np.array([[-1, 1, 0], [0, -1, 1], [0, 0, -1]], dtype=complex)
    assert np.array_equal(d.action.blocks[0], expect)
    assert d.bandwidth == 1
    assert d.symbol_bound == pytest.approx(1.0)


def test_dirac_kills_constants_in_the_interior():
    model = LatticeModel.interval(-1, 1, 0.1)
    d = dirac(model)
    s = Section(model, TracedAlgebra.scalars(), 1, (np.ones((model.N, 1)),))
    out = d.apply(s).data[0][:, 0]
    assert np.abs(out[:-1]).max() == 0
    assert out[-1] == pytest.approx(-10.0)


def test_symbol_bound_is_max_edge_coefficient():
    model = LatticeModel.interval(-2, 2, 0.1, metric=lambda x: 1 + x ** 2)
    d = dirac(model)
    assert d.symbol_bound == pytest.approx(model.edge_coefficients.max())
    assert d.symbol_bound == pytest.approx(1 / (0.1 * np.sqrt(model.metric_scale.min())), rel=0.05)


def test_dirac_acts_identically_on_the_fiber():
    model = LatticeModel.uniform(4, 0.5)
    d1, d2 = dirac(model), dirac(model, HALVES, 2)
    blk = d2.action.blocks[0]
    assert np.array_equal(blk, np.kron(d1.action.blocks[0], np.eye(2)))


@given(st.integers(0, 2 ** 32 - 1))
def test_adjoint_identity_nonuniform_measure(seed):
    rng = np.random.default_rng(seed)
    model = LatticeModel.interval(-2, 2, 0.2, mu=lambda x: 1 + 0.5 * np.sin(x) ** 2,
                                  metric=lambda x: 1 + 0.3 * np.cos(x))
    d = dirac(model, HALVES, 2)
    ds = formal_adjoint(d)
    for _ in range(5):
        s1 = Section.random(model, HALVES, 2, rng)
        s2 = Section.random(model, HALVES, 2, rng)
        lhs = d.apply(s1).inner(s2)
        rhs = s1.inner(ds.apply(s2))
        assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))


def test_adjoint_is_involutive(rng):
    model = LatticeModel(6, 0.3, mu=1 + rng.random(6))
    d = dirac(model)
    back = formal_adjoint(formal_adjoint(d))
    assert np.allclose(back.action.blocks[0], d.action.blocks[0], atol=1e-14, rtol=0)


def test_self_adjoint_operator_is_its_own_adjoint(rng):
    model = LatticeModel(5, 1.0, mu=1 + rng.random(5))
    d = dirac(model)
    h = formal_adjoint(d) @ d
    assert np.allclose(formal_adjoint(h).action.blocks[0], h.action.blocks[0], atol=1e-13)


def test_calD_of_zero_is_zero():
    model = LatticeModel.uniform(4)
    zero = site_multiplication(model, TracedAlgebra.scalars(), 1, np.zeros(4))
    zero = zero.with_action(zero.action, 1)
    assert not assemble_calD(zero).action.blocks[0].any()


def test_calD_spectrum_symmetric():
    model = LatticeModel.interval(-2, 2, 0.1, mu="gaussian-bump")
    cd = assemble_calD(dirac(model, HALVES))
    hat = cd.hat()
    for b in hat.blocks:
        ev = np.sort(np.linalg.eigvalsh(b))
        assert np.allclose(ev, -ev[::-1], atol=1e-10)


def test_calD_counting_link():
    model = LatticeModel.interval(-2, 2, 0.1)
    cd = assemble_calD(dirac(model)).hat()
    sq = cd @ cd
    kernel = counting_function(sq, 0.0)
    for lam in (0.5, 3.0, 12.0):
        # N(lam^2; calD^2) counts |mu| <= lam: both signs of (0, lam] plus the kernel
        pos = counting_function(cd, lam) - counting_function(cd, 0.0)
        assert counting_function(sq, lam ** 2) == pytest.approx(2 * pos + kernel)


def test_calD_requires_ungraded_input():
    cd = assemble_calD(dirac(LatticeModel.uniform(3)))
    with pytest.raises(ValueError):
        assemble_calD(cd)


@pytest.mark.parametrize("k", [1, 2, 5, 10])
def test_cutoff_properties(k):
    model = LatticeModel.interval(-40, 40, 0.1, compact=(-1, 1))
    phi = cutoff_sequence(model, k)
    assert phi.min() >= 0 and phi.max() <= 1
    assert metric_gradient(model, phi).max() <= 1 / k + 1e-12
    assert np.count_nonzero(phi == 1) > 0


def test_cutoff_plateaus_grow():
    model = LatticeModel.interval(-40, 40, 0.1, compact=(-1, 1))
    for k in range(1, 10):
        a, b = cutoff_sequence(model, k), cutoff_sequence(model, k + 1)
        assert np.all(b[a == 1] == 1)
        assert np.count_nonzero(b == 1) > np.count_nonzero(a == 1)


def test_cutoff_ramp_must_fit():
    with pytest.raises(ValueError):
        cutoff_sequence(LatticeModel.interval(-5, 5, 0.1, compact=(-1, 1)), 10)


def test_commutator_with_constant_is_zero():
    model = LatticeModel.uniform(10)
    c = multiplication_commutator(dirac(model), np.full(10, 0.7))
    assert not c.action.blocks[0].any()


def test_commutator_hand_three_sites():
    d = dirac(LatticeModel.uniform(3, 1.0))
    c = multiplication_commutator(d, np.array([0.0, 1.0, 3.0]))
    # [D, phi]_{j, j+1} = (phi_{j+1} - phi_j) D_{j, j+1}
    expect = np.array([[0, 1, 0], [0, 0, 2], [0, 0, 0]], dtype=complex)
    assert np.array_equal(c.action.blocks[0], expect)


@pytest.mark.parametrize("k", [1, 2, 5, 10])
def test_commutator_norm_bound(k):
    model = LatticeModel.uniform(1000, 0.1, origin=-50.0)
    d = dirac(model)
    phi = cutoff_sequence(model, k)
    assert multiplication_commutator(d, phi).norm() <= d.symbol_bound * 0.1 / k + 1e-12


def test_commutator_rejects_wide_operators():
    d = dirac(LatticeModel.uniform(5))
    with pytest.raises(ValueError):
        multiplication_commutator(formal_adjoint(d) @ d, np.ones(5))


def test_locality_of_products():
    d = dirac(LatticeModel.uniform(8))
    assert (formal_adjoint(d) @ d).bandwidth <= 2


def test_model_validation():
    with pytest.raises(ValueError):
        LatticeModel(1, 1.0)
    with pytest.raises(ValueError):
        LatticeModel(4, 0.0)
    with pytest.raises(ValueError):
        LatticeModel(4, 1.0, mu=np.array([1, 1, 0, 1.0]))
    with pytest.raises(ValueError):
        LatticeModel(4, 1.0, compact_region=(2, 6))
