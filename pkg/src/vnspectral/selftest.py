"""Fast invariant suite behind ``vnspectral selftest``."""

from __future__ import annotations

import numpy as np

from . import covers
from .algebra import (
    TracedAlgebra,
    compatibility_check,
    cyclic_group,
    dihedral_group,
    group_algebra,
    trace,
)
from .callias import (
    Potential,
    SiteField,
    callias_block,
    quadratic_form_residual,
    square_decomposition_residual,
    tau_index,
)
from .experiments import ExperimentResult, _report_row
from .hilbert_module import (
    AMatrix,
    bounded_transform,
    counting_curve,
    counting_function,
    from_text,
    off_diagonal_double,
    spectral_projection,
    to_text,
    variational_counting_oracle,
)
from .lattice import LatticeModel, Section, cutoff_sequence, dirac, metric_gradient, multiplication_commutator

__all__ = ["random_algebra", "run_selftest"]


def random_algebra(rng: np.random.Generator, max_blocks: int = 3, max_n: int = 3) -> TracedAlgebra:
    """Random blocks ``(n_i, w_i)`` normalized so that ``sum w_i n_i = 1``."""
    m = int(rng.integers(1, max_blocks + 1))
    dims = rng.integers(1, max_n + 1, m)
    raw = rng.uniform(0.2, 1.0, m)
    weights = raw / float(np.dot(raw, dims))
    return TracedAlgebra(tuple((int(n), float(w)) for n, w in zip(dims, weights)))


def _counting_checks(res: ExperimentResult, rng: np.random.Generator, count: int):
    worst_proj = worst_oracle = worst_shift = 0.0
    for _ in range(count):
        alg = random_algebra(rng)
        t = AMatrix.random(alg, int(rng.integers(1, 5)), rng, hermitian=True)
        for lam in rng.uniform(-3, 3, 2):
            n = counting_function(t, lam)
            worst_proj = max(worst_proj, abs(n - spectral_projection(t, lam).tau_dim))
            if t.total_dim <= 64 and max(b.shape[0] for b in t.blocks) <= 16:
                worst_oracle = max(worst_oracle, abs(n - variational_counting_oracle(t, lam)))
            for shift in (-3.0, 0.7, 10.0):
                worst_shift = max(worst_shift, abs(counting_function(t.shift(shift), lam + shift) - n))
    res.check("blockwise counting rule = tau-trace of spectral projection", worst_proj <= 1e-10, f"{worst_proj:.3g}")
    res.check("counting function = variational oracle", worst_oracle <= 1e-10, f"{worst_oracle:.3g}")
    res.check("shift identity N(lam + l; T + l) = N(lam; T)", worst_shift == 0.0, f"{worst_shift:.3g}")


def _phi_checks(res: ExperimentResult, rng: np.random.Generator, count: int):
    worst = 0.0
    lam = np.array([0.1, 1.0, 10.0])
    for _ in range(count):
        t = AMatrix.random(random_algebra(rng), int(rng.integers(1, 4)), rng)
        big = off_diagonal_double(t)
        phi = bounded_transform(big)
        lhs = counting_curve(big @ big, lam).values
        rhs = counting_curve(phi @ phi, lam / (1 + lam)).values
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    res.check("Phi identity N(lam; T^2) = N(lam/(1+lam); Phi(T)^2)", worst <= 1e-10, f"{worst:.3g}")


def run_selftest(seed: int = 0, quick: bool = False) -> ExperimentResult:
    res = ExperimentResult("selftest")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    _counting_checks(res, rng, 20 if quick else 60)
    _phi_checks(res, rng, 10 if quick else 30)

    # algebra layer
    ga = group_algebra(dihedral_group(3))
    worst = 0.0
    for g in range(6):
        e = np.zeros(6)
        e[g] = 1.0
        worst = max(worst, abs(trace(ga.embed(e)) - ga.canonical_trace(e)))
    res.check("group algebra trace = delta_e coefficient", worst <= 1e-12, f"{worst:.3g}")
    alg = random_algebra(rng)
    a = alg.random_element(rng)
    x = [rng.standard_normal((2 * n, n)) + 1j * rng.standard_normal((2 * n, n)) for n in alg.dims]
    y = [rng.standard_normal((2 * n, n)) + 1j * rng.standard_normal((2 * n, n)) for n in alg.dims]
    res.check("module action compatible with the inner product", compatibility_check(a, x, y))
    t = AMatrix.random(alg, 3, rng)
    back = from_text(to_text(t))
    res.check("AMatrix text round trip is bit exact",
              back.algebra == t.algebra and all(np.array_equal(p, q) for p, q in zip(back.blocks, t.blocks)))

    # lattice layer
    big = LatticeModel.uniform(1000, 0.1, origin=-50.0)
    d = dirac(big)
    bound = float(np.max(big.edge_coefficients[:-1] * big.edge_lengths))
    worst = -np.inf
    for k in (1, 2, 5, 10):
        phi = cutoff_sequence(big, k)
        norm = multiplication_commutator(d, phi).norm()
        worst = max(worst, norm - bound / k)
        if metric_gradient(big, phi).max() > 1.0 / k + 1e-12:
            worst = np.inf
    res.check("cutoff commutator bound ||[D, phi_k]|| <= c/k", worst <= 1e-12, f"max excess {worst:.3g}")

    # Schrodinger and Callias layer
    model = LatticeModel.interval(-20, 20, 0.05, compact=(-6, 6))
    d = dirac(model)
    f = SiteField.scalar(model, np.tanh)
    rep = tau_index(callias_block(d, f))
    res.index_rows.append(_report_row(rep, 0, "", ""))
    res.check("scalar tanh Callias index = 1",
              abs(rep.ind_tau - 1) <= 1e-8 and abs(rep.mckean_singer - 1) <= 1e-6 and (rep.gap_plus or 0) >= 0.5,
              f"ind {rep.ind_tau}, supertrace {rep.mckean_singer!r}, gap {rep.gap_plus}")
    halves = TracedAlgebra(((1, 0.5), (1, 0.5)))
    fh = SiteField.blockwise(model, halves, [np.tanh, np.ones_like])
    rep_h = tau_index(callias_block(dirac(model, halves), fh))
    res.index_rows.append(_report_row(rep_h, 1, "", ""))
    res.check("fractional tau-index = 1/2", abs(rep_h.ind_tau - 0.5) <= 1e-8, f"ind {rep_h.ind_tau}")
    sq = max(square_decomposition_residual(d, f), square_decomposition_residual(dirac(model, halves), fh))
    res.check("square decomposition residual", sq <= 1e-10, f"{sq:.3g}")
    small = LatticeModel.interval(-5, 5, 0.1)
    pot = Potential(SiteField.scalar(small, lambda x: x ** 2))
    qf = max(quadratic_form_residual(dirac(small), pot, Section.random(small, TracedAlgebra.scalars(), 1, rng))
             for _ in range(4))
    res.check("quadratic form residual", qf <= 1e-10, f"{qf:.3g}")

    # covers
    for order in (2, 3):
        spec = covers.CoverSpec(8, cyclic_group(order), (0,) * 7 + (1,))
        op = covers.cycle_laplacian(8, 1.0 + 0.3 * np.cos(np.arange(8)))
        cmp = covers.compare_counting(spec, op, np.linspace(-0.1, 5.0, 50))
        res.check(f"Z/{order} cover counting correspondence", cmp.max_deviation <= 1e-10, f"{cmp.max_deviation:.3g}")
        res.curves += [(l, n / order, "", f"Z/{order}") for l, n in zip(cmp.lambdas, cmp.bundle_scaled)]
    fam = covers.bloch_decompose(covers.CoverSpec(1, covers.Z, (1,)), covers.cycle_laplacian(1))
    errs = [abs(fam.counting(1.0, m) - 1 / 3) for m in (64, 256)]
    res.check("Bloch counting N(1) -> 1/3 within 2/M", errs[0] <= 2 / 64 and errs[1] <= 2 / 256, f"{errs}")
    res.summary = {"seed": seed, "checks": len(res.verdicts)}
    return res
