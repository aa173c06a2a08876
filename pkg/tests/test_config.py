import numpy as np
import pytest

from vnspectral.algebra import FiniteGroup, TracedAlgebra
from vnspectral.config import (
    DEFAULT_PRESET,
    PRESETS,
    ConfigError,
    build_algebra,
    build_cover,
    build_field,
    build_model,
    build_potential,
    evaluate_field,
    load_config,
    parse_group,
)
from vnspectral.covers import Z

X = np.linspace(-2, 2, 9)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_load(name):
    cfg = load_config(name)
    assert cfg.name == name
    assert cfg.seed >= 0


def test_default_presets_exist():
    assert set(DEFAULT_PRESET.values()) <= set(PRESETS)


def test_overrides_and_seed():
    cfg = load_config("tanh_scalar", ["model.h=0.1", "tolerances.epsilon = 0.25"], seed=7)
    assert cfg.get_float("model", "h") == 0.1
    assert cfg.get_float("tolerances", "epsilon") == 0.25
    assert cfg.seed == 7
    assert build_model(cfg).h == pytest.approx(0.1)


@pytest.mark.parametrize("override, key", [
    ("model.spacing=0.1", "model.spacing"),
    ("nosuch.h=1", "nosuch"),
    ("model.h", "model.h"),
])
def test_bad_override_names_key(override, key):
    with pytest.raises(ConfigError) as info:
        load_config("tanh_scalar", [override])
    assert info.value.key == key
    assert f"'{key}'" in str(info.value)


def test_unknown_key_in_file(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[model]\na = -1\nb = 1\nspacing = 0.1\n")
    with pytest.raises(ConfigError, match="model.spacing"):
        load_config(path)


def test_file_with_comments_and_relative_table(tmp_path):
    (tmp_path / "v.txt").write_text("\n".join(str(v) for v in np.arange(5.0)))
    path = tmp_path / "run.ini"
    path.write_text("[model]\na = 0  # left end\nb = 1 ; right end\nh = 1/4\n"
                    "[potential]\nv = table(\"v.txt\")\n")
    cfg = load_config(path)
    model = build_model(cfg)
    assert model.N == 5
    pot = build_potential(cfg, model, TracedAlgebra.scalars(), 1)
    assert np.allclose(pot.field.min_eigenvalues(), np.arange(5.0))


def test_missing_file_or_preset():
    with pytest.raises(ConfigError, match="neither a file nor a preset"):
        load_config("no_such_preset")


def test_negative_seed_rejected():
    with pytest.raises(ConfigError, match="experiment.seed"):
        load_config("tanh_scalar", seed=-1)


def test_type_errors_name_key():
    cfg = load_config("tanh_scalar", ["model.h=fast"])
    with pytest.raises(ConfigError, match="model.h"):
        build_model(cfg)


# -- field expressions ----------------------------------------------------------

@pytest.mark.parametrize("expr, expect", [
    ("constant(2)", 2 + 0 * X),
    ("tanh()", np.tanh(X)),
    ("3*tanh(width=2)", 3 * np.tanh(X / 2)),
    ("tanh-wall()", 2 * np.tanh(X) ** 2 - 1),
    ("tanh_wall(height=1, offset=0)", np.tanh(X) ** 2),
    ("harmonic(k=2)", 2 * X ** 2),
    ("gaussian-well(depth=3)", -3 * np.exp(-X ** 2 / 2)),
    ("inverse-square()", 1 / (1 + X ** 2)),
    ("x**2 + exp(-x) - cos(pi*x)", X ** 2 + np.exp(-X) - np.cos(np.pi * X)),
    ("-x", -X),
])
def test_field_expressions(expr, expect):
    assert np.allclose(evaluate_field(expr, X, "potential.v"), expect, atol=1e-14)


def test_matrix_diag_expression():
    out = evaluate_field("matrix-diag(tanh(), -tanh())", X, "endomorphism.f")
    assert np.allclose(out.entries[0], np.tanh(X)) and np.allclose(out.entries[1], -np.tanh(X))


@pytest.mark.parametrize("expr", ["y + 1", "tanh(", "foo(1)", "x[0]", "__import__('os')",
                                  "exp(x, x)", "1 + matrix-diag(x)", "tanh(scale=x)"])
def test_bad_expressions_name_key(expr):
    with pytest.raises(ConfigError, match="potential.v"):
        evaluate_field(expr, X, "potential.v")


def test_per_block_fields():
    cfg = load_config("half_index")
    alg, _ = build_algebra(cfg)
    model = build_model(cfg)
    fld = build_field(cfg, "endomorphism", "f", model, alg, 1)
    assert len(fld.values) == len(alg.dims)
    bad = load_config("half_index", ["endomorphism.f=tanh()"])
    with pytest.raises(ConfigError, match="endomorphism.f"):
        build_field(bad, "endomorphism", "f", model, alg, 1)


# -- algebras and groups --------------------------------------------------------

@pytest.mark.parametrize("text, order", [("Z/3", 3), ("D4", 8), ("S3", 6)])
def test_parse_named_groups(text, order):
    g = parse_group(text)
    assert isinstance(g, FiniteGroup) and g.order == order


def test_parse_group_table_and_z(tmp_path):
    assert parse_group("Z") == Z
    (tmp_path / "z2.txt").write_text("2\n0 1\n1 0\n")
    assert parse_group("z2.txt", base_dir=tmp_path).order == 2
    with pytest.raises(ConfigError, match="algebra.group"):
        parse_group("Q8")


def test_algebra_blocks():
    cfg = load_config("tanh_scalar", ["algebra.blocks=1:1/2, 1:1/2"])
    alg, ga = build_algebra(cfg)
    assert alg.blocks == ((1, 0.5), (1, 0.5)) and ga is None
    bad = load_config("tanh_scalar", ["algebra.blocks=2:1/4"])
    with pytest.raises(ConfigError, match="algebra.blocks"):
        build_algebra(bad)


def test_group_and_blocks_conflict():
    cfg = load_config("tanh_scalar", ["algebra.blocks=1:1", "algebra.group=Z/2"])
    with pytest.raises(ConfigError, match="algebra.group"):
        build_algebra(cfg)


def test_floor_certificate_failure_names_key():
    cfg = load_config("tanh_wall", ["potential.floor=5"])
    alg, _ = build_algebra(cfg)
    with pytest.raises(ConfigError, match="potential.v"):
        build_potential(cfg, build_model(cfg, half_length=10), alg, 1)


def test_cover_builders():
    spec, op, model = build_cover(load_config("z2_cover"))
    assert spec.deck.order == 2 and op.n_sites == spec.n_sites and model is None
    spec, op, model = build_cover(load_config("z_bloch"))
    assert spec.deck == Z
    with pytest.raises(ConfigError, match="cover.closed"):
        build_cover(load_config("z2_cover", ["cover.closed=false"]))
