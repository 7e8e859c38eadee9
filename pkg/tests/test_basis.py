import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from posylasso.basis import (
    Dataset,
    ExponentGrid,
    build_basis,
    build_design_matrix,
    eval_monomial,
    expand_range,
    load_grid,
)
from posylasso.errors import ConfigError, DataError, DomainError, NumericalError
from posylasso.pipeline import EXAMPLE1_GRID


def test_expand_range_inclusive_and_rounded():
    q = expand_range(-2, 4, 0.1)
    assert len(q) == 61
    assert q[0] == -2.0 and q[-1] == 4.0
    # 0.1 steps land on exact decimal values, not accumulated error
    assert 1.5 in q and 3.2 in q and 0.0 in q
    assert str(q[12]) == "-0.8"


def test_expand_range_rejects_bad_steps():
    with pytest.raises(ConfigError):
        expand_range(0, 1, 0)
    with pytest.raises(ConfigError):
        expand_range(0, 1, 0.3)
    with pytest.raises(ConfigError):
        expand_range(1, 0, 0.5)


def test_example1_grid_size():
    assert [len(q) for q in EXAMPLE1_GRID.grids] == [9, 61, 6]
    assert EXAMPLE1_GRID.size == 3294
    assert build_basis(EXAMPLE1_GRID).n == 3294


def test_grid_625():
    g = ExponentGrid.from_spec([[0, 1, 2, 3, 4]] * 4)
    assert g.size == 625


def test_basis_order_last_variable_fastest():
    b = build_basis(ExponentGrid(((0, 1), (0, 1, 2))))
    assert b.exponents.tolist() == [[0, 0], [0, 1], [0, 2], [1, 0], [1, 1], [1, 2]]
    assert b.index_of((1, 2)) == 5
    with pytest.raises(KeyError):
        b.index_of((2, 2))


@pytest.mark.parametrize("bad", [[[]], [[1, 0]], [[0, 0]], [[0, float("nan")]], []])
def test_grid_validation(bad):
    with pytest.raises(ConfigError):
        ExponentGrid.from_spec(bad)


def test_grid_spec_forms(tmp_path):
    spec = [{"min": 0, "max": 1, "step": 0.5}, {"range": [-1, 1, 1]}, {"values": [2, 3]}, [7]]
    g = ExponentGrid.from_spec(spec)
    assert g.grids == ((0.0, 0.5, 1.0), (-1.0, 0.0, 1.0), (2.0, 3.0), (7.0,))
    p = tmp_path / "grid.yaml"
    p.write_text("grids:\n  - {min: 0, max: 4, step: 0.5}\n  - {min: -2, max: 4, step: 0.1}\n"
                 "  - [-1, 0, 1, 2, 3, 4]\n")
    assert load_grid(p) == EXAMPLE1_GRID
    p.write_text("nogrids: 1\n")
    with pytest.raises(ConfigError):
        load_grid(p)
    with pytest.raises(ConfigError):
        load_grid(tmp_path / "missing.yaml")


def test_eval_monomial_examples():
    assert eval_monomial((0.5, -2, 1), (4, 2, 3)) == pytest.approx(1.5, rel=1e-15)
    assert eval_monomial((0, 0, 0), (5, 6, 7)) == 1.0
    with pytest.raises(DomainError):
        eval_monomial((1, 1), (1, 0))
    with pytest.raises(DomainError):
        eval_monomial((1,), (-2,))
    with pytest.raises(DataError):
        eval_monomial((1, 1), (1,))


def test_eval_monomial_log_space_and_overflow():
    # |alpha log w| > 500 takes the log path; the product stays representable
    v = eval_monomial((400, -400), (10.0, 10.0))
    assert v == pytest.approx(1.0, rel=1e-9)
    with pytest.raises(NumericalError):
        eval_monomial((400,), (10.0,))


@settings(max_examples=200, deadline=None)
@given(
    a=st.lists(st.floats(-4, 4), min_size=3, max_size=3),
    b=st.lists(st.floats(-4, 4), min_size=3, max_size=3),
    w=st.lists(st.floats(0.2, 3.2), min_size=3, max_size=3),
)
def test_monomial_product_property(a, b, w):
    lhs = eval_monomial(np.add(a, b), w)
    rhs = eval_monomial(a, w) * eval_monomial(b, w)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_design_matrix_matches_per_column_evaluation():
    rng = np.random.default_rng(0)
    data = Dataset(rng.uniform(0.2, 3.2, (17, 3)), rng.standard_normal(17))
    basis = build_basis(ExponentGrid.from_spec([[0, 0.5, 1], [-2, 0, 3.2], [-1, 2]]))
    d = build_design_matrix(basis, data, chunk=4)
    assert d.shape == (17, 18)
    assert np.array_equal(d.columns, build_design_matrix(basis, data).columns)
    for i in range(basis.n):
        for k in range(data.m):
            expected = math.prod(w**a for w, a in zip(data.samples[k], basis.exponents[i]))
            assert d.columns[k, i] == pytest.approx(expected, rel=1e-13)
    assert np.allclose(d.column_sq_norms, (d.columns**2).sum(axis=0), rtol=1e-14)
    assert not d.columns.flags.writeable


def test_design_matrix_reports_overflow_location():
    data = Dataset([[1.0], [1e10]], [1.0, 2.0])
    basis = build_basis(ExponentGrid(((1.0, 40.0),)))
    with pytest.raises(NumericalError, match="sample 2, column 1"):
        build_design_matrix(basis, data)


def test_dataset_validation():
    with pytest.raises(DomainError, match="sample 2, variable w_1"):
        Dataset([[1.0, 1.0], [0.0, 1.0]], [1, 2])
    with pytest.raises(DataError):
        Dataset([[1.0]], [1, 2])
    with pytest.raises(DataError):
        Dataset([[1.0]], [float("inf")])
    d = Dataset([1.0, 2.0, 3.0], [1, 2, 3])
    assert d.n_vars == 1 and d.subset([0, 2]).m == 2
