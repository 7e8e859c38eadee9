import json
import math

import numpy as np
import pytest

from posylasso.basis import Dataset, ExponentGrid, build_basis, build_design_matrix
from posylasso.errors import DataError, IntegrityError
from posylasso.model import (
    PosynomialModel,
    Term,
    deserialize,
    from_solution,
    load_model,
    predict,
    relative_error,
    save_model,
    serialize,
)
from posylasso.pipeline import example1_model


def test_predict_example1():
    m = example1_model()
    assert m((1.0, 1.0, 1.0)) == pytest.approx(10.0, rel=1e-15)
    # 1*1*8 + 2*4/2 + 3*1 + 4*sqrt(2)*1*2
    assert m((2.0, 1.0, 2.0)) == pytest.approx(15 + 8 * math.sqrt(2), rel=1e-14)
    out = predict(m, [[1.0, 1.0, 1.0], [2.0, 1.0, 2.0]])
    assert out.shape == (2,)
    with pytest.raises(DataError):
        m((1.0, 1.0))


def test_model_invariants():
    with pytest.raises(IntegrityError):
        PosynomialModel((Term(-1.0, (1.0,)),), 1)
    with pytest.raises(IntegrityError):
        PosynomialModel((Term(1.0, (1.0,)), Term(2.0, (1.0,))), 1)
    with pytest.raises(IntegrityError):
        PosynomialModel((Term(1.0, (1.0, 2.0)),), 1)
    m = PosynomialModel((Term(0.0, (1.0,)), Term(2.0, (3.0,))), 1)
    assert len(m) == 1 and str(m) == "2*w1^3"
    assert PosynomialModel((), 2)((1.0, 1.0)) == 0.0


def test_from_solution():
    basis = build_basis(ExponentGrid(((0, 1), (0, 2))))
    m = from_solution(basis, [0.0, 1.5, 0.0, 2.5])
    assert m.exponents.tolist() == [[0, 2], [1, 2]]
    assert m.coefficients.tolist() == [1.5, 2.5]
    assert len(from_solution(basis, [1e-13, 1.0, 0, 0], threshold=1e-12)) == 1
    with pytest.raises(IntegrityError):
        from_solution(basis, [-1e-3, 1.0, 0, 0])
    with pytest.raises(DataError):
        from_solution(basis, [1.0])


def test_serialization_round_trip(tmp_path):
    m = PosynomialModel((Term(0.1 + 0.2, (0.5, -2.0, 1.0)), Term(1 / 3, (3.2, 0.0, 1e-17))), 3)
    back = deserialize(serialize(m))
    assert back == m
    save_model(m, tmp_path / "m.json")
    assert load_model(tmp_path / "m.json") == m
    doc = json.loads(serialize(m))
    assert doc["n_w"] == 3 and len(doc["terms"]) == 2


@pytest.mark.parametrize("text", [
    "not json",
    "[]",
    '{"terms": []}',
    '{"n_w": 1.5, "terms": []}',
    '{"n_w": 1, "terms": [{"coef": -1, "exponents": [1]}]}',
    '{"n_w": 1, "terms": [{"coef": 0, "exponents": [1]}]}',
    '{"n_w": 1, "terms": [{"coef": 1, "exponents": [1, 2]}]}',
    '{"n_w": 1, "terms": [{"coef": 1, "exponents": [1]}, {"coef": 2, "exponents": [1]}]}',
    '{"n_w": 1, "terms": [{"coef": "1", "exponents": [1]}]}',
    '{"n_w": 1, "terms": [{"coef": 1}]}',
])
def test_deserialize_rejects(text):
    with pytest.raises(IntegrityError):
        deserialize(text)


def test_relative_error_forms():
    rng = np.random.default_rng(0)
    data = Dataset(rng.uniform(0.2, 3.2, (30, 3)), np.zeros(30))
    truth = example1_model()
    y = truth(data.samples)
    assert relative_error(truth, None, y, data) == 0.0
    basis = build_basis(ExponentGrid(((0, 0.5, 2), (-2, 0, 1.5, 3.2), (-1, 0, 1, 3))))
    d = build_design_matrix(basis, data)
    x = np.zeros(basis.n)
    for c, a in [(1, (0, 1.5, 3)), (2, (2, 0, -1)), (3, (0, 3.2, 0)), (4, (0.5, -2, 1))]:
        x[basis.index_of(a)] = c
    assert relative_error(x, d, y) == pytest.approx(0.0, abs=1e-14)
    assert relative_error(np.zeros(basis.n), d, y) == 1.0
    with pytest.raises(DataError):
        relative_error(x, d, np.zeros(30))
