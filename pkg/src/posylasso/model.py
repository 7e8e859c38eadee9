"""Identified posynomial models: evaluation, scoring and JSON round-trip."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .basis import DesignMatrix, MonomialBasis, _check_positive, _monomials
from .errors import DataError, IntegrityError

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Term:
    coef: float
    exponents: tuple[float, ...]


@dataclass(frozen=True)
class PosynomialModel:
    """``psi(w) = sum_i coef_i * w^exponents_i`` with positive coefficients.

    Zero coefficients are dropped on construction; negative ones are rejected.
    """

    terms: tuple[Term, ...]
    n_vars: int

    def __post_init__(self):
        if self.n_vars < 1:
            raise IntegrityError("a model needs at least one input variable")
        kept = []
        seen = set()
        for t in self.terms:
            coef = float(t.coef)
            alpha = tuple(float(a) for a in t.exponents)
            if not (math.isfinite(coef) and all(math.isfinite(a) for a in alpha)):
                raise IntegrityError("model terms must be finite")
            if coef < 0:
                raise IntegrityError(f"negative coefficient {coef!r} for exponents {alpha}")
            if len(alpha) != self.n_vars:
                raise IntegrityError(
                    f"term has {len(alpha)} exponents, model has {self.n_vars} inputs"
                )
            if alpha in seen:
                raise IntegrityError(f"duplicate exponent vector {alpha}")
            seen.add(alpha)
            if coef > 0:
                kept.append(Term(coef, alpha))
        object.__setattr__(self, "terms", tuple(kept))

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([t.coef for t in self.terms])

    @property
    def exponents(self) -> np.ndarray:
        return np.array([t.exponents for t in self.terms]).reshape(len(self.terms), self.n_vars)

    def __call__(self, w) -> np.ndarray | float:
        return predict(self, w)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for t in self.terms:
            factors = [
                f"w{j + 1}" if a == 1 else f"w{j + 1}^{a:g}"
                for j, a in enumerate(t.exponents)
                if a != 0
            ]
            parts.append("*".join([f"{t.coef:.6g}"] + factors))
        return " + ".join(parts)


def from_solution(basis: MonomialBasis, x, threshold: float = 0.0) -> PosynomialModel:
    """Keep the basis terms whose coefficient exceeds ``threshold``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (basis.n,):
        raise DataError(f"solution has {x.size} entries, basis has {basis.n}")
    if np.any(x < -threshold):
        i = int(np.argmin(x))
        raise IntegrityError(f"coefficient {i} is negative ({x[i]!r}) beyond the threshold")
    idx = np.flatnonzero(x > threshold)
    return PosynomialModel(
        tuple(Term(float(x[i]), tuple(basis.exponents[i])) for i in idx), basis.n_vars
    )


def predict(model: PosynomialModel, w):
    """Evaluate the model at one input vector or at each row of a matrix."""
    w = np.asarray(w, dtype=float)
    single = w.ndim == 1
    w2 = w.reshape(1, -1) if single else w
    if w2.shape[1] != model.n_vars:
        raise DataError(f"input has {w2.shape[1]} variables, model expects {model.n_vars}")
    _check_positive(w2)
    if not model.terms:
        out = np.zeros(w2.shape[0])
    else:
        with np.errstate(over="ignore"):
            out = _monomials(w2, model.exponents) @ model.coefficients
    return float(out[0]) if single else out


def relative_error(x_or_model, design, y, data=None) -> float:
    """``||Phi x - y|| / ||y||``.

    ``x_or_model`` is either a coefficient vector over the columns of
    ``design``, or a :class:`PosynomialModel` together with the inputs in
    ``data`` (a Dataset or sample matrix); ``design`` is ignored then.
    """
    y = np.asarray(y, dtype=float)
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0:
        raise DataError("relative error is undefined for a zero response")
    if isinstance(x_or_model, PosynomialModel):
        if data is None:
            raise DataError("model scoring needs the input samples")
        samples = getattr(data, "samples", data)
        yhat = predict(x_or_model, samples)
    else:
        phi = design.columns if isinstance(design, DesignMatrix) else np.asarray(design)
        yhat = phi @ np.asarray(x_or_model, dtype=float)
    return float(np.linalg.norm(yhat - y)) / ynorm


def to_document(model: PosynomialModel) -> dict[str, Any]:
    return {
        "format": "posynomial",
        "version": FORMAT_VERSION,
        "n_w": model.n_vars,
        "terms": [{"coef": t.coef, "exponents": list(t.exponents)} for t in model.terms],
    }


def from_document(doc: Any) -> PosynomialModel:
    if not isinstance(doc, dict):
        raise IntegrityError("model document must be a JSON object")
    try:
        n_vars = doc["n_w"]
        raw = doc["terms"]
    except KeyError as exc:
        raise IntegrityError(f"model document is missing {exc.args[0]!r}") from None
    if not isinstance(n_vars, int) or isinstance(n_vars, bool) or not isinstance(raw, list):
        raise IntegrityError("'n_w' must be an integer and 'terms' a list")
    terms = []
    for k, item in enumerate(raw):
        try:
            coef = item["coef"]
            alpha = item["exponents"]
        except (TypeError, KeyError):
            raise IntegrityError(f"term {k} needs 'coef' and 'exponents'") from None
        if not isinstance(coef, (int, float)) or isinstance(coef, bool) or not isinstance(alpha, Sequence):
            raise IntegrityError(f"term {k} is malformed")
        if coef == 0:
            raise IntegrityError(f"term {k} has a zero coefficient")
        terms.append(Term(float(coef), tuple(alpha)))
    try:
        return PosynomialModel(tuple(terms), n_vars)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, IntegrityError):
            raise
        raise IntegrityError(str(exc)) from exc


def serialize(model: PosynomialModel) -> str:
    # json writes floats with repr, the shortest round-trip form
    return json.dumps(to_document(model), indent=2)


def deserialize(text: str) -> PosynomialModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"model document is not valid JSON: {exc}") from exc
    return from_document(doc)


def save_model(model: PosynomialModel, path: str | Path) -> None:
    Path(path).write_text(serialize(model) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> PosynomialModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read model file {path}: {exc}") from exc
    return deserialize(text)
