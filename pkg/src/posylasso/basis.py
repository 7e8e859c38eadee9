"""Monomial dictionaries: exponent grids, bases and design matrices.

A basis is the Cartesian product of per-variable exponent sets. Columns are
ordered lexicographically over the grids with the last variable varying
fastest, so a column index always maps back to the same exponent vector.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from .errors import ConfigError, DataError, DomainError, NumericalError

# above this |alpha_j * log w_j| the power is taken through exp(sum alpha*log w)
LOG_SWITCH = 500.0
# expanded (min, max, step) grids are rounded to this many decimals
GRID_DECIMALS = 12
STEP_SLACK = 1e-9


def expand_range(lo: float, hi: float, step: float) -> tuple[float, ...]:
    """Expand ``lo:step:hi`` (inclusive) into an exponent tuple.

    ``step`` has to divide ``hi - lo`` up to a slack of 1e-9 steps.
    """
    if not (step > 0) or not math.isfinite(step):
        raise ConfigError(f"grid step must be positive and finite, got {step!r}")
    if hi < lo:
        raise ConfigError(f"grid max {hi!r} is below min {lo!r}")
    count = (hi - lo) / step
    k = round(count)
    if abs(count - k) > STEP_SLACK:
        raise ConfigError(f"step {step!r} does not divide the interval [{lo!r}, {hi!r}]")
    values = np.round(lo + step * np.arange(k + 1), GRID_DECIMALS)
    # -0.0 would print oddly and compare equal anyway
    return tuple(float(v) + 0.0 for v in values)


@dataclass(frozen=True)
class ExponentGrid:
    """Per-variable candidate exponents ``Q_1, ..., Q_nw``."""

    grids: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        grids = tuple(tuple(float(a) for a in q) for q in self.grids)
        if len(grids) < 1:
            raise ConfigError("an exponent grid needs at least one variable")
        for j, q in enumerate(grids):
            if len(q) == 0:
                raise ConfigError(f"exponent set for variable {j + 1} is empty")
            if not all(math.isfinite(a) for a in q):
                raise ConfigError(f"exponent set for variable {j + 1} has non-finite values")
            if any(b <= a for a, b in zip(q, q[1:])):
                raise ConfigError(
                    f"exponent set for variable {j + 1} must be strictly increasing "
                    "and duplicate-free"
                )
        object.__setattr__(self, "grids", grids)

    @property
    def n_vars(self) -> int:
        return len(self.grids)

    @property
    def size(self) -> int:
        return math.prod(len(q) for q in self.grids)

    @classmethod
    def from_spec(cls, entries: Sequence[Any]) -> "ExponentGrid":
        """Build from a list whose items are exponent lists or ranges.

        A range is a mapping with ``min``, ``max`` and ``step`` keys, or a
        3-item ``[min, max, step]`` under the key ``range``.
        """
        if not isinstance(entries, (list, tuple)):
            raise ConfigError("grid specification must be a list of per-variable entries")
        grids = []
        for j, entry in enumerate(entries):
            if isinstance(entry, dict):
                if "range" in entry:
                    try:
                        lo, hi, step = entry["range"]
                    except (TypeError, ValueError):
                        raise ConfigError(f"variable {j + 1}: range must be [min, max, step]")
                elif {"min", "max", "step"} <= entry.keys():
                    lo, hi, step = entry["min"], entry["max"], entry["step"]
                elif "values" in entry:
                    grids.append(_as_floats(entry["values"], j))
                    continue
                else:
                    raise ConfigError(
                        f"variable {j + 1}: expected 'values', 'range' or min/max/step keys"
                    )
                try:
                    grids.append(expand_range(float(lo), float(hi), float(step)))
                except (TypeError, ValueError) as exc:
                    if isinstance(exc, ConfigError):
                        raise
                    raise ConfigError(f"variable {j + 1}: non-numeric range bound") from exc
            else:
                grids.append(_as_floats(entry, j))
        return cls(tuple(grids))

    def to_spec(self) -> dict:
        return {"grids": [list(q) for q in self.grids]}


def _as_floats(values: Any, j: int) -> tuple[float, ...]:
    if not isinstance(values, (list, tuple)):
        raise ConfigError(f"variable {j + 1}: exponent list expected, got {values!r}")
    try:
        return tuple(float(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"variable {j + 1}: non-numeric exponent") from exc


def load_grid(path: str | Path) -> ExponentGrid:
    """Read a YAML (or JSON) grid file with a top-level ``grids`` list."""
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read grid file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"grid file {path} is not valid YAML/JSON: {exc}") from exc
    if isinstance(doc, dict):
        if "grids" not in doc:
            raise ConfigError(f"grid file {path} has no 'grids' key")
        doc = doc["grids"]
    return ExponentGrid.from_spec(doc)


@dataclass(frozen=True)
class MonomialBasis:
    """Exponent vectors, one row per monomial (``n x n_w``)."""

    exponents: np.ndarray

    def __post_init__(self):
        a = np.array(self.exponents, dtype=float, ndmin=2)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ConfigError("basis exponents must be a non-empty 2-D array")
        if len({row.tobytes() for row in a}) != a.shape[0]:
            raise ConfigError("basis exponent vectors must be pairwise distinct")
        a.setflags(write=False)
        object.__setattr__(self, "exponents", a)

    @property
    def n(self) -> int:
        return self.exponents.shape[0]

    @property
    def n_vars(self) -> int:
        return self.exponents.shape[1]

    def index_of(self, alpha: Sequence[float]) -> int:
        """Column index of an exponent vector (exact match)."""
        hits = np.flatnonzero(np.all(self.exponents == np.asarray(alpha, dtype=float), axis=1))
        if hits.size == 0:
            raise KeyError(tuple(alpha))
        return int(hits[0])


def build_basis(grid: ExponentGrid) -> MonomialBasis:
    """All exponent vectors of the grid product, last variable fastest."""
    return MonomialBasis(np.array(list(itertools.product(*grid.grids)), dtype=float))


@dataclass(frozen=True)
class Dataset:
    """Positive inputs ``samples`` (``m x n_w``) with scalar ``responses``."""

    samples: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        w = np.array(self.samples, dtype=float)
        if w.ndim == 1:
            w = w[:, None]
        y = np.array(self.responses, dtype=float).reshape(-1)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise DataError("samples must be a non-empty m x n_w array")
        if y.shape[0] != w.shape[0]:
            raise DataError(f"{w.shape[0]} samples but {y.shape[0]} responses")
        if not np.all(np.isfinite(w)) or not np.all(np.isfinite(y)):
            raise DataError("samples and responses must be finite")
        bad = np.argwhere(w <= 0)
        if bad.size:
            k, j = bad[0]
            raise DomainError(f"sample {k + 1}, variable w_{j + 1} = {w[k, j]!r} is not positive")
        w.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "samples", w)
        object.__setattr__(self, "responses", y)

    @property
    def m(self) -> int:
        return self.samples.shape[0]

    @property
    def n_vars(self) -> int:
        return self.samples.shape[1]

    def subset(self, rows) -> "Dataset":
        return Dataset(self.samples[rows], self.responses[rows])


def _check_positive(w: np.ndarray) -> None:
    if not np.all(np.isfinite(w)):
        raise DomainError("monomial inputs must be finite")
    if np.any(w <= 0):
        raise DomainError("monomials are only defined for strictly positive inputs")


def _monomials(w: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """Evaluate ``w[k]^alphas[i]`` for all k, i; shape ``(m, n)``.

    Entries whose largest ``|alpha_j log w_j|`` exceeds LOG_SWITCH are computed
    in log space. Everything else is a plain product of powers.
    """
    logw = np.log(w)
    # inf * 0 in the plain product is replaced below
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.prod(w[:, None, :] ** alphas[None, :, :], axis=2)
    big = np.max(np.abs(alphas[None, :, :] * logw[:, None, :]), axis=2) > LOG_SWITCH
    if big.any():
        k, i = np.nonzero(big)
        out[k, i] = np.exp(np.einsum("kj,kj->k", logw[k], alphas[i]))
    return out


def eval_monomial(alpha: Sequence[float], w: Sequence[float]) -> float:
    """Return ``prod_j w_j ** alpha_j`` for a positive input vector."""
    a = np.asarray(alpha, dtype=float).reshape(1, -1)
    x = np.asarray(w, dtype=float).reshape(1, -1)
    if a.shape[1] != x.shape[1]:
        raise DataError(f"exponent vector has {a.shape[1]} entries, input has {x.shape[1]}")
    _check_positive(x)
    with np.errstate(over="ignore"):
        v = float(_monomials(x, a)[0, 0])
    if not math.isfinite(v):
        raise NumericalError(f"monomial w^{tuple(a[0])} overflows at w={tuple(x[0])}")
    return v


@dataclass(frozen=True)
class DesignMatrix:
    """Monomial evaluations ``Phi[k, i] = w(k)^alpha_i`` and squared column norms."""

    columns: np.ndarray
    column_sq_norms: np.ndarray = field(default=None)

    def __post_init__(self):
        phi = np.asfortranarray(np.array(self.columns, dtype=float, ndmin=2))
        if phi.ndim != 2:
            raise DataError("design matrix must be 2-D")
        norms = np.einsum("ki,ki->i", phi, phi)
        phi.setflags(write=False)
        norms.setflags(write=False)
        object.__setattr__(self, "columns", phi)
        object.__setattr__(self, "column_sq_norms", norms)

    @property
    def shape(self) -> tuple[int, int]:
        return self.columns.shape

    def take(self, cols) -> "DesignMatrix":
        return DesignMatrix(self.columns[:, cols])


def build_design_matrix(
    basis: MonomialBasis, data: Dataset, chunk: int = 512
) -> DesignMatrix:
    """Evaluate every basis monomial on every sample.

    Work is split into column blocks of ``chunk`` to bound the temporary
    ``m x chunk x n_w`` array; the result does not depend on ``chunk``.
    """
    if data.n_vars != basis.n_vars:
        raise DataError(f"data has {data.n_vars} input variables, basis expects {basis.n_vars}")
    w = data.samples
    _check_positive(w)
    phi = np.empty((data.m, basis.n), order="F")
    with np.errstate(over="ignore"):
        for start in range(0, basis.n, chunk):
            stop = min(start + chunk, basis.n)
            phi[:, start:stop] = _monomials(w, basis.exponents[start:stop])
    bad = np.argwhere(~(np.isfinite(phi) & (phi > 0)))
    if bad.size:
        k, i = bad[0]
        raise NumericalError(
            f"monomial value {phi[k, i]!r} (overflow or underflow) at sample {k + 1}, column {i} "
            f"(exponents {tuple(basis.exponents[i])})"
        )
    return DesignMatrix(phi)
