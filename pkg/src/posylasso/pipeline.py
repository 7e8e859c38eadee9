"""Batch workflows: data I/O, weighting schemes, gamma sweeps, LOO validation
and the synthetic three-variable benchmark."""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .basis import (
    Dataset,
    DesignMatrix,
    ExponentGrid,
    MonomialBasis,
    build_basis,
    build_design_matrix,
)
from .errors import ConfigError, DataError, PosyError
from .model import PosynomialModel, Term, from_solution, predict
from .solver import ProblemData, Solution, SolverConfig, solve

log = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# synthetic benchmark

EXAMPLE1_TERMS = (
    (1.0, (0.0, 1.5, 3.0)),
    (2.0, (2.0, 0.0, -1.0)),
    (3.0, (0.0, 3.2, 0.0)),
    (4.0, (0.5, -2.0, 1.0)),
)
EXAMPLE1_GRID = ExponentGrid.from_spec([
    {"min": 0, "max": 4, "step": 0.5},
    {"min": -2, "max": 4, "step": 0.1},
    {"min": -1, "max": 4, "step": 1},
])
EXAMPLE1_BOX = (0.2, 3.2)


def example1_model() -> PosynomialModel:
    return PosynomialModel(tuple(Term(c, a) for c, a in EXAMPLE1_TERMS), 3)


def generate_example1(seed: Optional[int], m: int = 600, noise_ratio: float = 0.01) -> Dataset:
    """Sample the three-variable benchmark posynomial on ``[0.2, 3.2]^3``.

    Noise is Gaussian with standard deviation ``noise_ratio`` times the sample
    standard deviation of the noiseless outputs. Inputs are drawn before the
    noise, so the inputs for a given seed do not depend on ``noise_ratio``.
    """
    if m < 1:
        raise ConfigError("m must be at least 1")
    if not (noise_ratio >= 0):
        raise ConfigError("noise_ratio must be nonnegative")
    rng = np.random.default_rng(seed)
    lo, hi = EXAMPLE1_BOX
    w = rng.uniform(lo, hi, size=(m, 3))
    clean = predict(example1_model(), w)
    e = rng.standard_normal(m)
    scale = noise_ratio * float(np.std(clean)) if m > 1 else 0.0
    return Dataset(w, clean + scale * e)


# ---------------------------------------------------------------------------
# CSV data files

def ingest(path: str | Path) -> Dataset:
    """Read a ``w_1,...,w_nw,y`` CSV file."""
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open data file {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        n_vars = len(header) - 1
        expected = [f"w_{j + 1}" for j in range(n_vars)] + ["y"]
        if n_vars < 1 or header != expected:
            raise DataError(f"{path}: header must be {','.join(expected) if n_vars >= 1 else 'w_1,...,y'}, "
                            f"got {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric value in {row}") from None
            if not all(math.isfinite(v) for v in vals):
                raise DataError(f"{path}:{lineno}: non-finite value")
            bad = [j for j in range(n_vars) if vals[j] <= 0]
            if bad:
                raise DataError(f"{path}:{lineno}: w_{bad[0] + 1} = {vals[bad[0]]!r} must be positive")
            rows.append(vals)
    if not rows:
        raise DataError(f"{path} has no data rows")
    arr = np.array(rows)
    return Dataset(arr[:, :-1], arr[:, -1])


def write_dataset(data: Dataset, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"w_{j + 1}" for j in range(data.n_vars)] + ["y"])
        for w, y in zip(data.samples, data.responses):
            writer.writerow([repr(float(v)) for v in w] + [repr(float(y))])


# ---------------------------------------------------------------------------
# weighting

WEIGHT_KINDS = ("uniform", "colnorm")
SIGMA_RULES = ("fraction_of_gamma", "fraction_of_min_lambda", "explicit")


@dataclass(frozen=True)
class WeightScheme:
    """How ``lambda`` and ``sigma`` follow from a single scale ``gamma``.

    ``uniform`` sets ``lambda_i = gamma``; ``colnorm`` sets
    ``lambda_i = gamma * ||phi_i||^2``. ``sigma_rule=None`` picks the rule
    that usually goes with the kind (gamma/10 for uniform, min(lambda)/10 for
    colnorm).
    """

    kind: str = "colnorm"
    gamma: float = 1e-4
    sigma_rule: Optional[str] = None
    sigma: Optional[float] = None

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ConfigError(f"unknown weight scheme {self.kind!r}")
        if not (self.gamma > 0) or not math.isfinite(self.gamma):
            raise ConfigError("gamma must be positive and finite")
        rule = self.sigma_rule
        if rule is None:
            rule = "explicit" if self.sigma is not None else (
                "fraction_of_gamma" if self.kind == "uniform" else "fraction_of_min_lambda")
            object.__setattr__(self, "sigma_rule", rule)
        if rule not in SIGMA_RULES:
            raise ConfigError(f"unknown sigma rule {rule!r}")
        if rule == "explicit" and (self.sigma is None or not (self.sigma >= 0)):
            raise ConfigError("explicit sigma must be a nonnegative number")

    def with_gamma(self, gamma: float) -> "WeightScheme":
        return WeightScheme(self.kind, gamma, self.sigma_rule, self.sigma)


def make_weights(scheme: WeightScheme, design: DesignMatrix) -> tuple[np.ndarray, float]:
    if scheme.kind == "uniform":
        lam = np.full(design.shape[1], scheme.gamma)
    else:
        lam = scheme.gamma * design.column_sq_norms
    if scheme.sigma_rule == "fraction_of_gamma":
        sigma = scheme.gamma / 10
    elif scheme.sigma_rule == "fraction_of_min_lambda":
        sigma = float(lam.min()) / 10
    else:
        sigma = float(scheme.sigma)
    return lam, sigma


def make_problem(design: DesignMatrix, y, scheme: WeightScheme, nonnegative: bool = True) -> ProblemData:
    lam, sigma = make_weights(scheme, design)
    return ProblemData(design, y, lam, sigma, nonnegative)


# ---------------------------------------------------------------------------
# fitting

@dataclass
class FitResult:
    model: PosynomialModel
    solution: Solution
    problem: ProblemData
    relative_error: float


def fit(
    data: Dataset,
    basis: MonomialBasis,
    scheme: WeightScheme,
    config: SolverConfig = SolverConfig(),
    nonnegative: bool = True,
    trace=None,
    design: Optional[DesignMatrix] = None,
) -> FitResult:
    design = design if design is not None else build_design_matrix(basis, data)
    problem = make_problem(design, data.responses, scheme, nonnegative)
    sol = solve(problem, config, trace)
    thr = config.threshold_for(nonnegative)
    if nonnegative:
        model = from_solution(basis, sol.x, thr)
    else:
        # signed coefficients do not form a posynomial; keep the positive part only
        model = from_solution(basis, np.where(sol.x > 0, sol.x, 0.0), thr)
    re = float(np.linalg.norm(design.columns @ sol.x - data.responses) / np.linalg.norm(data.responses))
    return FitResult(model, sol, problem, re)


# ---------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True)
class SweepSpec:
    gamma_min: float
    gamma_max: float
    count: int

    def __post_init__(self):
        if not (0 < self.gamma_min < self.gamma_max):
            raise ConfigError("need 0 < gamma_min < gamma_max")
        if int(self.count) < 2:
            raise ConfigError("a sweep needs at least two gamma values")

    def gammas(self) -> np.ndarray:
        return np.geomspace(self.gamma_min, self.gamma_max, int(self.count))


@dataclass
class ParetoRow:
    gamma: float
    cardinality: int
    relative_error: float
    gap: float
    converged: bool
    wall_time: float
    error: Optional[str] = None
    x: Optional[np.ndarray] = field(default=None, repr=False)


PARETO_COLUMNS = ("gamma", "cardinality", "relative_error", "gap", "converged", "wall_time_s")


def _sweep_row(design, y, scheme, gamma, config, nonnegative) -> ParetoRow:
    t0 = time.perf_counter()
    try:
        problem = make_problem(design, y, scheme.with_gamma(gamma), nonnegative)
        sol = solve(problem, config)
    except (PosyError, FloatingPointError) as exc:
        log.warning("gamma=%g failed: %s", gamma, exc)
        return ParetoRow(gamma, 0, math.nan, math.nan, False, time.perf_counter() - t0, str(exc))
    re = float(np.linalg.norm(design.columns @ sol.x - y) / np.linalg.norm(y))
    return ParetoRow(gamma, sol.cardinality, re, sol.gap, sol.converged,
                     time.perf_counter() - t0, None, sol.x)


def sweep(
    design: DesignMatrix,
    y,
    scheme: WeightScheme,
    spec: SweepSpec,
    config: SolverConfig = SolverConfig(),
    nonnegative: bool = True,
    jobs: int = 1,
) -> list[ParetoRow]:
    """Solve once per gamma; rows are independent and returned sorted by gamma."""
    y = np.asarray(y, dtype=float)
    gammas = [float(g) for g in spec.gammas()]
    if jobs <= 1:
        rows = [_sweep_row(design, y, scheme, g, config, nonnegative) for g in gammas]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda g: _sweep_row(design, y, scheme, g, config, nonnegative), gammas))
    return sorted(rows, key=lambda r: r.gamma)


def write_pareto_csv(rows: Sequence[ParetoRow], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PARETO_COLUMNS)
        for r in rows:
            writer.writerow([repr(r.gamma), r.cardinality, repr(r.relative_error), repr(r.gap),
                             str(r.converged).lower(), f"{r.wall_time:.6f}"])


def read_pareto_csv(path: str | Path) -> list[ParetoRow]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return [
            ParetoRow(float(d["gamma"]), int(d["cardinality"]), float(d["relative_error"]),
                      float(d["gap"]), d["converged"] == "true", float(d["wall_time_s"]))
            for d in csv.DictReader(fh)
        ]


# ---------------------------------------------------------------------------
# leave-one-out

@dataclass
class LOOResult:
    indices: np.ndarray
    nu: np.ndarray
    ae: float
    predictions: np.ndarray
    kept_columns: np.ndarray

    @property
    def empty(self) -> bool:
        return self.indices.size == 0


def validation_indices(data: Dataset, margin: float) -> np.ndarray:
    """Points whose every coordinate lies inside the observed range shrunk by
    ``margin`` of its width at both ends."""
    if not (0 <= margin < 0.5):
        raise ConfigError("boundary margin must lie in [0, 0.5)")
    w = data.samples
    lo, hi = w.min(axis=0), w.max(axis=0)
    pad = margin * (hi - lo)
    inside = np.all((w >= lo + pad) & (w <= hi - pad), axis=1)
    return np.flatnonzero(inside)


def loo_validate(
    data: Dataset,
    basis: MonomialBasis,
    scheme: WeightScheme,
    boundary_margin: float = 0.075,
    config: SolverConfig = SolverConfig(),
    nonnegative: bool = True,
) -> LOOResult:
    """Leave-one-out over the points away from the data boundary.

    Each validation point is predicted by a model fitted on all other points;
    ``nu_j = |y_j - yhat_j| / ||y_val||`` and ``AE = sqrt(sum nu_j^2)``.
    """
    if data.m < 2:
        raise DataError("leave-one-out needs at least two points")
    idx = validation_indices(data, boundary_margin)
    if idx.size == 0:
        log.warning("no points inside the boundary margin %.3g; nothing to validate", boundary_margin)
        return LOOResult(idx, np.array([]), math.nan, np.array([]), np.array([], dtype=int))
    full = build_design_matrix(basis, data)
    y = data.responses
    yval_norm = float(np.linalg.norm(y[idx]))
    if yval_norm == 0:
        raise DataError("validation responses are all zero")
    preds = np.empty(idx.size)
    kept = np.empty(idx.size, dtype=int)
    for k, j in enumerate(idx):
        rows = np.delete(np.arange(data.m), j)
        design = DesignMatrix(full.columns[rows])
        problem = make_problem(design, y[rows], scheme, nonnegative)
        sol = solve(problem, config)
        preds[k] = float(full.columns[j] @ sol.x)
        kept[k] = sol.elimination.reduced_n
    nu = np.abs(y[idx] - preds) / yval_norm
    return LOOResult(idx, nu, float(math.sqrt(float(nu @ nu))), preds, kept)


def write_loo_csv(result: LOOResult, data: Dataset, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "y", "y_hat", "nu", "kept_columns"])
        for j, p, v, kc in zip(result.indices, result.predictions, result.nu, result.kept_columns):
            writer.writerow([int(j), repr(float(data.responses[j])), repr(float(p)), repr(float(v)), int(kc)])
