"""Regularized square-root LASSO by safe elimination + coordinate descent.

Minimizes

    f(x) = sqrt(||Phi x - y||^2 + sigma^2 ||x||^2) + lambda^T |x|

either over all of R^n or over the nonnegative orthant. The sigma-augmented
matrix ``[Phi; sigma I]`` is never formed; every quantity that involves it is
expressed through ``Phi``, ``sigma`` and the incremental pair

    h = Phi_aug^T r,   c = ||r||^2,   r = Phi_aug x - y_aug.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .basis import DesignMatrix
from .errors import ConfigError, DataError, NumericalError

log = logging.getLogger(__name__)

TraceSink = Callable[[dict], None]

_DENOM_FLOOR = 1e-300


@dataclass(frozen=True)
class ProblemData:
    """Design, response, per-feature weights and ridge parameter of one instance."""

    design: DesignMatrix
    response: np.ndarray
    weights: np.ndarray
    sigma: float = 0.0
    nonnegative: bool = True

    def __post_init__(self):
        design = self.design
        if not isinstance(design, DesignMatrix):
            design = DesignMatrix(np.asarray(design, dtype=float))
        y = np.array(self.response, dtype=float).reshape(-1)
        lam = np.array(self.weights, dtype=float).reshape(-1)
        m, n = design.shape
        if y.shape[0] != m:
            raise DataError(f"design has {m} rows but response has {y.shape[0]} entries")
        if lam.shape[0] != n:
            raise ConfigError(f"design has {n} columns but {lam.shape[0]} weights were given")
        if not np.all(np.isfinite(lam)) or np.any(lam < 0):
            raise ConfigError("weights must be finite and nonnegative")
        sigma = float(self.sigma)
        if not math.isfinite(sigma) or sigma < 0:
            raise ConfigError(f"sigma must be finite and nonnegative, got {self.sigma!r}")
        if not np.all(np.isfinite(y)):
            raise DataError("response must be finite")
        for a in (y, lam):
            a.setflags(write=False)
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "response", y)
        object.__setattr__(self, "weights", lam)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "nonnegative", bool(self.nonnegative))
        # derived quantities of the augmented problem
        q = design.columns.T @ y
        q.setflags(write=False)
        sq = design.column_sq_norms + sigma**2
        sq.setflags(write=False)
        object.__setattr__(self, "_q", q)
        object.__setattr__(self, "_phi_sq", sq)
        object.__setattr__(self, "_y_sq", float(y @ y))

    @property
    def n(self) -> int:
        return self.design.shape[1]

    @property
    def m(self) -> int:
        return self.design.shape[0]

    @property
    def phi(self) -> np.ndarray:
        return self.design.columns

    @property
    def q(self) -> np.ndarray:
        """``Phi^T y``, equal to ``Phi_aug^T y_aug``."""
        return self._q

    @property
    def phi_sq(self) -> np.ndarray:
        """Squared augmented column norms ``||phi_i||^2 + sigma^2``."""
        return self._phi_sq

    @property
    def y_sq(self) -> float:
        return self._y_sq

    def restrict(self, cols) -> "ProblemData":
        """The same problem on a subset of columns."""
        cols = np.asarray(cols, dtype=int)
        return ProblemData(
            self.design.take(cols), self.response, self.weights[cols], self.sigma, self.nonnegative
        )


@dataclass(frozen=True)
class SolverConfig:
    gap_tolerance: float = 1e-6
    max_epochs: int = 10_000
    # None picks 0 in nonnegative mode and 1e-12 otherwise
    zero_threshold: Optional[float] = None
    kernel_cache_bytes: int = 0
    shuffle: bool = False
    seed: Optional[int] = None
    stall_tolerance: float = 1e-12
    eliminate: bool = True
    # "compiled" (numba sweep) or "python" (coordinate_update loop)
    backend: str = "compiled"

    def __post_init__(self):
        if not (self.gap_tolerance > 0):
            raise ConfigError("gap_tolerance must be positive")
        if int(self.max_epochs) < 1:
            raise ConfigError("max_epochs must be at least 1")
        if self.zero_threshold is not None and not (self.zero_threshold >= 0):
            raise ConfigError("zero_threshold must be nonnegative")
        if self.kernel_cache_bytes < 0:
            raise ConfigError("kernel_cache_bytes must be nonnegative")
        if self.backend not in ("compiled", "python"):
            raise ConfigError(f"unknown backend {self.backend!r}")

    def threshold_for(self, nonnegative: bool) -> float:
        if self.zero_threshold is not None:
            return float(self.zero_threshold)
        return 0.0 if nonnegative else 1e-12


@dataclass
class SolverState:
    """Current iterate with ``h = Phi_aug^T r`` and ``c = ||r||^2``."""

    x: np.ndarray
    h: np.ndarray
    c: float
    epoch: int = 0

    def copy(self) -> "SolverState":
        return SolverState(self.x.copy(), self.h.copy(), self.c, self.epoch)


@dataclass(frozen=True)
class FeatureEliminationReport:
    kept: np.ndarray
    eliminated: np.ndarray
    original_n: int
    reduced_n: int


@dataclass(frozen=True)
class DualCertificate:
    """Scaled normalized residual ``u = alpha * r / ||r||`` and its bound.

    ``u`` itself lives in R^(m+n) and is not stored; :meth:`vector` builds it
    on request.
    """

    alpha: float
    residual_norm: float
    lower_bound: float
    primal: float

    @property
    def gap(self) -> float:
        return self.primal - self.lower_bound

    def vector(self, problem: ProblemData, x: np.ndarray) -> np.ndarray:
        r = np.concatenate([problem.phi @ x - problem.response, problem.sigma * x])
        if self.residual_norm == 0:
            return np.zeros_like(r)
        return self.alpha * r / self.residual_norm


@dataclass
class Solution:
    x: np.ndarray
    objective: float
    gap: float
    lower_bound: float
    epochs_used: int
    support: np.ndarray
    converged: bool
    elimination: Optional[FeatureEliminationReport] = None
    stalled: bool = False
    wall_time: float = 0.0

    @property
    def cardinality(self) -> int:
        return int(self.support.size)


def objective(problem: ProblemData, x) -> float:
    """``sqrt(||Phi x - y||^2 + sigma^2 ||x||^2) + lambda^T |x|``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.n,):
        raise DataError(f"x must have shape ({problem.n},), got {x.shape}")
    r = problem.phi @ x - problem.response
    return math.sqrt(r @ r + problem.sigma**2 * (x @ x)) + float(problem.weights @ np.abs(x))


def eliminate_features(problem: ProblemData) -> FeatureEliminationReport:
    """Safe elimination: column i is zero at every optimum when
    ``||phi_i||^2 + sigma^2 < lambda_i^2``."""
    drop = problem.phi_sq < problem.weights**2
    kept = np.flatnonzero(~drop)
    eliminated = np.flatnonzero(drop)
    return FeatureEliminationReport(kept, eliminated, problem.n, int(kept.size))


def is_zero_optimal(problem: ProblemData) -> bool:
    """Whether ``x = 0`` solves the problem (dual feasibility of ``-y/||y||``)."""
    bound = problem.weights * math.sqrt(problem.y_sq)
    if problem.nonnegative:
        return bool(np.all(problem.q <= bound))
    return bool(np.all(np.abs(problem.q) <= bound))


def univariate_solve(
    phi_dot_y: float, phi_sq: float, y_sq: float, lam: float, nonnegative: bool = False
) -> float:
    """Minimize ``||phi z - y||_2 + lam*|z|`` over scalar z (or z >= 0).

    Only the inner products ``phi^T y``, ``||phi||^2`` and ``||y||^2`` are
    needed. Returns exactly 0.0 on the zero branch.
    """
    if not (phi_sq > 0):
        raise NumericalError(f"univariate problem needs ||phi||^2 > 0, got {phi_sq!r}")
    if lam < 0:
        raise ConfigError(f"lambda must be nonnegative, got {lam!r}")
    y_sq = max(y_sq, 0.0)
    y_norm = math.sqrt(y_sq)
    if nonnegative:
        if phi_dot_y <= lam * y_norm:
            return 0.0
    elif abs(phi_dot_y) <= lam * y_norm:
        return 0.0
    denom = phi_sq - lam * lam
    if denom < _DENOM_FLOOR:
        raise NumericalError(
            "nonzero univariate branch with ||phi||^2 <= lambda^2 "
            f"(phi_sq={phi_sq!r}, lambda={lam!r})"
        )
    x_ls = phi_dot_y / phi_sq
    disc = max(phi_sq * y_sq - phi_dot_y * phi_dot_y, 0.0)
    shrink = lam / phi_sq * math.sqrt(disc / denom)
    z = x_ls - shrink if x_ls > 0 else x_ls + shrink
    # analytically impossible; guards rounding when the zero test is marginal
    if (z > 0) != (x_ls > 0) or z == 0:
        return 0.0
    return z


class KernelColumns:
    """On-demand columns of ``Phi^T Phi + sigma^2 I`` with an optional LRU cache.

    Cached columns live in a fixed ``slots x n`` array so the compiled sweep
    can share the cache. With ``budget_bytes = 0`` nothing is stored and every
    request costs one ``n x m`` matrix-vector product.
    """

    def __init__(self, problem: ProblemData, budget_bytes: int = 0):
        n = problem.n
        self.problem = problem
        self.capacity = min(int(budget_bytes) // (8 * max(n, 1)), n)
        self.slots = np.empty((self.capacity, n))
        self.slot_of = np.full(n, -1, dtype=np.int64)
        self.owner = np.full(self.capacity, -1, dtype=np.int64)
        self.stamp = np.zeros(self.capacity, dtype=np.int64)
        # [clock, hits, misses]
        self.counters = np.zeros(3, dtype=np.int64)
        self.phi_t = np.ascontiguousarray(problem.phi.T)

    @property
    def hits(self) -> int:
        return int(self.counters[1])

    @property
    def misses(self) -> int:
        return int(self.counters[2])

    def __call__(self, i: int) -> np.ndarray:
        self.counters[0] += 1
        s = self.slot_of[i]
        if s >= 0:
            self.counters[1] += 1
            self.stamp[s] = self.counters[0]
            return self.slots[s]
        self.counters[2] += 1
        col = self.phi_t @ self.problem.phi[:, i]
        col[i] += self.problem.sigma**2
        if self.capacity > 0:
            s = int(np.argmin(self.stamp)) if self.owner.min() >= 0 else int(np.argmin(self.owner))
            if self.owner[s] >= 0:
                self.slot_of[self.owner[s]] = -1
            self.owner[s] = i
            self.slot_of[i] = s
            self.stamp[s] = self.counters[0]
            self.slots[s] = col
        return col


def kernel_column(problem: ProblemData, i: int, cache: Optional[KernelColumns] = None) -> np.ndarray:
    """``i``-th column of the augmented kernel ``Phi^T Phi + sigma^2 I``."""
    if not 0 <= i < problem.n:
        raise IndexError(f"column {i} out of range for n={problem.n}")
    if cache is not None:
        return cache(i)
    col = problem.phi.T @ problem.phi[:, i]
    col[i] += problem.sigma**2
    return col


def initial_state(problem: ProblemData) -> SolverState:
    return SolverState(np.zeros(problem.n), -np.array(problem.q), problem.y_sq, 0)


def state_from_scratch(problem: ProblemData, x, epoch: int = 0) -> SolverState:
    """Recompute ``h`` and ``c`` directly from ``x``."""
    x = np.array(x, dtype=float)
    r = problem.phi @ x - problem.response
    h = problem.phi.T @ r + problem.sigma**2 * x
    c = float(r @ r + problem.sigma**2 * (x @ x))
    return SolverState(x, h, c, epoch)


def coordinate_update(
    problem: ProblemData,
    state: SolverState,
    i: int,
    kernel: Optional[KernelColumns] = None,
) -> tuple[SolverState, float]:
    """Exactly minimize the objective along coordinate ``i`` (in place)."""
    a = problem.phi_sq[i]
    xi = state.x[i]
    hi = state.h[i]
    b = a * xi - hi
    s = a * xi * xi + state.c - 2.0 * xi * hi
    if not (math.isfinite(b) and math.isfinite(s)):
        raise NumericalError(f"non-finite univariate data at coordinate {i}")
    z = univariate_solve(b, a, s, problem.weights[i], problem.nonnegative)
    delta = z - xi
    if delta == 0.0:
        return state, 0.0
    state.x[i] = z
    state.c = max(state.c + a * delta * delta + 2.0 * delta * hi, 0.0)
    state.h += delta * kernel_column(problem, i, kernel)
    if not math.isfinite(state.c):
        raise NumericalError(f"residual norm became non-finite after updating coordinate {i}")
    return state, delta


def dual_bound(problem: ProblemData, state: SolverState) -> DualCertificate:
    """Dual-feasible lower bound built from the current residual direction."""
    x = state.x
    primal = math.sqrt(max(state.c, 0.0)) + float(problem.weights @ np.abs(x))
    rnorm = math.sqrt(max(state.c, 0.0))
    if rnorm == 0.0:
        return DualCertificate(1.0, 0.0, primal, primal)
    g = state.h / rnorm  # Phi_aug^T u_tilde
    lam = problem.weights
    if problem.nonnegative:
        viol = g < -lam
    else:
        viol = np.abs(g) > lam
    alpha = 1.0
    if viol.any():
        alpha = min(1.0, float(np.min(lam[viol] / np.abs(g[viol]))))
    numer = problem.y_sq - float(problem.q @ x)
    return DualCertificate(alpha, rnorm, alpha * numer / rnorm, primal)


def _python_epoch(problem, state, order, kernel):
    max_delta = 0.0
    for i in order:
        _, delta = coordinate_update(problem, state, i, kernel)
        if delta != 0.0:
            max_delta = max(max_delta, abs(delta))
    return max_delta


def _compiled_epoch(problem, state, order, kernel):
    from . import _sweep

    c, max_delta, status, i = _sweep.run_epoch(
        order, problem.phi, kernel.phi_t, problem.phi_sq, problem.weights,
        problem.nonnegative, problem.sigma**2, state.x, state.h, state.c,
        kernel.slots, kernel.slot_of, kernel.owner, kernel.stamp, kernel.counters,
        np.empty(problem.n),
    )
    state.c = c
    if status == _sweep.NONFINITE:
        raise NumericalError(f"non-finite value while updating coordinate {i}")
    if status == _sweep.CONTRADICTION:
        raise NumericalError(f"nonzero univariate branch with ||phi||^2 <= lambda^2 at coordinate {i}")
    return max_delta


def solve(
    problem: ProblemData,
    config: SolverConfig = SolverConfig(),
    trace: Optional[TraceSink] = None,
    x0=None,
) -> Solution:
    """Safe elimination, then cyclic coordinate descent until the duality gap
    drops below ``config.gap_tolerance`` or ``max_epochs`` sweeps are done.

    Sweeps run on the problem restricted to the kept columns; eliminated
    columns satisfy their dual constraints strictly, so the certificate of the
    reduced problem is valid for the full one. A run that exhausts
    ``max_epochs`` comes back with ``converged=False``.
    """
    t0 = time.perf_counter()
    thr = config.threshold_for(problem.nonnegative)
    if config.eliminate:
        report = eliminate_features(problem)
    else:
        report = FeatureEliminationReport(np.arange(problem.n), np.array([], dtype=int),
                                          problem.n, problem.n)
    if problem.y_sq == 0.0:
        x = np.zeros(problem.n)
        return Solution(x, objective(problem, x), 0.0, 0.0, 0, np.array([], dtype=int), True,
                        report, False, time.perf_counter() - t0)
    if problem.sigma == 0.0:
        warnings.warn("sigma = 0: coordinate descent is not guaranteed to converge",
                      RuntimeWarning, stacklevel=2)

    kept = report.kept
    reduced = problem.restrict(kept) if report.eliminated.size else problem
    if x0 is None:
        state = initial_state(reduced)
    else:
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (problem.n,):
            raise ConfigError(f"warm start must have shape ({problem.n},)")
        if problem.nonnegative and np.any(x0 < 0):
            raise ConfigError("warm start must be nonnegative in nonnegative mode")
        state = state_from_scratch(reduced, x0[kept])
    kernel = KernelColumns(reduced, config.kernel_cache_bytes)
    order = np.arange(reduced.n, dtype=np.int64)
    rng = np.random.default_rng(config.seed) if config.shuffle else None
    epoch_fn = _python_epoch if config.backend == "python" else _compiled_epoch

    def emit(cert, max_delta):
        if trace is not None:
            trace({
                "epoch": state.epoch,
                "primal": cert.primal,
                "dual": cert.lower_bound,
                "gap": cert.gap,
                "support": int(np.count_nonzero(np.abs(state.x) > thr)),
                "max_delta": float(max_delta),
            })

    def certified(cert):
        nonlocal state
        if cert.gap > config.gap_tolerance:
            return cert, False
        # confirm on a recomputed state so incremental drift cannot fake convergence
        state = state_from_scratch(reduced, state.x, state.epoch)
        cert = dual_bound(reduced, state)
        return cert, cert.gap <= config.gap_tolerance

    cert, done = certified(dual_bound(reduced, state))
    emit(cert, 0.0)
    stalled = False
    while not done and state.epoch < config.max_epochs:
        if rng is not None:
            rng.shuffle(order)
        max_delta = epoch_fn(reduced, state, order, kernel)
        state.epoch += 1
        cert, done = certified(dual_bound(reduced, state))
        emit(cert, max_delta)
        if not done and max_delta <= config.stall_tolerance:
            stalled = True
            break

    x = np.zeros(problem.n)
    x[kept] = state.x
    if problem.nonnegative and np.any(x < 0):
        raise NumericalError("negative coefficient in nonnegative mode")
    final = dual_bound(problem, state_from_scratch(problem, x))
    p = objective(problem, x)
    support = np.flatnonzero(np.abs(x) > thr)
    converged = p - final.lower_bound <= config.gap_tolerance
    if not converged:
        log.info("stopped after %d epochs with gap %.3g", state.epoch, p - final.lower_bound)
    return Solution(x, p, p - final.lower_bound, final.lower_bound, state.epoch, support,
                    converged, report, stalled, time.perf_counter() - t0)
