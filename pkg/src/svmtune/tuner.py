"""Iterated local search over (C, gamma) with grid search as the inner step.

Each iteration runs an exhaustive 5x5 grid anchored at the incumbent, accepts
the winner only on a strict accuracy improvement (rebuilding both ranges
around it), and otherwise perturbs the ranges to re-balance intensification
against diversification. The loop stops at the iteration budget or after a
configurable number of consecutive rejections.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dataset import Dataset, FoldAssignment, kfold_split, standardize
from .evaluation import EvalCache, Evaluation, cv_accuracy
from .search_space import (
    ParamRange,
    SearchState,
    cartesian_candidates,
    initial_ranges,
    perturb_state,
    ranges_around,
)
from .svm import SolverConfig

__all__ = [
    "TunerConfig",
    "IterationRecord",
    "TuneResult",
    "grid_search_step",
    "accept",
    "ils_tune",
    "baseline_grid",
]

ProgressCallback = Callable[["IterationRecord"], None]


@dataclass(frozen=True)
class TunerConfig:
    """User-imposed stopping rules and evaluation settings.

    ``patience`` is the number of consecutive rejections tolerated before an
    early stop; None disables the stagnation stop entirely.
    """

    k: int = 5
    max_iterations: int = 20
    patience: int | None = 5
    seed: int = 42
    solver: SolverConfig = field(default_factory=SolverConfig)
    scale_features: bool = False

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if self.patience is not None and self.patience < 1:
            raise ValueError("patience must be >= 1 when finite")


@dataclass(frozen=True)
class IterationRecord:
    """Trajectory entry for one perturb/grid/accept cycle."""

    index: int
    range_gamma_used: ParamRange
    range_c_used: ParamRange
    best_candidate: Evaluation
    accepted: bool
    new_evaluations: int


@dataclass(frozen=True)
class TuneResult:
    """Outcome of a tuning run, including the full iteration trajectory."""

    best: Evaluation
    initial: Evaluation
    iterations: tuple[IterationRecord, ...]
    total_evaluations: int
    wall_time_seconds: float


def accept(candidate_acc: float, best_acc: float) -> bool:
    """Strict-improvement acceptance: ties and regressions are rejected."""
    return candidate_acc > best_acc


def grid_search_step(
    d: Dataset,
    folds: FoldAssignment,
    rg: ParamRange,
    rc: ParamRange,
    cfg: SolverConfig = SolverConfig(),
    cache: EvalCache | None = None,
    threads: int = 1,
) -> Evaluation:
    """Evaluate all 25 candidates of the (rg, rc) grid and return the winner.

    Ties break toward the earliest canonical position, and candidates are
    aggregated in canonical order after evaluation, so the result does not
    depend on the thread count.
    """
    candidates = cartesian_candidates(rg, rc)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            evaluations = list(
                pool.map(lambda p: cv_accuracy(d, folds, p, cfg, cache), candidates)
            )
    else:
        evaluations = [cv_accuracy(d, folds, p, cfg, cache) for p in candidates]

    best = evaluations[0]
    for evaluation in evaluations[1:]:
        if evaluation.cv_accuracy > best.cv_accuracy:
            best = evaluation
    return best


def _prepared(d: Dataset, cfg: TunerConfig) -> tuple[Dataset, FoldAssignment]:
    if cfg.scale_features:
        d, _ = standardize(d)
    return d, kfold_split(d, cfg.k, cfg.seed)


def ils_tune(
    d: Dataset,
    cfg: TunerConfig = TunerConfig(),
    *,
    threads: int = 1,
    cache: EvalCache | None = None,
    progress: ProgressCallback | None = None,
) -> TuneResult:
    """Run the full tuning loop and return the best (C, gamma) found.

    Folds are built once from (k, seed) and reused for every evaluation, so
    candidate accuracies are directly comparable across iterations. The
    initial incumbent is the winner of a grid search over the powers-of-ten
    ranges; each later iteration greets the incumbent at its grid center, so
    the incumbent accuracy sequence never decreases.
    """
    started = time.perf_counter()
    d, folds = _prepared(d, cfg)
    if cache is None:
        cache = EvalCache()
    misses_at_start = cache.misses

    rg0, rc0 = initial_ranges()
    best = grid_search_step(d, folds, rg0, rc0, cfg.solver, cache, threads)
    initial = best

    state = SearchState(
        range_gamma=ranges_around(best.params.gamma),
        range_c=ranges_around(best.params.c),
        rng=np.random.Generator(np.random.PCG64(cfg.seed)),
    )
    records: list[IterationRecord] = []
    consecutive_rejections = 0
    for index in range(1, cfg.max_iterations + 1):
        misses_before = cache.misses
        winner = grid_search_step(
            d, folds, state.range_gamma, state.range_c, cfg.solver, cache, threads
        )
        accepted = accept(winner.cv_accuracy, best.cv_accuracy)
        record = IterationRecord(
            index=index,
            range_gamma_used=state.range_gamma,
            range_c_used=state.range_c,
            best_candidate=winner,
            accepted=accepted,
            new_evaluations=cache.misses - misses_before,
        )
        records.append(record)
        if progress is not None:
            progress(record)

        if accepted:
            best = winner
            state.range_gamma = ranges_around(best.params.gamma)
            state.range_c = ranges_around(best.params.c)
            consecutive_rejections = 0
        else:
            consecutive_rejections += 1
            if cfg.patience is not None and consecutive_rejections >= cfg.patience:
                break
            state = perturb_state(state)

    return TuneResult(
        best=best,
        initial=initial,
        iterations=tuple(records),
        total_evaluations=cache.misses - misses_at_start,
        wall_time_seconds=time.perf_counter() - started,
    )


def baseline_grid(
    d: Dataset,
    cfg: TunerConfig = TunerConfig(),
    *,
    threads: int = 1,
    cache: EvalCache | None = None,
) -> Evaluation:
    """Plain non-iterated grid search: the comparison baseline.

    Uses the same folds as :func:`ils_tune` for the same (k, seed), so it
    equals the tuning run's initial evaluation exactly.
    """
    d, folds = _prepared(d, cfg)
    if cache is None:
        cache = EvalCache()
    rg0, rc0 = initial_ranges()
    return grid_search_step(d, folds, rg0, rc0, cfg.solver, cache, threads)
