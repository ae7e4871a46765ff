"""ILS loop behavior: grid steps, acceptance, trajectory, baseline."""
import numpy as np
import pytest

import svmtune.tuner as tuner_module
from svmtune import (
    EvalCache,
    Evaluation,
    HyperParams,
    SolverConfig,
    TunerConfig,
    accept,
    baseline_grid,
    cartesian_candidates,
    grid_search_step,
    ils_tune,
    initial_ranges,
    kfold_split,
)

from synth import two_blobs


class TestAccept:
    def test_improvement_accepted(self):
        assert accept(0.9, 0.8) is True

    def test_tie_rejected(self):
        assert accept(0.8, 0.8) is False

    def test_regression_rejected(self):
        assert accept(0.7, 0.8) is False


@pytest.fixture(scope="module")
def easy():
    d = two_blobs(n=60, center=6.0, spread=1.0, seed=3)
    return d, kfold_split(d, k=5, seed=3)


class TestGridSearchStep:
    def test_rerun_returns_identical_winner(self, easy):
        d, folds = easy
        rg, rc = initial_ranges()
        first = grid_search_step(d, folds, rg, rc)
        second = grid_search_step(d, folds, rg, rc)
        assert first.params == second.params
        assert first.cv_accuracy == second.cv_accuracy

    def test_fully_cached_grid_trains_nothing(self, easy):
        d, folds = easy
        rg, rc = initial_ranges()
        cache = EvalCache()
        grid_search_step(d, folds, rg, rc, SolverConfig(), cache)
        misses_before = cache.misses
        grid_search_step(d, folds, rg, rc, SolverConfig(), cache)
        assert cache.misses == misses_before

    def test_all_tied_returns_first_candidate(self, easy, monkeypatch):
        d, folds = easy
        rg, rc = initial_ranges()
        expected_first = cartesian_candidates(rg, rc)[0]

        def constant_eval(d_, folds_, params, cfg=None, cache=None):
            return Evaluation(params=params, cv_accuracy=0.5, fold_accuracies=(0.5,))

        monkeypatch.setattr(tuner_module, "cv_accuracy", constant_eval)
        winner = grid_search_step(d, folds, rg, rc)
        assert winner.params == expected_first

    def test_threaded_matches_sequential(self, easy):
        d, folds = easy
        rg, rc = initial_ranges()
        sequential = grid_search_step(d, folds, rg, rc, SolverConfig(), EvalCache(), threads=1)
        threaded = grid_search_step(d, folds, rg, rc, SolverConfig(), EvalCache(), threads=4)
        assert sequential.params == threaded.params
        assert sequential.fold_accuracies == threaded.fold_accuracies


class TestIlsTune:
    def test_zero_iterations_returns_initial_grid(self, small_blobs_dataset):
        cfg = TunerConfig(k=5, max_iterations=0, seed=3)
        result = ils_tune(small_blobs_dataset, cfg)
        assert result.iterations == ()
        assert result.best == result.initial
        assert result.total_evaluations == 25

    def test_rerun_is_identical(self, small_blobs_dataset):
        cfg = TunerConfig(k=5, max_iterations=4, patience=2, seed=11)
        a = ils_tune(small_blobs_dataset, cfg)
        b = ils_tune(small_blobs_dataset, cfg)
        assert a.best == b.best
        assert a.initial == b.initial
        assert a.iterations == b.iterations
        assert a.total_evaluations == b.total_evaluations

    def test_monotone_incumbent_and_dominance(self, small_blobs_dataset):
        cfg = TunerConfig(k=5, max_iterations=6, patience=3, seed=5)
        result = ils_tune(small_blobs_dataset, cfg)
        incumbent = result.initial.cv_accuracy
        for record in result.iterations:
            assert record.best_candidate.cv_accuracy >= incumbent
            assert record.accepted == (record.best_candidate.cv_accuracy > incumbent)
            if record.accepted:
                incumbent = record.best_candidate.cv_accuracy
        assert result.best.cv_accuracy == incumbent
        assert result.best.cv_accuracy >= result.initial.cv_accuracy

    def test_patience_stops_loop(self, small_blobs_dataset):
        cfg = TunerConfig(k=5, max_iterations=50, patience=2, seed=3)
        result = ils_tune(small_blobs_dataset, cfg)
        rejections = [r for r in result.iterations if not r.accepted]
        assert len(result.iterations) < 50
        assert not result.iterations[-1].accepted
        assert len(rejections) >= 2

    def test_evaluation_budget(self, small_blobs_dataset):
        cfg = TunerConfig(k=5, max_iterations=4, patience=None, seed=3)
        result = ils_tune(small_blobs_dataset, cfg)
        steps = 1 + len(result.iterations)
        assert result.total_evaluations <= 25 * steps
        for record in result.iterations:
            assert 0 <= record.new_evaluations <= 25

    def test_incumbent_center_hits_cache(self, small_blobs_dataset):
        cfg = TunerConfig(k=5, max_iterations=3, patience=None, seed=3)
        result = ils_tune(small_blobs_dataset, cfg)
        # every post-initial grid is anchored at an already-evaluated center
        assert result.iterations[0].new_evaluations <= 24

    def test_progress_callback_sees_all_iterations(self, small_blobs_dataset):
        seen = []
        cfg = TunerConfig(k=5, max_iterations=3, patience=None, seed=3)
        result = ils_tune(small_blobs_dataset, cfg, progress=seen.append)
        assert [r.index for r in seen] == [r.index for r in result.iterations]

    def test_caller_supplied_cache_is_populated(self, small_blobs_dataset):
        cache = EvalCache()
        cfg = TunerConfig(k=5, max_iterations=0, seed=3)
        ils_tune(small_blobs_dataset, cfg, cache=cache)
        assert len(cache.entries) == 25

    def test_scaled_run_differs_but_is_deterministic(self, small_blobs_dataset):
        cfg = TunerConfig(k=5, max_iterations=0, seed=3, scale_features=True)
        a = ils_tune(small_blobs_dataset, cfg)
        b = ils_tune(small_blobs_dataset, cfg)
        assert a.best == b.best

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TunerConfig(k=1)
        with pytest.raises(ValueError):
            TunerConfig(max_iterations=-1)
        with pytest.raises(ValueError):
            TunerConfig(patience=0)


class TestBaselineGrid:
    def test_equals_tuning_initial(self, small_blobs_dataset):
        cfg = TunerConfig(k=5, max_iterations=3, patience=None, seed=3)
        baseline = baseline_grid(small_blobs_dataset, cfg)
        result = ils_tune(small_blobs_dataset, cfg)
        assert baseline == result.initial

    def test_never_beats_tuning(self, small_blobs_dataset):
        cfg = TunerConfig(k=5, max_iterations=5, patience=3, seed=3)
        baseline = baseline_grid(small_blobs_dataset, cfg)
        result = ils_tune(small_blobs_dataset, cfg)
        assert result.best.cv_accuracy >= baseline.cv_accuracy

    def test_exactly_25_evaluations(self, small_blobs_dataset):
        cache = EvalCache()
        baseline_grid(small_blobs_dataset, TunerConfig(k=5, seed=3), cache=cache)
        assert cache.misses == 25
        assert len(cache.entries) == 25
