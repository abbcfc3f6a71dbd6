"""AdaGrad updates, the training loop, model selection and grad checks."""

import numpy as np
import pytest

from softcoref import (BETA_GRID, ConfigError, CostConfig, ModelParams,
                       TrainConfig, TrainingError, adagrad_step, beta_sweep,
                       evaluate_corpus, grad_check, train)
from softcoref.optim import TrainHistory

from conftest import make_document, small_corpus


class TestAdagradStep:
    def test_zero_gradient_is_identity(self):
        theta = np.array([1.0, -2.0, 3.0])
        accum = np.array([0.5, 0.5, 0.5])
        new_theta, new_accum = adagrad_step(theta, np.zeros(3), accum, eta=0.1)
        np.testing.assert_array_equal(new_theta, theta)
        np.testing.assert_array_equal(new_accum, accum)

    def test_first_step_arithmetic(self):
        """With accum 0, g = 1, eta = 0.1 the step is eta * g / |g|."""
        theta = np.zeros(1)
        new_theta, new_accum = adagrad_step(theta, np.ones(1), np.zeros(1),
                                            eta=0.1, eps=1e-15)
        assert abs(new_theta[0] - (-0.1)) < 1e-9
        assert new_accum[0] == 1.0

    def test_second_step_shrinks(self):
        theta, accum = np.zeros(1), np.zeros(1)
        theta, accum = adagrad_step(theta, np.ones(1), accum, eta=0.1, eps=1e-15)
        theta2, accum2 = adagrad_step(theta, np.ones(1), accum, eta=0.1, eps=1e-15)
        assert accum2[0] == 2.0
        assert abs((theta2[0] - theta[0]) - (-0.1 / np.sqrt(2.0))) < 1e-9

    def test_inputs_not_mutated(self):
        theta = np.array([1.0])
        grads = np.array([2.0])
        accum = np.array([3.0])
        adagrad_step(theta, grads, accum, eta=0.1)
        assert theta[0] == 1.0 and accum[0] == 3.0

    def test_rejects_non_finite_gradient(self):
        with pytest.raises(TrainingError):
            adagrad_step(np.zeros(2), np.array([1.0, np.nan]), np.zeros(2), eta=0.1)

    def test_rejects_shape_mismatch_and_bad_eps(self):
        with pytest.raises(ConfigError):
            adagrad_step(np.zeros(2), np.zeros(3), np.zeros(2), eta=0.1)
        with pytest.raises(ConfigError):
            adagrad_step(np.zeros(2), np.zeros(2), np.zeros(2), eta=0.1, eps=0.0)


class TestTrainConfig:
    def test_defaults_valid(self):
        config = TrainConfig()
        assert config.loss == "mr-heuristic"
        assert config.eps == 1e-8

    @pytest.mark.parametrize("kwargs", [
        dict(loss="perceptron"),
        dict(beta=0.0),
        dict(temperature=-1.0),
        dict(learning_rate=0.0),
        dict(epochs=0),
        dict(lam=-1e-6),
        dict(eps=0.0),
        dict(hidden_a=0),
        dict(anneal=((0, 0.5),)),
        dict(anneal=((2, 0.0),)),
    ])
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ConfigError):
            TrainConfig(**kwargs)


def _fast_config(**overrides) -> TrainConfig:
    defaults = dict(epochs=2, hidden_a=6, hidden_p=8, learning_rate=0.1, seed=3)
    defaults.update(overrides)
    return TrainConfig(**defaults)


class TestTrain:
    def test_deterministic_reruns(self):
        corpus = small_corpus(4, seed=1)
        dev = small_corpus(2, seed=2)
        a, hist_a = train(corpus, dev, _fast_config())
        b, hist_b = train(corpus, dev, _fast_config())
        np.testing.assert_array_equal(a.to_vector(), b.to_vector())
        assert hist_a.to_csv() == hist_b.to_csv()

    def test_seed_changes_outcome(self):
        corpus = small_corpus(4, seed=1)
        a, _ = train(corpus, [], _fast_config(seed=3))
        b, _ = train(corpus, [], _fast_config(seed=4))
        assert not np.array_equal(a.to_vector(), b.to_vector())

    @pytest.mark.parametrize("kind", ["mr-heuristic", "ec-heuristic", "b3", "lea"])
    def test_loss_decreases(self, kind):
        corpus = small_corpus(6, seed=5, noise=0.05)
        config = _fast_config(loss=kind, epochs=3, temperature=1.0)
        _, history = train(corpus, [], config)
        losses = [rec.mean_loss for rec in history.records]
        assert losses[-1] < losses[0]

    def test_best_dev_selection(self):
        corpus = small_corpus(5, seed=7)
        dev = small_corpus(3, seed=8)
        params, history = train(corpus, dev, _fast_config(epochs=3))
        returned = evaluate_corpus(dev, params).conll
        best = max(rec.dev.conll for rec in history.records)
        assert abs(returned - best) < 1e-12

    def test_empty_corpus_rejected(self):
        with pytest.raises(ConfigError):
            train([], [], _fast_config())

    def test_dimension_mismatch_rejected(self):
        corpus = small_corpus(2, seed=1)
        other = small_corpus(1, seed=1, d_a=9)
        with pytest.raises(ConfigError):
            train(corpus + other, [], _fast_config())

    def test_init_model_used(self):
        corpus = small_corpus(2, seed=1)
        init = ModelParams.zeros(corpus[0].d_a, corpus[0].d_p,
                                 hidden_a=4, hidden_p=4)
        params, _ = train(corpus, [], _fast_config(init_model=init, epochs=1))
        assert params.hidden_a == 4
        # the provided instance must not be trained in place
        assert np.all(init.to_vector() == 0.0)

    def test_history_csv_shape(self):
        corpus = small_corpus(3, seed=1)
        dev = small_corpus(2, seed=2)
        _, history = train(corpus, dev, _fast_config(epochs=2))
        lines = history.to_csv().strip().split("\n")
        assert lines[0] == TrainHistory.CSV_HEADER
        assert len(lines) == 3
        assert all(len(line.split(",")) == 9 for line in lines)
        assert lines[1].startswith("1,")

    def test_history_nan_without_dev(self):
        corpus = small_corpus(2, seed=1)
        _, history = train(corpus, [], _fast_config(epochs=1))
        row = history.to_csv().strip().split("\n")[1]
        assert row.split(",")[2:] == ["nan"] * 7

    def test_anneal_schedule_runs(self):
        corpus = small_corpus(3, seed=1, noise=0.05)
        config = _fast_config(loss="b3", epochs=3, temperature=1.0,
                              anneal=((2, 0.5), (3, 0.25)))
        _, history = train(corpus, [], config)
        assert len(history.records) == 3


class TestGradCheck:
    def test_small_model_passes(self):
        doc = make_document("d", [1, 1, 3, 3, 3], seed=1)
        params = ModelParams.random(4, 5, hidden_a=3, hidden_p=4, seed=1)
        for kind in ("mr-heuristic", "ec-heuristic", "b3", "lea"):
            assert grad_check(doc, params, kind) < 1e-6

    def test_subset_of_large_model(self):
        doc = make_document("d", [1, 1, 3], seed=2)
        params = ModelParams.random(4, 5, hidden_a=10, hidden_p=20, seed=2)
        assert params.num_params > 50
        worst = grad_check(doc, params, "mr-heuristic", max_coords=50)
        assert worst < 1e-6

    def test_rejects_step_size_out_of_range(self):
        doc = make_document("d", [1, 1], seed=1)
        params = ModelParams.random(4, 5, hidden_a=2, hidden_p=2, seed=1)
        with pytest.raises(ConfigError):
            grad_check(doc, params, "mr-heuristic", h=1e-8)
        with pytest.raises(ConfigError):
            grad_check(doc, params, "mr-heuristic", h=1e-2)

    def test_low_temperature_still_reasonable(self):
        doc = make_document("d", [1, 2, 1, 2], seed=3)
        params = ModelParams.random(4, 5, hidden_a=3, hidden_p=4, seed=3)
        assert grad_check(doc, params, "lea", temperature=0.1) < 1e-4


class TestBetaSweep:
    def test_grid_values(self):
        assert len(BETA_GRID) == 8
        assert abs(BETA_GRID[0] ** 2 - 0.8) < 1e-12
        assert BETA_GRID[1] == 1.0
        assert BETA_GRID[-1] == 2.0

    def test_one_report_per_beta(self):
        corpus = small_corpus(3, seed=1)
        dev = small_corpus(2, seed=2)
        config = _fast_config(loss="b3", epochs=1)
        results = beta_sweep(corpus, dev, config, betas=(0.5, 2.0))
        assert [b for b, _ in results] == [0.5, 2.0]
        assert all(0.0 <= rep.conll <= 1.0 for _, rep in results)

    def test_needs_dev(self):
        corpus = small_corpus(2, seed=1)
        with pytest.raises(ConfigError):
            beta_sweep(corpus, [], _fast_config(), betas=(1.0,))
