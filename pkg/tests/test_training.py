import math

import numpy as np
import pytest

from hybrid_newton.conditioning import PruneConfig
from hybrid_newton.datasets import make_gaussian_blobs, make_quadratic_bowl
from hybrid_newton.matrix import SymMatrix
from hybrid_newton.model import Batch, LinearLeastSquares, MlpModel, QuadraticBowl
from hybrid_newton.scheduler import CostModelParams, Processor, TimeLedger
from hybrid_newton.training import (
    SingularHessian,
    TrainConfig,
    ZeroVector,
    gradient,
    hvp,
    layer_hessian,
    newton_step,
    sgd_step,
    train,
)

from oracles import fd_hessian_of_loss, random_spd


def quiet_params(**kw):
    return CostModelParams(**kw)


class TestHvp:
    def test_quadratic_exactness(self):
        rng = np.random.default_rng(0)
        A = SymMatrix(random_spd(rng, 7))
        bowl = QuadraticBowl(A, rng.standard_normal(7), theta0=rng.standard_normal(7))
        for _ in range(10):
            v = rng.standard_normal(7)
            got = hvp(bowl, None, 0, v, h=1e-3)
            assert np.allclose(got, A.entries @ v, rtol=1e-8, atol=1e-8)

    def test_linearity_on_mlp(self):
        rng = np.random.default_rng(1)
        model = MlpModel.init((5, 4, 3), rng)
        batch = Batch(rng.uniform(size=(6, 5)), rng.integers(0, 3, size=6))
        v1 = rng.standard_normal(model.layer_param_count(0))
        v2 = rng.standard_normal(model.layer_param_count(0))
        h = 1e-4
        a = hvp(model, batch, 0, v1, h)
        b = hvp(model, batch, 0, v2, h)
        ab = hvp(model, batch, 0, v1 + v2, h)
        scale = max(np.abs(ab).max(), 1e-9)
        assert np.abs(ab - (a + b)).max() <= 1e-6 * max(scale, 1.0)

    def test_zero_vector_rejected(self):
        rng = np.random.default_rng(2)
        bowl = QuadraticBowl(SymMatrix(random_spd(rng, 3)), np.zeros(3))
        with pytest.raises(ZeroVector):
            hvp(bowl, None, 0, np.zeros(3), 1e-3)

    def test_restores_parameters(self):
        rng = np.random.default_rng(3)
        model = MlpModel.init((4, 3, 2), rng)
        batch = Batch(rng.uniform(size=(5, 4)), rng.integers(0, 2, size=5))
        before = [model.get_layer_flat(l) for l in range(2)]
        hvp(model, batch, 0, np.ones(model.layer_param_count(0)), 1e-3)
        after = [model.get_layer_flat(l) for l in range(2)]
        for a, b in zip(before, after):
            assert np.array_equal(a, b)


class TestLayerHessian:
    def test_quadratic_bowl_recovers_matrix(self):
        rng = np.random.default_rng(4)
        A = SymMatrix(random_spd(rng, 9))
        bowl = QuadraticBowl(A, rng.standard_normal(9), theta0=rng.standard_normal(9))
        H = layer_hessian(bowl, None, 0)
        assert np.abs(H.entries - A.entries).max() <= 1e-8 * max(np.abs(A.entries).max(), 1.0)

    def test_linear_least_squares_analytic_form(self):
        rng = np.random.default_rng(5)
        X = rng.uniform(size=(20, 6))
        y = rng.standard_normal(20)
        model = LinearLeastSquares(rng.standard_normal(6))
        H = layer_hessian(model, Batch(X, y), 0)
        expected = X.T @ X / 20.0
        assert np.abs(H.entries - expected).max() <= 1e-6

    def test_reconstruction_matches_fd_of_loss(self):
        # small smooth-at-sample model; second-order FD of the loss is the oracle
        rng = np.random.default_rng(6)
        model = MlpModel.init((3, 4, 2), rng)  # layer 1 has 4*2+2 = 10 params
        batch = Batch(rng.uniform(0.2, 1.0, size=(6, 3)), rng.integers(0, 2, size=6))
        layer = 1  # softmax head is smooth, no kink sensitivity
        H = layer_hessian(model, batch, layer, h=1e-3)

        theta0 = model.get_layer_flat(layer)

        def loss_at(t):
            model.set_layer_flat(layer, t)
            val = model.loss_and_accuracy(batch)[0]
            model.set_layer_flat(layer, theta0)
            return val

        H_ref = fd_hessian_of_loss(loss_at, theta0, h=1e-3)
        scale = max(np.abs(H_ref).max(), 1.0)
        assert np.abs(H.entries - H_ref).max() <= 1e-4 * scale

    def test_raw_asymmetry_small_on_mlp(self):
        rng = np.random.default_rng(7)
        model = MlpModel.init((4, 3, 2), rng)
        batch = Batch(rng.uniform(0.2, 1.0, size=(8, 4)), rng.integers(0, 2, size=8))
        layer, h = 1, 1e-3
        n = model.layer_param_count(layer)
        raw = np.empty((n, n))
        e = np.zeros(n)
        for i in range(n):
            e[i] = 1.0
            raw[:, i] = hvp(model, batch, layer, e, h)
            e[i] = 0.0
        fro = np.linalg.norm(raw)
        assert np.linalg.norm(raw - raw.T) <= 1e-6 * fro


class TestNewtonStep:
    def test_one_step_lands_on_quadratic_minimum(self):
        rng = np.random.default_rng(8)
        bowl = make_quadratic_bowl(n=12, kappa=50.0, seed=3)
        bowl.set_layer_flat(0, rng.standard_normal(12))
        cfg = TrainConfig(
            learning_rate=1.0, epsilon_reg=0.0, scheduler_mode="classical", seed=0
        )
        newton_step(bowl, None, cfg, TimeLedger())
        grad_norm = np.linalg.norm(bowl.gradients()[0])
        assert grad_norm <= 1e-8

    def test_modes_share_trajectory_with_zero_precision_noise(self):
        ds = make_gaussian_blobs(n_samples=120, in_dim=6, n_classes=3, seed=5)
        results = {}
        for mode in ("classical", "quantum"):
            cfg = TrainConfig(
                optimizer="newton",
                steps=3,
                batch_size=32,
                epsilon_reg=0.5,
                scheduler_mode=mode,
                seed=11,
                cost_params=CostModelParams(epsilon_prec=0.0),
                fd_step=0.05,
            )
            log = train(cfg, ds, layer_sizes=(6, 5, 3))
            results[mode] = log
        mc, mq = results["classical"].model, results["quantum"].model
        for layer in range(mc.n_layers):
            assert np.array_equal(mc.get_layer_flat(layer), mq.get_layer_flat(layer))
        # only billed time differs
        assert results["classical"].ledger.billed_quantum == 0.0
        assert results["quantum"].ledger.billed_classical == 0.0

    def test_forced_modes_record_forced_processor(self):
        ds = make_gaussian_blobs(n_samples=80, in_dim=5, n_classes=2, seed=6)
        cfg = TrainConfig(
            optimizer="newton", steps=2, batch_size=16, epsilon_reg=0.5,
            scheduler_mode="quantum", seed=1, fd_step=0.05,
        )
        log = train(cfg, ds, layer_sizes=(5, 4, 2))
        procs = {i.decision.processor for r in log.records for i in r.layers}
        assert procs == {Processor.QUANTUM}

    def test_regularization_rescues_singular_hessian(self):
        # rank-deficient quadratic: direct solve fails, shifted one succeeds
        d = np.zeros(6)
        d[0] = 1.0
        A = SymMatrix(np.diag(d))
        bowl = QuadraticBowl(A, np.zeros(6), theta0=np.ones(6))
        bad = TrainConfig(epsilon_reg=0.0, scheduler_mode="classical")
        with pytest.raises(SingularHessian):
            newton_step(bowl, None, bad, TimeLedger())
        ok = TrainConfig(epsilon_reg=0.5, scheduler_mode="classical")
        newton_step(bowl, None, ok, TimeLedger())  # no raise

    def test_ledger_accumulates_per_layer(self):
        ds = make_gaussian_blobs(n_samples=80, in_dim=5, n_classes=2, seed=7)
        cfg = TrainConfig(
            optimizer="newton", steps=2, batch_size=16, epsilon_reg=0.5,
            scheduler_mode="classical", seed=2, fd_step=0.05,
        )
        log = train(cfg, ds, layer_sizes=(5, 4, 2))
        assert len(log.ledger.decisions) == 2 * 2  # steps * layers
        total = sum(d.chosen_time for d in log.ledger.decisions)
        assert log.ledger.total == pytest.approx(total, rel=0, abs=0)
        assert log.records[-1].cumulative_billed == log.ledger.total


class TestSgdStep:
    def test_zero_gradient_leaves_parameters(self):
        A = SymMatrix.identity(4)
        bowl = QuadraticBowl(A, np.zeros(4), theta0=np.zeros(4))
        cfg = TrainConfig(optimizer="sgd", learning_rate=0.5)
        sgd_step(bowl, None, cfg)
        assert np.array_equal(bowl.theta, np.zeros(4))

    def test_matches_analytic_update(self):
        rng = np.random.default_rng(9)
        A = SymMatrix(random_spd(rng, 5))
        b = rng.standard_normal(5)
        t0 = rng.standard_normal(5)
        bowl = QuadraticBowl(A, b, theta0=t0)
        cfg = TrainConfig(optimizer="sgd", learning_rate=0.01)
        sgd_step(bowl, None, cfg)
        expected = t0 - 0.01 * (A.entries @ t0 - b)
        assert np.allclose(bowl.theta, expected, rtol=0, atol=0)

    def test_monotone_loss_below_stability_threshold(self):
        rng = np.random.default_rng(10)
        bowl = make_quadratic_bowl(n=8, kappa=20.0, seed=4)
        bowl.set_layer_flat(0, rng.standard_normal(8))
        # eigenvalues lie in [1/20, 1]; lr < 2/lambda_max = 2
        cfg = TrainConfig(optimizer="sgd", learning_rate=0.5)
        losses = []
        for step in range(25):
            rec = sgd_step(bowl, None, cfg, step)
            losses.append(rec.loss)
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_billed_time_is_flat_constant(self):
        ds = make_gaussian_blobs(n_samples=60, in_dim=4, n_classes=2, seed=8)
        cfg = TrainConfig(optimizer="sgd", learning_rate=0.1, steps=5, batch_size=16,
                          sgd_step_seconds=0.1, seed=3)
        log = train(cfg, ds, layer_sizes=(4, 3, 2))
        assert log.records[-1].cumulative_billed == pytest.approx(0.5)
        diffs = np.diff([r.cumulative_billed for r in log.records])
        assert np.allclose(diffs, 0.1)


class TestTrain:
    def test_zero_steps_empty_log_and_untouched_model(self):
        ds = make_gaussian_blobs(n_samples=60, in_dim=4, n_classes=2, seed=9)
        cfg = TrainConfig(optimizer="newton", steps=0, seed=4)
        log = train(cfg, ds, layer_sizes=(4, 3, 2))
        assert log.records == []
        ref = MlpModel.init((4, 3, 2), np.random.default_rng(np.random.SeedSequence(4).spawn(2)[0]))
        for layer in range(2):
            assert np.array_equal(log.model.get_layer_flat(layer), ref.get_layer_flat(layer))

    def test_same_seed_identical_logs(self):
        ds = make_gaussian_blobs(n_samples=100, in_dim=5, n_classes=3, seed=10)
        cfg = TrainConfig(
            optimizer="newton", steps=3, batch_size=24, epsilon_reg=0.5, seed=21,
            fd_step=0.05,
        )
        log1 = train(cfg, ds, layer_sizes=(5, 4, 3))
        log2 = train(cfg, ds, layer_sizes=(5, 4, 3))
        assert [r.loss for r in log1.records] == [r.loss for r in log2.records]
        assert [r.accuracy for r in log1.records] == [r.accuracy for r in log2.records]
        assert [r.cumulative_billed for r in log1.records] == [
            r.cumulative_billed for r in log2.records
        ]
        for layer in range(log1.model.n_layers):
            assert np.array_equal(
                log1.model.get_layer_flat(layer), log2.model.get_layer_flat(layer)
            )

    def test_target_loss_stops_early(self):
        ds = make_gaussian_blobs(n_samples=100, in_dim=5, n_classes=3, seed=11)
        cfg = TrainConfig(
            optimizer="sgd", learning_rate=0.3, steps=200, batch_size=32,
            target_loss=1.0, seed=5,
        )
        log = train(cfg, ds, layer_sizes=(5, 4, 3))
        assert len(log.records) < 200
        assert log.records[-1].loss <= 1.0
        assert all(r.loss > 1.0 for r in log.records[:-1])

    def test_raw_hessian_hook_sees_every_layer(self):
        ds = make_gaussian_blobs(n_samples=60, in_dim=4, n_classes=2, seed=12)
        seen = []
        cfg = TrainConfig(optimizer="newton", steps=2, batch_size=16, epsilon_reg=0.5,
                          seed=6, fd_step=0.05)
        train(cfg, ds, layer_sizes=(4, 3, 2), raw_hessian_hook=lambda s, l, H: seen.append((s, l, H.n)))
        assert seen == [(0, 0, 4 * 3 + 3), (0, 1, 3 * 2 + 2), (1, 0, 15), (1, 1, 8)]
