"""MLP forward/backward, Adam, blobs task, and snapshot-emitting training."""

import numpy as np
import pytest

from rwckit import (
    AdamState,
    Mlp,
    MlpSpec,
    SyntheticTask,
    adam_step,
    load_run,
    make_blobs,
    train_run,
)
from rwckit.errors import LabelOutOfRangeError


def tiny_net(seed=0, hidden=(16,), input_dim=2, classes=3):
    spec = MlpSpec(input_dim=input_dim, num_classes=classes, hidden_dims=hidden)
    return Mlp(spec, np.random.default_rng(seed))


def flatten_params(model):
    return model.weights + model.biases


def numeric_gradient(model, X, y, h=1e-4):
    """Central finite differences of the loss over every parameter."""
    grads = []
    for param in flatten_params(model):
        grad = np.zeros_like(param)
        it = np.nditer(param, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            original = param[idx]
            param[idx] = original + h
            loss_plus, _, _ = model.loss_and_grads(X, y)
            param[idx] = original - h
            loss_minus, _, _ = model.loss_and_grads(X, y)
            param[idx] = original
            grad[idx] = (loss_plus - loss_minus) / (2 * h)
            it.iternext()
        grads.append(grad)
    return grads


class TestForward:
    def test_zero_weights_uniform_softmax(self):
        model = tiny_net()
        for w in model.weights:
            w[:] = 0.0
        for b in model.biases:
            b[:] = 0.0
        X = np.random.default_rng(1).standard_normal((4, 2))
        logits, _ = model.forward(X)
        np.testing.assert_array_equal(logits, 0.0)
        loss, _, _ = model.loss_and_grads(X, np.array([0, 1, 2, 0]))
        assert loss == pytest.approx(np.log(3.0), rel=1e-12)

    def test_single_linear_layer_identity(self):
        spec = MlpSpec(input_dim=2, num_classes=2, hidden_dims=(2,))
        model = Mlp(spec, np.random.default_rng(0))
        model.weights[0][:] = np.eye(2)
        model.biases[0][:] = 0.0
        model.weights[1][:] = np.eye(2)
        model.biases[1][:] = 0.0
        X = np.array([[3.0, 1.0]])
        logits, _ = model.forward(X)
        np.testing.assert_array_equal(logits, [[3.0, 1.0]])

    def test_input_width_checked(self):
        model = tiny_net()
        with pytest.raises(ValueError):
            model.forward(np.ones((2, 5)))

    def test_logits_finite(self):
        model = tiny_net(seed=3)
        X = np.random.default_rng(2).standard_normal((8, 2)) * 50
        logits, _ = model.forward(X)
        assert np.isfinite(logits).all()


class TestBackward:
    def test_uniform_logits_gradient_is_softmax_minus_onehot(self):
        model = tiny_net()
        for w in model.weights:
            w[:] = 0.0
        for b in model.biases:
            b[:] = 0.0
        X = np.random.default_rng(3).standard_normal((1, 2))
        _, _, grad_b = model.loss_and_grads(X, np.array([1]))
        # output bias gradient equals probs - onehot = 1/3 everywhere, -2/3 at y
        np.testing.assert_allclose(
            grad_b[-1], [1 / 3, 1 / 3 - 1, 1 / 3], atol=1e-12
        )

    def test_label_out_of_range(self):
        model = tiny_net()
        X = np.ones((2, 2))
        with pytest.raises(LabelOutOfRangeError):
            model.loss_and_grads(X, np.array([0, 3]))
        with pytest.raises(LabelOutOfRangeError):
            model.loss_and_grads(X, np.array([-1, 0]))

    def test_matches_finite_differences(self):
        # the full 2-16-3 sweep over 20 points runs in the acceptance suite
        rng = np.random.default_rng(6)
        for seed in range(100):
            model = tiny_net(seed=seed, hidden=(8,))
            X = rng.standard_normal((4, 2))
            y = rng.integers(0, 3, 4)
            # central differences need pre-activations clear of the ReLU kink
            _, (_, pre_acts) = model.forward(X)
            if min(float(np.abs(z).min()) for z in pre_acts[:-1]) <= 5e-3:
                continue
            _, grad_w, grad_b = model.loss_and_grads(X, y)
            numeric = numeric_gradient(model, X, y)
            analytic = grad_w + grad_b
            for a, n in zip(analytic, numeric):
                np.testing.assert_allclose(a, n, rtol=1e-5, atol=1e-8)
            return
        pytest.fail("no kink-free draw found")

    def test_duplicated_batch_same_gradient(self):
        model = tiny_net(seed=7)
        rng = np.random.default_rng(8)
        X = rng.standard_normal((5, 2))
        y = rng.integers(0, 3, 5)
        _, gw1, gb1 = model.loss_and_grads(X, y)
        _, gw2, gb2 = model.loss_and_grads(
            np.vstack([X, X]), np.concatenate([y, y])
        )
        for a, b in zip(gw1 + gb1, gw2 + gb2):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)

    def test_gradient_shapes_match_parameters(self):
        model = tiny_net(seed=9, hidden=(8, 4))
        X = np.random.default_rng(10).standard_normal((3, 2))
        _, grad_w, grad_b = model.loss_and_grads(X, np.array([0, 1, 2]))
        for g, p in zip(grad_w, model.weights):
            assert g.shape == p.shape
        for g, p in zip(grad_b, model.biases):
            assert g.shape == p.shape


class TestAdam:
    def test_first_step_is_signed_lr(self):
        state = AdamState(lr=0.001)
        param = np.array([1.0, -2.0, 3.0])
        grad = np.array([0.5, -0.25, 1.0])
        expected = param - 0.001 * grad / (np.abs(grad) + state.epsilon)
        adam_step([param], [grad], state)
        np.testing.assert_allclose(param, expected, rtol=1e-12)
        assert state.step_count == 1

    def test_zero_gradient_no_movement(self):
        state = AdamState(lr=0.01)
        param = np.array([1.0, 2.0])
        adam_step([param], [np.zeros(2)], state)
        np.testing.assert_array_equal(param, [1.0, 2.0])
        assert state.step_count == 1

    def test_zero_lr_no_movement(self):
        state = AdamState(lr=0.0)
        param = np.array([1.0, 2.0])
        adam_step([param], [np.array([5.0, -5.0])], state)
        np.testing.assert_array_equal(param, [1.0, 2.0])

    def test_shape_mismatch(self):
        state = AdamState()
        with pytest.raises(ValueError):
            adam_step([np.ones(2)], [np.ones(3)], state)

    def test_moments_decay(self):
        state = AdamState(lr=0.001)
        param = np.array([0.0])
        for _ in range(3):
            adam_step([param], [np.array([1.0])], state)
        assert state.step_count == 3
        assert state.m[0][0] == pytest.approx(1 - 0.9 ** 3)


class TestBlobs:
    def test_deterministic(self):
        task = SyntheticTask(num_classes=3, samples_per_class=10, input_dim=4,
                             seed=3)
        X1, y1 = make_blobs(task)
        X2, y2 = make_blobs(task)
        np.testing.assert_array_equal(X1, X2)
        np.testing.assert_array_equal(y1, y2)

    def test_shapes_and_label_range(self):
        task = SyntheticTask(num_classes=4, samples_per_class=5, input_dim=3,
                             seed=0)
        X, y = make_blobs(task)
        assert X.shape == (20, 3)
        assert set(y.tolist()) == {0, 1, 2, 3}

    def test_class_count_knob_changes_data(self):
        a = make_blobs(SyntheticTask(3, 5, 4, seed=1))[0]
        b = make_blobs(SyntheticTask(5, 5, 4, seed=1))[0]
        assert a.shape[0] != b.shape[0]


class TestTrainRun:
    def _quick_run(self, tmp_path, epochs=3, seed=1):
        task = SyntheticTask(num_classes=3, samples_per_class=40, input_dim=6,
                             seed=seed)
        spec = MlpSpec(input_dim=6, num_classes=3, hidden_dims=(16, 16))
        return train_run(task, spec, epochs=epochs, batch_size=16, seed=seed,
                         out_dir=tmp_path)

    def test_snapshot_count(self, tmp_path):
        manifest = self._quick_run(tmp_path, epochs=3)
        assert len(manifest.snapshot_paths) == 4  # init + 3 epochs

    def test_layer_naming_and_shapes(self, tmp_path):
        manifest = self._quick_run(tmp_path)
        snaps = load_run(manifest)
        names = snaps[0].layer_names
        assert names == [
            "layer0.weight", "layer0.bias",
            "layer1.weight", "layer1.bias",
            "layer2.weight", "layer2.bias",
        ]
        shapes = {t.name: t.shape for t in snaps[0].layers}
        assert shapes["layer0.weight"] == (6, 16)
        assert shapes["layer1.weight"] == (16, 16)
        assert shapes["layer2.weight"] == (16, 3)
        assert shapes["layer2.bias"] == (3,)

    def test_identical_seeds_byte_identical(self, tmp_path):
        m1 = self._quick_run(tmp_path / "a", seed=5)
        m2 = self._quick_run(tmp_path / "b", seed=5)
        for p1, p2 in zip(m1.resolved_paths(), m2.resolved_paths()):
            assert p1.read_bytes() == p2.read_bytes()

    def test_different_seed_differs(self, tmp_path):
        m1 = self._quick_run(tmp_path / "a", seed=5)
        m2 = self._quick_run(tmp_path / "b", seed=6)
        assert m1.resolved_paths()[1].read_bytes() != \
            m2.resolved_paths()[1].read_bytes()

    def test_manifest_records_hyperparameters(self, tmp_path):
        manifest = self._quick_run(tmp_path)
        hp = manifest.hyperparameters
        assert hp["lr"] == 0.001
        assert hp["optimizer"] == "adam"
        assert 0.0 <= hp["final_train_accuracy"] <= 1.0
        assert len(hp["epoch_mean_loss"]) == 3

    def test_loss_descent_on_separable_blobs(self, tmp_path):
        task = SyntheticTask(num_classes=3, samples_per_class=60, input_dim=8,
                             seed=2)
        spec = MlpSpec(input_dim=8, num_classes=3, hidden_dims=(32, 32))
        manifest = train_run(task, spec, epochs=25, batch_size=32, seed=2,
                             out_dir=tmp_path)
        losses = manifest.hyperparameters["epoch_mean_loss"]
        assert losses[-1] < 0.5 * losses[0]

    def test_f32_snapshot_dtype(self, tmp_path):
        task = SyntheticTask(num_classes=2, samples_per_class=8, input_dim=3,
                             seed=0)
        spec = MlpSpec(input_dim=3, num_classes=2, hidden_dims=(4,))
        manifest = train_run(task, spec, epochs=1, batch_size=4, seed=0,
                             out_dir=tmp_path, snapshot_dtype="f32")
        snaps = load_run(manifest)
        assert all(t.values.dtype == np.float32
                   for s in snaps for t in s.layers)
