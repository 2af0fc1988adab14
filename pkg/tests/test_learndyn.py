"""Test the dynamics networks, teacher-forced training, rollouts and checkpoints."""

import sys
import os
import tempfile
from pathlib import Path

import numpy as np
import pytest
import torch

# Add the app directory to the path so we can import our modules
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from app.errors import DatasetError, NumericalError
from app.learndyn.checkpoint import MAGIC, load_checkpoint, read_checkpoint_header, save_checkpoint
from app.learndyn.networks import (
    ARCHITECTURES,
    ArchitectureConfig,
    EulerNet,
    MlpBlock,
    RK4Net,
    build_model,
    euler_step,
    mlp_forward,
    rk4_step,
)
from app.learndyn.training import (
    TrainConfig,
    backprop,
    flat_parameters,
    loss,
    predict_test,
    rollout,
    set_flat_parameters,
    train,
)
from app.model.types import SpectralSeries, Spectrum
from tests.fixtures.sample_data import constant_series, random_series

SMALL = ArchitectureConfig(hidden=[5], h=0.5, lstm_input_width=6, lstm_hidden=3)


def _linear_block(weight) -> MlpBlock:
    """Single linear layer F(s) = W s with zero bias."""
    weight = np.atleast_2d(np.asarray(weight, dtype=np.float64))
    block = MlpBlock(weight.shape[0], hidden=())
    with torch.no_grad():
        block.layers[0].weight.copy_(torch.as_tensor(weight))
        block.layers[0].bias.zero_()
    return block


def _zeroed(model):
    with torch.no_grad():
        for p in model.parameters():
            p.zero_()
    return model


def test_parameter_counts():
    print("🔢 Testing parameter counts...")
    counts = {arch: build_model(arch, 50, seed=0).n_parameters for arch in ARCHITECTURES}
    assert counts == {"euler": 20250, "rk4": 20250, "lstm": 19230}
    assert max(counts.values()) <= 1.5 * min(counts.values())
    with pytest.raises(ValueError):
        build_model("gru", 50)


def test_mlp_forward():
    print("🧠 Testing MLP forward pass...")
    rng = np.random.default_rng(0)
    block = _zeroed(MlpBlock(4, hidden=[3]))
    assert np.array_equal(mlp_forward(block, rng.uniform(size=4)), np.zeros(4))

    identity = _linear_block(np.eye(4))
    x = rng.uniform(size=(3, 4))
    assert np.array_equal(mlp_forward(identity, x), x)
    out = mlp_forward(identity, Spectrum(x[0]))
    assert isinstance(out, Spectrum)
    assert np.array_equal(out.values, x[0])

    torch.manual_seed(1)
    block = MlpBlock(4, hidden=[6, 5])
    weights = [(l.weight.detach().numpy(), l.bias.detach().numpy()) for l in block.layers]
    h = x
    for W, b in weights[:-1]:
        h = np.maximum(h @ W.T + b, 0.0)
    expected = h @ weights[-1][0].T + weights[-1][1]
    assert np.allclose(mlp_forward(block, x), expected, atol=1e-14)
    assert block.layer_sizes == [4, 6, 5, 4]

    with pytest.raises(ValueError):
        mlp_forward(block, np.ones(5))


def test_euler_step():
    print("➡️  Testing Euler step...")
    s = np.array([0.3, -0.7, 1.2])
    assert np.array_equal(euler_step(EulerNet(_zeroed(MlpBlock(3, [4])), h=0.3), s), s)
    lam, h = -0.4, 0.25
    net = EulerNet(_linear_block(lam * np.eye(3)), h)
    assert np.allclose(euler_step(net, s), (1 + h * lam) * s, atol=1e-15)
    assert np.array_equal(euler_step(EulerNet(MlpBlock(3, [4]), 0.0), s), s)
    with pytest.raises(ValueError):
        EulerNet(MlpBlock(3, [4]), -0.1)


def test_rk4_step_matches_exponential():
    print("🌀 Testing RK4 step...")
    s = np.array([1.0, 2.0])
    lam, h = -1.0, 0.01
    net = RK4Net(_linear_block(lam * np.eye(2)), h)
    z = h * lam
    assert np.allclose(rk4_step(net, s), (1 + z + z**2 / 2 + z**3 / 6 + z**4 / 24) * s, atol=1e-14)
    assert np.all(np.abs(rk4_step(net, s) - np.exp(z) * s) < 1e-11)


def test_integrator_convergence_orders():
    """Global error at t = 1 for s' = -s shrinks like h (Euler) and h^4 (RK4)."""
    print("📉 Testing convergence orders...")
    steps = np.array([0.2, 0.1, 0.05, 0.025])
    for cls, order, tolerance in ((EulerNet, 1.0, 0.1), (RK4Net, 4.0, 0.2)):
        errors = []
        for h in steps:
            net = cls(_linear_block([[-1.0]]), float(h))
            final = rollout(net, np.array([1.0]), int(round(1.0 / h)))[-1, 0]
            errors.append(abs(final - np.exp(-1.0)))
        slope = np.polyfit(np.log(steps), np.log(errors), 1)[0]
        assert abs(slope - order) < tolerance, (cls.architecture, slope)


def test_rollout():
    print("🔁 Testing rollout...")
    rng = np.random.default_rng(2)
    s0 = rng.uniform(size=3)
    net = EulerNet(MlpBlock(3, [4]), 0.5)
    assert np.array_equal(rollout(net, s0, 0), s0[None])
    with pytest.raises(ValueError):
        rollout(net, s0, -1)

    still = EulerNet(_zeroed(MlpBlock(3, [4])), 0.5)
    assert np.array_equal(rollout(still, s0, 5), np.repeat(s0[None], 6, axis=0))

    W = 0.3 * rng.standard_normal((3, 3))
    linear = EulerNet(_linear_block(W), 0.2)
    path = rollout(linear, s0, 7)
    for n in range(8):
        expected = np.linalg.matrix_power(np.eye(3) + 0.2 * W, n) @ s0
        assert np.allclose(path[n], expected, atol=1e-12)
    assert np.array_equal(path[1], euler_step(linear, s0))

    batch = rollout(build_model("lstm", 3, SMALL, seed=0), rng.uniform(size=(2, 3)), 4)
    assert batch.shape == (5, 2, 3)


def test_loss():
    print("📏 Testing teacher-forced loss...")
    still = EulerNet(_zeroed(MlpBlock(4, [3])), 1.0)
    assert loss(still, constant_series(L=4)) == 0.0

    series = random_series(L=4, P=2, T=6)
    net = build_model("euler", 4, SMALL, seed=3)
    expected = 0.0
    for t in range(series.n_frames - 1):
        pred = euler_step(net, series.frames[t].T)
        expected += float(np.sum((pred - series.frames[t + 1].T) ** 2))
    assert loss(net, series) == pytest.approx(expected, rel=1e-12)

    with pytest.raises(ValueError):
        loss(net, series.slice(0, 1))
    with pytest.raises(ValueError):
        loss(net, random_series(L=5))


def _closest_kink(net, series) -> float:
    """Smallest |pre-activation| seen by any rectifier while evaluating the loss."""
    block = getattr(net, "block", None)
    if block is None:
        return np.inf
    closest = [np.inf]

    def record(_module, _inputs, output):
        closest[0] = min(closest[0], float(output.detach().abs().min()))

    handles = [layer.register_forward_hook(record) for layer in block.layers[:-1]]
    try:
        loss(net, series)
    finally:
        for handle in handles:
            handle.remove()
    return closest[0]


def test_backprop_matches_finite_differences():
    """Central differences agree with backprop on 20 random instances per architecture."""
    print("🧮 Testing backpropagation...")
    eps = 1e-6
    for arch in ARCHITECTURES:
        for instance in range(20):
            rng = np.random.default_rng(1000 + instance)
            net = build_model(arch, 3, SMALL, seed=instance)
            series = random_series(L=3, P=2, T=5, seed=instance)
            # shift the inputs until no rectifier sits within reach of the perturbation
            while _closest_kink(net, series) < 1e-3:
                series = SpectralSeries(series.frames + 1e-2 * rng.standard_normal(series.frames.shape))
            theta = flat_parameters(net)
            grad = backprop(net, series)
            assert grad.shape == theta.shape
            direction = rng.standard_normal(theta.shape)
            direction /= np.linalg.norm(direction)
            set_flat_parameters(net, theta + eps * direction)
            up = loss(net, series)
            set_flat_parameters(net, theta - eps * direction)
            down = loss(net, series)
            set_flat_parameters(net, theta)
            numeric = (up - down) / (2 * eps)
            analytic = float(grad @ direction)
            scale = 1e-8 * max(1.0, np.linalg.norm(grad))
            assert numeric == pytest.approx(analytic, rel=1e-5, abs=scale), (arch, instance)


def test_backprop_zero_cases():
    still = EulerNet(_zeroed(MlpBlock(4, [3])), 1.0)
    assert np.array_equal(backprop(still, constant_series(L=4)), np.zeros(still.n_parameters))

    # every hidden unit is switched off, so the first layer receives nothing
    net = EulerNet(MlpBlock(4, [3]), 1.0)
    with torch.no_grad():
        net.block.layers[0].bias.fill_(-100.0)
    grad = backprop(net, random_series(L=4))
    first = net.block.layers[0].weight.numel() + net.block.layers[0].bias.numel()
    assert np.array_equal(grad[:first], np.zeros(first))
    assert np.any(grad[first:] != 0)


def test_train():
    print("🏋️ Testing training...")
    series = random_series(L=4, P=2, T=6, seed=6)
    frozen = build_model("euler", 4, SMALL, seed=0)
    before = flat_parameters(frozen)
    result = train(frozen, series, TrainConfig(epochs=5, lr=0.0, train_frames=6))
    assert np.array_equal(flat_parameters(frozen), before)
    assert np.all(result.loss_history == result.loss_history[0])

    runs = []
    for _ in range(2):
        net = build_model("rk4", 4, SMALL, seed=0)
        runs.append((train(net, series, TrainConfig(epochs=20, seed=2, train_frames=6)), flat_parameters(net)))
    assert np.array_equal(runs[0][0].loss_history, runs[1][0].loss_history)
    assert np.array_equal(runs[0][1], runs[1][1])

    net = build_model("euler", 4, SMALL, seed=1)
    result = train(net, series, TrainConfig(epochs=200, lr=1e-2, train_frames=6))
    assert result.final_loss < result.loss_history[0]
    assert len(result.loss_history) == 200

    with pytest.raises(ValueError):
        train(build_model("euler", 4, SMALL), series, TrainConfig(epochs=1, train_frames=7))


def test_train_failures_and_fixed_points():
    series = random_series(L=4, P=2, T=6, seed=7)
    broken = build_model("euler", 4, SMALL, seed=0)
    with torch.no_grad():
        broken.block.layers[0].weight[0, 0] = float("nan")
    with pytest.raises(NumericalError, match="epoch 0"):
        train(broken, series, TrainConfig(epochs=3, train_frames=6))

    still = EulerNet(_zeroed(MlpBlock(4, [3])), 1.0)
    result = train(still, constant_series(L=4, T=6), TrainConfig(epochs=10, lr=0.1, train_frames=6))
    assert np.array_equal(flat_parameters(still), np.zeros(still.n_parameters))
    assert result.final_loss == 0.0


def test_predict_test():
    print("🔮 Testing test-frame prediction...")
    rng = np.random.default_rng(8)
    net = EulerNet(_linear_block(0.2 * rng.standard_normal((4, 4))), 0.5)
    S0 = rng.uniform(size=(4, 2))
    truth = SpectralSeries(rollout(net, S0.T, 9).transpose(0, 2, 1))

    empty = predict_test(net, truth.frames[5], 0)
    assert empty.frames.shape == (0, 4, 2)

    predicted = predict_test(net, truth.frames[5], 4, timestamps=truth.timestamps[6:])
    assert np.allclose(predicted.frames, truth.frames[6:], atol=1e-12)
    assert np.array_equal(predicted.timestamps, truth.timestamps[6:])

    lstm = build_model("lstm", 4, SMALL, seed=0)
    warm = predict_test(lstm, truth.frames[5], 3, history=truth.slice(0, 6))
    cold = predict_test(lstm, truth.frames[5], 3)
    assert warm.frames.shape == (3, 4, 2)
    assert not np.array_equal(warm.frames, cold.frames)


def test_checkpoint_roundtrip():
    print("💾 Testing checkpoints...")
    with tempfile.TemporaryDirectory() as tmp:
        for arch in ARCHITECTURES:
            net = build_model(arch, 5, SMALL, seed=9)
            path = save_checkpoint(net, Path(tmp) / "nets" / f"{arch}.ckpt", extra={"material": "leaf"})
            loaded = load_checkpoint(path)
            assert loaded.architecture == arch
            assert np.array_equal(flat_parameters(loaded), flat_parameters(net))
            header = read_checkpoint_header(path)
            assert header["model"] == net.descriptor()
            assert header["extra"] == {"material": "leaf"}
            assert path.read_bytes().startswith(MAGIC)


def test_checkpoint_rejects_corrupt_files():
    with tempfile.TemporaryDirectory() as tmp:
        path = save_checkpoint(build_model("euler", 3, SMALL, seed=0), Path(tmp) / "euler.ckpt")
        data = path.read_bytes()

        bad = Path(tmp) / "bad.ckpt"
        bad.write_bytes(b"not a checkpoint")
        with pytest.raises(DatasetError):
            load_checkpoint(bad)

        bad.write_bytes(data[:-8])
        with pytest.raises(DatasetError):
            load_checkpoint(bad)

        bad.write_bytes(data + b"\x00" * 8)
        with pytest.raises(DatasetError):
            load_checkpoint(bad)

        with pytest.raises(DatasetError):
            load_checkpoint(Path(tmp) / "missing.ckpt")


def main():
    """Run all learned-dynamics tests."""
    print("🧪 Multitemporal Unmixing - Learned Dynamics Tests")
    print("=" * 60)

    test_parameter_counts()
    test_mlp_forward()
    test_euler_step()
    test_rk4_step_matches_exponential()
    test_integrator_convergence_orders()
    test_rollout()
    test_loss()
    test_backprop_matches_finite_differences()
    test_backprop_zero_cases()
    test_train()
    test_train_failures_and_fixed_points()
    test_predict_test()
    test_checkpoint_roundtrip()
    test_checkpoint_rejects_corrupt_files()

    print("\n" + "=" * 60)
    print("✅ Learned dynamics tests completed!")


if __name__ == "__main__":
    main()
