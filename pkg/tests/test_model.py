"""Test the domain types, dynamics operators and spectral metrics."""

import sys
import os

import numpy as np
import pytest
from scipy.linalg import expm

# Add the app directory to the path so we can import our modules
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from app.model.dynamics import (
    IdentityDynamics,
    LinearSecondOrderDynamics,
    adjoint_mismatch,
    linear_second_order_step,
    second_order_propagator,
)
from app.model.metrics import spectral_angle, spectral_angle_matrix, spectral_rmse
from app.model.types import (
    AbundanceMatrix,
    AugmentedState,
    EndmemberMatrix,
    ImageSequence,
    SpectralSeries,
    Spectrum,
)


def test_values_are_frozen_copies():
    """Constructors copy and freeze their arrays."""
    print("🧊 Testing frozen value types...")
    raw = np.array([0.1, 0.2, 0.3])
    spectrum = Spectrum(raw)
    raw[0] = 9.0
    assert spectrum.values[0] == 0.1
    with pytest.raises(ValueError):
        spectrum.values[0] = 1.0
    assert EndmemberMatrix(np.ones((4, 2))).n_endmembers == 2
    with pytest.raises(ValueError):
        Spectrum([0.1, np.nan])


def test_abundance_constraints():
    print("📐 Testing abundance simplex checks...")
    ok = AbundanceMatrix(np.array([[0.25, 1.0], [0.75, 0.0]]))
    assert ok.n_pixels == 2
    with pytest.raises(ValueError, match="negative"):
        AbundanceMatrix(np.array([[1.1, 0.5], [-0.1, 0.5]]))
    with pytest.raises(ValueError, match="sum"):
        AbundanceMatrix(np.array([[0.5, 0.5], [0.4, 0.5]]))
    assert np.array_equal(ok.permuted([1, 0]).entries, ok.entries[[1, 0]])


def test_series_and_sequences():
    print("🎞️  Testing series and image sequences...")
    frames = np.arange(24, dtype=float).reshape(2, 4, 3)
    series = SpectralSeries(frames)
    assert (series.n_frames, series.bands, series.n_endmembers) == (2, 4, 3)
    assert np.array_equal(series.endmember(1), frames[:, :, 1])
    assert np.array_equal(series.timestamps, [0.0, 1.0])
    assert SpectralSeries(np.zeros((0, 4, 3))).n_frames == 0
    with pytest.raises(ValueError, match="increasing"):
        SpectralSeries(frames, timestamps=[1.0, 1.0])
    with pytest.raises(ValueError):
        SpectralSeries.from_matrices([np.ones((4, 3)), np.ones((4, 2))])

    sequence = ImageSequence(np.ones((3, 4, 5)), noise_sigma=[0.1, 0.2, 0.3])
    assert sequence.slice(1, 3).n_frames == 2
    assert np.array_equal(sequence.slice(1, 3).noise_sigma, [0.2, 0.3])


def test_augmented_state():
    state = AugmentedState([1.0, 2.0])
    assert np.array_equal(state.velocity, [0.0, 0.0])
    assert np.array_equal(AugmentedState.from_array(state.as_array()).position, state.position)
    with pytest.raises(ValueError):
        AugmentedState([1.0, 2.0], [0.0])


def test_propagator_matches_matrix_exponential():
    """Closed-form propagator against scipy's expm for all three regimes."""
    print("⏱️  Testing second-order propagator...")
    for beta in (-0.1, -2.5, 0.0, 0.3):
        for dt in (0.0, 0.5, 1.0, 3.0):
            expected = expm(dt * np.array([[0.0, 1.0], [beta, 0.0]]))
            assert np.allclose(second_order_propagator(beta, dt), expected, atol=1e-12, rtol=1e-12)
    with pytest.raises(ValueError):
        second_order_propagator(-0.1, -1.0)
    with pytest.raises(ValueError):
        second_order_propagator(float("nan"), 1.0)


def test_linear_second_order_step():
    rng = np.random.default_rng(0)
    state = AugmentedState(rng.normal(size=5), rng.normal(size=5))
    nxt = linear_second_order_step(state, -0.1, 1.0)
    expected = expm(np.array([[0.0, 1.0], [-0.1, 0.0]])) @ state.as_array()
    assert np.allclose(nxt.as_array(), expected, atol=1e-12)
    assert np.array_equal(linear_second_order_step(state, -0.1, 0.0).as_array(), state.as_array())


def test_offset_dynamics_layout():
    """The offset row is carried unchanged and added to the observed spectrum."""
    dynamics = LinearSecondOrderDynamics(-0.1, 1.0, estimate_offset=True)
    state = dynamics.lift(np.array([0.4, 0.5]), np.array([0.01, -0.02]))
    assert np.array_equal(state[0], [0.0, 0.0])
    assert np.array_equal(dynamics.position(state), [0.4, 0.5])
    later = dynamics.step(dynamics.step(state))
    assert np.array_equal(later[2], state[2])
    assert dynamics.descriptor["estimate_offset"] is True

    plain = LinearSecondOrderDynamics(-0.1, 1.0)
    assert plain.state_components == 2
    assert np.array_equal(plain.position(plain.lift(np.array([0.3]))), [0.3])
    with pytest.raises(ValueError):
        plain.step(np.ones((3, 2)))


def test_identity_and_adjoint_consistency():
    print("🔁 Testing adjoint consistency...")
    rng = np.random.default_rng(1)
    identity = IdentityDynamics()
    state = rng.normal(size=(1, 6))
    assert np.array_equal(identity.step(state), state)
    for dynamics in (identity, LinearSecondOrderDynamics(-0.1), LinearSecondOrderDynamics(0.2, 0.5, True)):
        k = dynamics.state_components
        x = rng.normal(size=(k, 6))
        gap = adjoint_mismatch(dynamics, x, rng.normal(size=(k, 6)), rng.normal(size=(k, 6)))
        assert gap < 1e-8
    dynamics = LinearSecondOrderDynamics(-0.1, 2.0)
    assert np.allclose(dynamics.power(3), np.linalg.matrix_power(dynamics.transition, 3))


def test_spectral_metrics():
    print("📏 Testing spectral metrics...")
    assert spectral_rmse(np.zeros(4), np.ones(4)) == pytest.approx(1.0)
    assert spectral_rmse(Spectrum([0.2, 0.4]), Spectrum([0.2, 0.4])) == 0.0
    with pytest.raises(ValueError):
        spectral_rmse(np.zeros(3), np.zeros(4))

    a = np.array([0.1, 0.5, 0.3])
    assert spectral_angle(a, 2.0 * a) < 1e-7
    assert spectral_angle([1.0, 0.0], [0.0, 1.0]) == pytest.approx(np.pi / 2)
    with pytest.raises(ValueError):
        spectral_angle(np.zeros(3), a)

    angles = spectral_angle_matrix(np.eye(3), np.eye(3)[:, [2, 0, 1]])
    assert np.allclose(np.diag(angles[:, [1, 2, 0]]), 0.0)


def main():
    """Run all model tests."""
    print("🧪 Multitemporal Unmixing - Model Tests")
    print("=" * 60)

    test_values_are_frozen_copies()
    test_abundance_constraints()
    test_series_and_sequences()
    test_augmented_state()
    test_propagator_matches_matrix_exponential()
    test_linear_second_order_step()
    test_offset_dynamics_layout()
    test_identity_and_adjoint_consistency()
    test_spectral_metrics()

    print("\n" + "=" * 60)
    print("✅ Model tests completed!")


if __name__ == "__main__":
    main()
