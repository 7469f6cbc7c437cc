import numpy as np
import pytest

from switchseq.errors import CannotScaleError, ValidationError
from switchseq.presets import scenario_paths
from switchseq.simulate import NoiseModel, scale_to_snr, snr, synth
from switchseq.sounding import PathSet, signal


def test_noiseless(uniform_sounder):
    p = scenario_paths("snapshot2")
    np.testing.assert_array_equal(synth(uniform_sounder, p, None), signal(uniform_sounder, p))


def test_pure_noise_variance(uniform_sounder):
    y = synth(uniform_sounder, PathSet.empty(), NoiseModel(2.5), 11)
    assert y.size >= 10_000
    assert abs(np.mean(np.abs(y) ** 2) / 2.5 - 1) < 0.05


def test_noise_whiteness(uniform_sounder):
    y = synth(uniform_sounder, PathSet.empty(), 1.0, 12)
    n = y.size
    r0 = np.vdot(y, y).real
    for lag in (1, 2, 64, 512):
        assert abs(np.vdot(y[:-lag], y[lag:])) / r0 < 3 / np.sqrt(n)


def test_deterministic(uniform_sounder):
    p = scenario_paths("snapshot1")
    np.testing.assert_array_equal(synth(uniform_sounder, p, 1.0, 5), synth(uniform_sounder, p, 1.0, 5))
    assert not np.array_equal(synth(uniform_sounder, p, 1.0, 5), synth(uniform_sounder, p, 1.0, 6))


def test_scale_to_snr(uniform_sounder):
    p = scenario_paths("two-path")
    q = scale_to_snr(uniform_sounder, p, 0.3, 27.0)
    assert snr(uniform_sounder, q, 0.3) == pytest.approx(10**2.7, rel=1e-9)
    ratio = q.gamma / p.gamma
    np.testing.assert_allclose(ratio, ratio[0])
    assert ratio[0].real > 0 and abs(ratio[0].imag) < 1e-15
    r = p.with_gamma(p.gamma * np.sqrt(2))
    assert snr(uniform_sounder, r, 1.0) == pytest.approx(2 * snr(uniform_sounder, p, 1.0))


def test_scale_zero_signal(uniform_sounder):
    p = scenario_paths("snapshot1").with_gamma([0.0])
    with pytest.raises(CannotScaleError):
        scale_to_snr(uniform_sounder, p, 1.0, 10.0)


def test_noise_model_validated():
    with pytest.raises(ValidationError):
        NoiseModel(0.0)
