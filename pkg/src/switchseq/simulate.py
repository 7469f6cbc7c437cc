"""Synthetic observations: specular paths plus white circular Gaussian noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CannotScaleError, ValidationError
from .sounding import PathSet, Sounder, signal


@dataclass(frozen=True)
class NoiseModel:
    sigma2: float = 1.0

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValidationError("sigma2", "noise power must be > 0", self.sigma2)


def complex_noise(n: int, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    return np.sqrt(sigma2 / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def synth(sounder: Sounder, paths: PathSet, noise: NoiseModel | float | None,
          rng: np.random.Generator | int | None = None) -> np.ndarray:
    """y = s(paths) + n; ``noise=None`` gives the noiseless signal."""
    s = signal(sounder, paths)
    if noise is None:
        return s
    sigma2 = noise.sigma2 if isinstance(noise, NoiseModel) else NoiseModel(float(noise)).sigma2
    rng = np.random.default_rng(rng)
    return s + complex_noise(s.size, sigma2, rng)


def snr(sounder: Sounder, paths: PathSet, sigma2: float) -> float:
    s = signal(sounder, paths)
    return float(np.vdot(s, s).real / sigma2)


def scale_to_snr(sounder: Sounder, paths: PathSet, noise: NoiseModel | float, snr_db: float) -> PathSet:
    """Rescale all weights by one positive factor so that |s|^2 / sigma2 hits the target."""
    sigma2 = noise.sigma2 if isinstance(noise, NoiseModel) else float(noise)
    power = snr(sounder, paths, 1.0)
    if not power > 0:
        raise CannotScaleError("signal has zero energy, cannot scale to a target SNR")
    target = 10.0 ** (snr_db / 10.0) * sigma2
    return paths.with_gamma(paths.gamma * np.sqrt(target / power))
