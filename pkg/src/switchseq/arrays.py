"""Azimuth array responses in effective-aperture (EADF) form.

Each antenna's response is a trigonometric polynomial in azimuth::

    b_m(phi) = sum_{k=-K..K} coeffs[m, k + K] * exp(1j * k * phi)

so patterns are 2*pi periodic by construction and derivatives are exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InsufficientSamplesError, LoadError, ValidationError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class Eadf:
    """Fourier-mode array description, one row of ``2K+1`` modes per antenna."""

    coeffs: np.ndarray
    fit_error: float | None = field(default=None, compare=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[1] % 2 != 1:
            raise ValidationError("coeffs", "must be an M x (2K+1) matrix", c.shape)
        if not np.all(np.isfinite(c)):
            raise ValidationError("coeffs", "all coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def num_antennas(self) -> int:
        return self.coeffs.shape[0]

    @property
    def max_mode(self) -> int:
        return (self.coeffs.shape[1] - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        K = self.max_mode
        return np.arange(-K, K + 1)

    def __add__(self, other: "Eadf") -> "Eadf":
        if self.coeffs.shape != other.coeffs.shape:
            raise ValidationError("other", "Eadf shapes must match", other.coeffs.shape)
        return Eadf(self.coeffs + other.coeffs)

    def equals(self, other: "Eadf") -> bool:
        return self.coeffs.shape == other.coeffs.shape and np.array_equal(self.coeffs, other.coeffs)

    def to_dict(self) -> dict:
        return {
            "num_antennas": self.num_antennas,
            "max_mode": self.max_mode,
            "coeffs": [[[float(z.real), float(z.imag)] for z in row] for row in self.coeffs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Eadf":
        coeffs = np.array([[complex(re, im) for re, im in row] for row in d["coeffs"]], dtype=complex)
        if coeffs.shape != (d["num_antennas"], 2 * d["max_mode"] + 1):
            raise ValidationError(
                "coeffs", "shape disagrees with num_antennas/max_mode", coeffs.shape
            )
        return cls(coeffs)


def _mode_phasors(modes, phi):
    phi = np.remainder(np.asarray(phi, dtype=float), TWO_PI)
    return np.exp(1j * np.multiply.outer(phi, modes))


def steering(eadf: Eadf, phi):
    """Array response at azimuth ``phi`` (radians).

    Scalar ``phi`` gives a length-M vector; an array of angles gives shape
    ``phi.shape + (M,)``.
    """
    return _mode_phasors(eadf.modes, phi) @ eadf.coeffs.T


def steering_derivative(eadf: Eadf, phi):
    """d/dphi of :func:`steering`, same shape conventions."""
    modes = eadf.modes
    return (_mode_phasors(modes, phi) * (1j * modes)) @ eadf.coeffs.T


def eadf_from_samples(pattern, max_mode: int) -> Eadf:
    """Fit an EADF to patterns sampled on the uniform grid ``2*pi*n/N``.

    Parameters
    ----------
    pattern : complex array (M, N)
        Row m holds antenna m sampled at ``phi_n = 2*pi*n/N``.
    max_mode : int
        Truncation order K; requires ``N >= 2K+1``.

    Returns
    -------
    Eadf
        ``fit_error`` holds the max abs reconstruction error on the grid.
    """
    pattern = np.atleast_2d(np.asarray(pattern, dtype=complex))
    n_az = pattern.shape[1]
    if max_mode < 0:
        raise ValidationError("max_mode", "must be non-negative", max_mode)
    if n_az < 2 * max_mode + 1:
        raise InsufficientSamplesError(
            "pattern", f"need at least 2K+1={2 * max_mode + 1} azimuth samples", n_az
        )
    spec = np.fft.fft(pattern, axis=1) / n_az
    modes = np.arange(-max_mode, max_mode + 1)
    eadf = Eadf(spec[:, modes % n_az])
    grid = TWO_PI * np.arange(n_az) / n_az
    err = float(np.max(np.abs(steering(eadf, grid).T - pattern)))
    return Eadf(eadf.coeffs, fit_error=err)


def _element_gain(delta, directivity):
    # cardioid-power element pointing outward along its ring position
    if directivity == 0:
        return 1.0
    return ((1.0 + np.cos(delta)) / 2.0) ** directivity


def _perturbation(num, gain_sigma, seed):
    if not gain_sigma:
        return np.ones(num, dtype=complex)
    rng = np.random.default_rng(seed)
    return 1.0 + gain_sigma * (rng.standard_normal(num) + 1j * rng.standard_normal(num)) / np.sqrt(2)


def synthesize_uca(
    num_antennas: int,
    radius: float,
    max_mode: int | None = None,
    *,
    directivity: int = 0,
    gain_sigma: float = 0.0,
    seed: int | None = None,
) -> Eadf:
    """Uniform circular array from the analytic far-field phase model.

    ``radius`` is in carrier wavelengths. ``directivity`` is the integer
    exponent q of an outward-facing ``((1+cos)/2)**q`` element pattern
    (0 keeps isotropic, pure-phase elements). ``gain_sigma`` adds seeded
    complex per-antenna gain errors.
    """
    if num_antennas < 1:
        raise ValidationError("num_antennas", "must be >= 1", num_antennas)
    if radius < 0:
        raise ValidationError("radius", "must be >= 0", radius)
    if directivity < 0 or int(directivity) != directivity:
        raise ValidationError("directivity", "must be a non-negative integer", directivity)
    K = 2 * num_antennas if max_mode is None else max_mode
    n_az = 4 * (K + 1)
    phi = TWO_PI * np.arange(n_az) / n_az
    pos = TWO_PI * np.arange(num_antennas) / num_antennas
    delta = phi[None, :] - pos[:, None]
    pattern = np.exp(1j * TWO_PI * radius * np.cos(delta)) * _element_gain(delta, directivity)
    pattern *= _perturbation(num_antennas, gain_sigma, seed)[:, None]
    return eadf_from_samples(pattern, K)


def synthesize_ula(
    num_antennas: int,
    spacing: float = 0.5,
    max_mode: int | None = None,
    *,
    directivity: int = 0,
) -> Eadf:
    """Uniform linear array along the y axis, broadside at phi = 0.

    Elements share one ``((1+cos phi)/2)**q`` pattern. With q = 0 the array
    has the usual front/back ambiguity ``b(phi) == b(pi - phi)``.
    """
    if num_antennas < 1:
        raise ValidationError("num_antennas", "must be >= 1", num_antennas)
    y = spacing * (np.arange(num_antennas) - (num_antennas - 1) / 2.0)
    if max_mode is None:
        max_mode = int(np.ceil(TWO_PI * np.max(np.abs(y)))) + 12 + directivity
    n_az = 4 * (max_mode + 1)
    phi = TWO_PI * np.arange(n_az) / n_az
    pattern = np.exp(1j * TWO_PI * np.outer(y, np.sin(phi))) * _element_gain(phi, directivity)
    return eadf_from_samples(pattern, max_mode)


def save_eadf(path, eadf: Eadf) -> None:
    Path(path).write_text(json.dumps(eadf.to_dict(), indent=1) + "\n")


def load_eadf(path) -> Eadf:
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise LoadError(path, exc) from exc
    return Eadf.from_dict(d)
