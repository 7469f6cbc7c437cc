"""Reference array and channel scenarios used by the experiments and the CLI."""

from __future__ import annotations

import numpy as np

from .arrays import Eadf, synthesize_uca
from .errors import ValidationError
from .sounding import PathSet, SoundingConfig

REF_RADIUS = 0.5
REF_MAX_MODE = 16
REF_DIRECTIVITY = 1


def reference_array(num_antennas: int = 8) -> Eadf:
    """8-element UCA of outward-facing cardioid elements, half a wavelength radius."""
    return synthesize_uca(num_antennas, REF_RADIUS, REF_MAX_MODE, directivity=REF_DIRECTIVITY)


def default_config() -> SoundingConfig:
    return SoundingConfig()


def _paths(rows):
    """rows of (tau_ns, phi_t_deg, phi_r_deg, nu_hz, gain_db)."""
    r = np.array(rows, dtype=float)
    return PathSet(r[:, 0] * 1e-9, np.radians(r[:, 1]), np.radians(r[:, 2]), r[:, 3],
                   10.0 ** (r[:, 4] / 20.0) + 0j)


SCENARIOS = {
    # one path, Doppler well beyond 1/(2 T0)
    "snapshot1": [(601.1, 11.5, 59.6, 4032.3, 0.0)],
    # one path, low Doppler
    "snapshot2": [(1117.3, 21.3, 160.0, 80.6, 0.0)],
    "two-path": [
        (646.2, 67.81, -59.33, 3225.8, -13.13),
        (1203.7, -60.15, -123.79, 3217.7, -18.82),
    ],
}


def scenario_paths(name: str) -> PathSet:
    if name not in SCENARIOS:
        raise ValidationError("scenario", f"unknown preset, choose from {sorted(SCENARIOS)}", name)
    return _paths(SCENARIOS[name])
