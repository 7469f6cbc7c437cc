"""Correlation function and its evaluation on a 4-way (tau, phi_R, phi_T, nu) grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ambiguity import azimuth_grid
from ..arrays import steering
from ..errors import DegenerateArrayError, UnsupportedNoiseError, ValidationError
from ..sounding import (
    TWO_PI,
    Path,
    Sounder,
    SoundingConfig,
    as_tensor,
    basis_vector,
    freq_grid,
    rx_times,
)


def correlation(sounder: Sounder, mu: Path, y, sigma2: float = 1.0) -> float:
    """|b^H y|^2 / (sigma2 |b|^2) for a single path under white noise."""
    b = basis_vector(sounder, mu)
    nb = np.vdot(b, b).real
    if nb <= 0:
        raise DegenerateArrayError("basis vector has zero norm")
    return float(abs(np.vdot(b, y)) ** 2 / (sigma2 * nb))


@dataclass(frozen=True, eq=False)
class SearchGrid:
    """Delay, DoA, DoD and Doppler grid points (SI units, radians)."""

    tau: np.ndarray
    phi_r: np.ndarray
    phi_t: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        for name in ("tau", "phi_r", "phi_t", "nu"):
            a = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if a.size == 0:
                raise ValidationError(name, "search grid axis must be non-empty")
            object.__setattr__(self, name, a)

    @property
    def shape(self):
        return (self.tau.size, self.phi_r.size, self.phi_t.size, self.nu.size)

    @classmethod
    def default(cls, config: SoundingConfig, *, doppler_span: str = "rs", n_tau: int | None = None,
                n_rx: int = 64, n_tx: int = 64, n_nu: int | None = None) -> "SearchGrid":
        """Default grid.

        ``doppler_span="rs"`` covers [-M_T/(2 T0), M_T/(2 T0)) with 2 M_T T bins,
        the alias-free range of a scrambled TX schedule. ``"ss"`` covers only
        [-1/(2 T0), 1/(2 T0)) with 2 T bins, as a sequential-switching
        estimator would.
        """
        n_tau = 2 * config.n_freq if n_tau is None else n_tau
        if doppler_span == "rs":
            half = config.n_tx / (2 * config.period)
            n_nu = 2 * config.n_tx * config.n_snap if n_nu is None else n_nu
            if n_nu < 2 * config.n_tx * config.n_snap:
                raise ValidationError("n_nu", "must be >= 2 * n_tx * n_snap", n_nu)
        elif doppler_span == "ss":
            half = 1 / (2 * config.period)
            n_nu = 2 * config.n_snap if n_nu is None else n_nu
        else:
            raise ValidationError("doppler_span", "must be 'rs' or 'ss'", doppler_span)
        tau = np.arange(n_tau) / (n_tau * config.freq_step)
        nu = -half + 2 * half * np.arange(n_nu) / n_nu
        return cls(tau, azimuth_grid(n_rx), azimuth_grid(n_tx), nu)

    def point(self, idx) -> Path:
        i, j, k, n = idx
        return Path(self.tau[i], self.phi_t[k], self.phi_r[j], self.nu[n])


def _grid_factors(sounder: Sounder, grid: SearchGrid):
    cfg = sounder.config
    Bf = np.exp(-1j * TWO_PI * np.outer(freq_grid(cfg), grid.tau))  # M_f x N_f
    Br = steering(sounder.rx, grid.phi_r).T  # M_R x N_R
    Bt = np.tile(steering(sounder.tx, grid.phi_t).T, (cfg.n_snap, 1))  # M_T T x N_T
    return Bf, Br, Bt


def _doppler_phase(times, nu):
    return np.exp(1j * TWO_PI * times * nu)


def correlation_grid_naive(sounder: Sounder, y, grid: SearchGrid, sigma2: float = 1.0) -> np.ndarray:
    """Pointwise correlation on every grid cell (reference implementation)."""
    y = np.asarray(y, dtype=complex)
    out = np.empty(grid.shape)
    for idx in np.ndindex(*grid.shape):
        out[idx] = correlation(sounder, grid.point(idx), y, sigma2)
    return out


def doppler_slices(sounder: Sounder, y, grid: SearchGrid, sigma2: float):
    cfg = sounder.config
    Y = as_tensor(y, cfg).reshape(cfg.n_freq, cfg.n_rx, cfg.n_tx * cfg.n_snap, order="F")
    Bf, Br, Bt = _grid_factors(sounder, grid)
    # first mode product does not depend on Doppler
    Yf = np.einsum("fn,frk->nrk", Bf.conj(), Y, optimize=True)
    nf = np.sum(np.abs(Bf) ** 2, axis=0)
    nr = np.sum(np.abs(Br) ** 2, axis=0)
    nt = np.sum(np.abs(Bt) ** 2, axis=0)
    # noise-weighted squared norms, separable because the Doppler phases are unit modulus
    T2 = np.multiply.outer(np.multiply.outer(nf, nr), nt) / sigma2
    if np.any(T2 <= 0):
        raise DegenerateArrayError("grid basis vector with zero norm")
    t_rx = rx_times(cfg)
    t_tx = sounder.tx_times
    for n, nu in enumerate(grid.nu):
        BrN = Br * _doppler_phase(t_rx, nu)[:, None]
        BtN = Bt * _doppler_phase(t_tx, nu)[:, None]
        T1 = np.einsum("nrk,rj->njk", Yf, BrN.conj(), optimize=True)
        T1 = np.einsum("njk,kl->njl", T1, BtN.conj(), optimize=True) / sigma2
        yield n, (T1.real**2 + T1.imag**2) / T2


def correlation_grid_tensor(sounder: Sounder, y, grid: SearchGrid, sigma2: float = 1.0,
                            noise_cov=None) -> np.ndarray:
    """Correlation on the whole grid by mode products, one Doppler bin at a time."""
    if noise_cov is not None and not _is_white(noise_cov):
        raise UnsupportedNoiseError("noise_cov", "only white noise (sigma2 * I) is supported")
    out = np.empty(grid.shape)
    for n, C in doppler_slices(sounder, y, grid, sigma2):
        out[..., n] = C
    return out


def _is_white(R) -> bool:
    R = np.asarray(R)
    if R.ndim == 0:
        return True
    if R.ndim == 1:
        return bool(np.allclose(R, R[0]))
    return bool(np.allclose(R, R[0, 0] * np.eye(R.shape[0])))


def grid_argmax(sounder: Sounder, y, grid: SearchGrid, sigma2: float = 1.0):
    """(index, value) of the grid maximum without storing the full tensor."""
    best_val, best_idx = -np.inf, None
    for n, C in doppler_slices(sounder, y, grid, sigma2):
        k = int(np.argmax(C))
        if C.flat[k] > best_val:
            best_val = float(C.flat[k])
            best_idx = np.unravel_index(k, C.shape) + (n,)
    return tuple(int(i) for i in best_idx), best_val

