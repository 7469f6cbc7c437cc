"""Jacobian, Fisher information, score and Cramer-Rao bounds of the specular model."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..arrays import steering, steering_derivative
from ..sounding import PARAM_NAMES, TWO_PI, PathSet, Sounder, freq_grid, khatri_rao, rx_times, signal

COND_WARN = 1e12


def _jacobian_blocks(sounder: Sounder, paths: PathSet):
    """Factor matrices D1, D2^1, D2^2, D3^1, D3^2, columns grouped per parameter."""
    cfg = sounder.config
    g = paths.gamma[None, :]
    f = freq_grid(cfg)
    Bf = np.exp(-1j * TWO_PI * np.outer(f, paths.tau))
    Df = (-1j * TWO_PI * f)[:, None] * Bf

    tr = rx_times(cfg)
    Ar = np.exp(1j * TWO_PI * np.outer(tr, paths.nu))
    Brv = steering(sounder.rx, paths.phi_r).T
    Br = Brv * Ar
    Dr_phi = steering_derivative(sounder.rx, paths.phi_r).T * Ar
    Dr_nu = (1j * TWO_PI * tr)[:, None] * Br

    tt = sounder.tx_times
    At = np.exp(1j * TWO_PI * np.outer(tt, paths.nu))
    n_snap = cfg.n_snap
    Bt = np.tile(steering(sounder.tx, paths.phi_t).T, (n_snap, 1)) * At
    Dt_phi = np.tile(steering_derivative(sounder.tx, paths.phi_t).T, (n_snap, 1)) * At
    Dt_nu = (1j * TWO_PI * tt)[:, None] * Bt

    D1 = [Df * g, Bf * g, Bf * g, Bf * g, Bf, 1j * Bf]
    D2a = [Br, Br, Dr_phi, Br, Br, Br]
    D2b = [Br, Br, Dr_phi, Dr_nu, Br, Br]
    D3a = [Bt, Dt_phi, Bt, 2 * Dt_nu, Bt, Bt]
    D3b = [Bt, Dt_phi, Bt, 2 * Bt, Bt, Bt]
    return D1, D2a, D2b, D3a, D3b


def _interleave(blocks):
    # parameter-major blocks of P columns -> path-major order (tau, phi_t, phi_r, nu, re, im)
    M = np.stack(blocks, axis=2)  # rows x P x 6
    return M.reshape(M.shape[0], -1)


def jacobian(sounder: Sounder, paths: PathSet) -> np.ndarray:
    """ds/dtheta, M x 6P, columns per path (tau, phi_t, phi_r, nu, Re g, Im g)."""
    D1, D2a, D2b, D3a, D3b = (_interleave(b) for b in _jacobian_blocks(sounder, paths))
    return 0.5 * (khatri_rao(D3a, D2a, D1) + khatri_rao(D3b, D2b, D1))


def fim(sounder: Sounder, paths: PathSet, sigma2: float, D=None) -> np.ndarray:
    D = jacobian(sounder, paths) if D is None else D
    J = (2.0 / sigma2) * (D.conj().T @ D).real
    return 0.5 * (J + J.T)


def score(sounder: Sounder, y, paths: PathSet, sigma2: float, D=None) -> np.ndarray:
    D = jacobian(sounder, paths) if D is None else D
    r = np.asarray(y) - signal(sounder, paths)
    return (2.0 / sigma2) * (D.conj().T @ r).real


def scaled_inverse(J):
    """Inverse of a PSD matrix after unit-diagonal scaling; returns (inv, cond, used_pinv)."""
    d = np.sqrt(np.clip(np.diag(J), 0.0, None))
    s = np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0), 0.0)
    Jn = J * np.outer(s, s)
    cond = float(np.linalg.cond(Jn)) if np.all(d > 0) else np.inf
    use_pinv = not np.isfinite(cond) or cond > COND_WARN
    Jn_inv = np.linalg.pinv(Jn, hermitian=True) if use_pinv else np.linalg.inv(Jn)
    return Jn_inv * np.outer(s, s), cond, use_pinv


@dataclass
class CrlbResult:
    std: np.ndarray  # (P, 6) standard deviations
    cond: float
    pinv: bool

    def param(self, name: str) -> np.ndarray:
        return self.std[:, PARAM_NAMES.index(name)]


def crlb(sounder: Sounder, paths: PathSet, sigma2: float) -> CrlbResult:
    """Square roots of the diagonal of the inverse FIM.

    The condition number is that of the unit-diagonal scaled FIM, so it
    reflects parameter coupling rather than the mix of physical units.
    """
    Jinv, cond, use_pinv = scaled_inverse(fim(sounder, paths, sigma2))
    if use_pinv:
        warnings.warn(f"FIM is ill-conditioned (cond={cond:.3g}); using pseudo-inverse",
                      RuntimeWarning, stacklevel=2)
    var = np.clip(np.diag(Jinv), 0.0, None)
    return CrlbResult(np.sqrt(var).reshape(-1, 6), cond, use_pinv)
