"""Spatio-temporal ambiguity function, its TX upper bound, the f_p cost and NSL."""

from __future__ import annotations

import csv
import warnings as _warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .arrays import Eadf, steering
from .errors import DegenerateArrayError, ValidationError
from .sounding import (
    TWO_PI,
    Path,
    Sounder,
    SoundingConfig,
    basis_vector,
    freq_basis,
    rx_basis,
    tx_time_basis,
)

_EPS = 1e-300


def _normalized_inner(a, b):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < _EPS or nb < _EPS:
        raise DegenerateArrayError("basis vector has zero norm")
    return np.vdot(a, b) / (na * nb)


def x_tot(sounder: Sounder, mu: Path, mu2: Path) -> complex:
    """Normalized inner product of two full basis vectors."""
    return complex(_normalized_inner(basis_vector(sounder, mu), basis_vector(sounder, mu2)))


def x_split(sounder: Sounder, mu: Path, mu2: Path):
    """(X_tau, X_kappa): delay factor and joint TX-time/RX factor."""
    cfg = sounder.config
    x_tau = _normalized_inner(freq_basis(cfg, mu.tau), freq_basis(cfg, mu2.tau))
    x_t = _normalized_inner(
        tx_time_basis(cfg, sounder.tx, sounder.eta, mu.phi_t, mu.nu),
        tx_time_basis(cfg, sounder.tx, sounder.eta, mu2.phi_t, mu2.nu),
    )
    x_r = _normalized_inner(
        rx_basis(cfg, sounder.rx, mu.phi_r, mu.nu), rx_basis(cfg, sounder.rx, mu2.phi_r, mu2.nu)
    )
    return complex(x_tau), complex(x_t * x_r)


def x_T_direct(tx: Eadf, eta, phi, phi2, nu, nu2, config: SoundingConfig | None = None) -> complex:
    """TX upper bound from the stacked TX-time basis vectors."""
    eta = np.asarray(eta)
    cfg = config or _dummy_config(tx, eta)
    a = tx_time_basis(cfg, tx, eta, phi, nu)
    b = tx_time_basis(cfg, tx, eta, phi2, nu2)
    return complex(_normalized_inner(a, b))


def _dummy_config(tx, eta):
    # tx_time_basis only uses eta, so any consistent config will do
    return SoundingConfig(n_freq=1, n_rx=1, n_tx=tx.num_antennas, n_snap=eta.shape[1],
                          rx_dwell=1.0, tx_dwell=1.0, period=float(tx.num_antennas))


def doppler_sums(eta, dnu) -> np.ndarray:
    """v[m, n] = sum_t exp(j 2 pi dnu_n eta[m, t])."""
    eta = np.asarray(eta, dtype=float)
    dnu = np.atleast_1d(np.asarray(dnu, dtype=float))
    return np.exp(1j * TWO_PI * eta[:, :, None] * dnu[None, None, :]).sum(axis=1)


def angle_weights(tx: Eadf, phi, phi2, n_snap: int) -> np.ndarray:
    """w[i, j, m] = conj(b_m(phi_i)) b_m(phi2_j) / (T |b(phi_i)| |b(phi2_j)|)."""
    b1 = np.atleast_2d(steering(tx, np.atleast_1d(phi)))
    b2 = np.atleast_2d(steering(tx, np.atleast_1d(phi2)))
    n1, n2 = np.linalg.norm(b1, axis=1), np.linalg.norm(b2, axis=1)
    if np.min(n1) < _EPS or np.min(n2) < _EPS:
        raise DegenerateArrayError("TX steering vector has zero norm on the grid")
    return (np.conj(b1)[:, None, :] * b2[None, :, :]) / (n_snap * np.outer(n1, n2))[:, :, None]


def x_T_fast(tx: Eadf, eta, phi, phi2, dnu) -> complex:
    """TX upper bound through the Doppler-difference factorization."""
    eta = np.asarray(eta)
    w = angle_weights(tx, phi, phi2, eta.shape[1])[0, 0]
    v = doppler_sums(eta, dnu)[:, 0]
    return complex(w @ v)


@dataclass(frozen=True, eq=False)
class AmbiguityGrid:
    """Evaluation grid over (phi, phi', dnu)."""

    phi: np.ndarray
    phi_prime: np.ndarray
    dnu: np.ndarray

    def __post_init__(self):
        for name in ("phi", "phi_prime", "dnu"):
            a = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if a.size == 0:
                raise ValidationError(name, "grid must be non-empty")
            if a.size > 1 and np.any(np.diff(a) <= 0):
                raise ValidationError(name, "grid must be strictly increasing")
            object.__setattr__(self, name, a)

    @classmethod
    def default(cls, config: SoundingConfig, n_phi: int = 72, n_nu: int | None = None,
                nu_up: float | None = None) -> "AmbiguityGrid":
        n_nu = 16 * config.n_tx + 1 if n_nu is None else n_nu
        nu_up = config.nu_max if nu_up is None else nu_up
        phi = azimuth_grid(n_phi)
        return cls(phi, phi, np.linspace(0.0, nu_up, n_nu))

    @property
    def shape(self):
        return (self.phi.size, self.phi_prime.size, self.dnu.size)

    def weights(self) -> np.ndarray:
        """Quadrature weights (phi, phi', dnu); trapezoid along dnu."""
        dphi = TWO_PI / self.phi.size
        dphi2 = TWO_PI / self.phi_prime.size
        if self.dnu.size == 1:
            wn = np.ones(1)
        else:
            d = np.diff(self.dnu)
            wn = np.zeros(self.dnu.size)
            wn[:-1] += d / 2
            wn[1:] += d / 2
        return dphi * dphi2 * wn


def azimuth_grid(n: int) -> np.ndarray:
    """n equispaced angles covering (-pi, pi]."""
    if n < 1:
        raise ValidationError("n_phi", "must be >= 1", n)
    return -np.pi + TWO_PI * np.arange(1, n + 1) / n


class TxAmbiguity:
    """Fast |X_T| evaluation on a fixed grid for many schedules.

    The angle weights are computed once; each schedule only needs the
    M_T x N_nu matrix of Doppler sums.
    """

    def __init__(self, tx: Eadf, config: SoundingConfig, grid: AmbiguityGrid):
        self.tx = tx
        self.config = config
        self.grid = grid
        w = angle_weights(tx, grid.phi, grid.phi_prime, config.n_snap)
        self._w = w.reshape(-1, tx.num_antennas)
        self._qw = grid.weights()

    def complex_map(self, eta) -> np.ndarray:
        v = doppler_sums(eta, self.grid.dnu)
        return (self._w @ v).reshape(self.grid.shape)

    def magnitude(self, eta) -> np.ndarray:
        return np.abs(self.complex_map(eta))

    def cost(self, eta, p: float = 6) -> float:
        a = self.magnitude(eta)
        # fixed reduction order: dnu first, then the flattened angle axes
        return float(np.sum((a**p) @ self._qw))


def cost_f_p(tx: Eadf, eta, grid: AmbiguityGrid, p: float = 6, config: SoundingConfig | None = None) -> float:
    eta = np.asarray(eta)
    cfg = config or _dummy_config(tx, eta)
    return TxAmbiguity(tx, cfg, grid).cost(eta, p)


@dataclass
class NslResult:
    db: float
    value: float
    phi: float = float("nan")
    phi_prime: float = float("nan")
    dnu: float = float("nan")
    warnings: list = field(default_factory=list)


def _sidelobe_peaks(a, i0, thr):
    """Local maxima of a (N_phi' x N_nu) slice outside the main-lobe component.

    The slice is rolled to put the reference angle row ``i0`` at the centre
    so the main lobe does not straddle the periodic phi' seam.
    """
    n = a.shape[0]
    c = n // 2
    A = np.roll(a, c - i0, axis=0)
    labels, _ = ndimage.label(A >= thr)
    main = labels == labels[c, 0] if labels[c, 0] else np.zeros(A.shape, dtype=bool)
    main[c, 0] = True
    P = np.pad(A, ((1, 1), (1, 1)), mode="wrap")
    P[:, 0], P[:, -1] = P[:, 1], P[:, -2]
    mf = ndimage.maximum_filter(P, size=3, mode="nearest")[1:-1, 1:-1]
    peaks = (A >= mf) & ~main
    return A, peaks, main, c


def nsl(tx: Eadf, eta, grid: AmbiguityGrid, *, ref_step: int = 3, threshold: float = 0.5,
        config: SoundingConfig | None = None, amb: TxAmbiguity | None = None) -> NslResult:
    """Normalized sidelobe level of |X_T| in dB.

    For every ``ref_step``-th reference angle the main lobe is the connected
    region with ``|X_T| >= threshold`` containing ``(phi', dnu) = (phi, 0)``.
    The sidelobe level is the highest local maximum outside it; the NSL is
    the worst case over reference angles.
    """
    eta = np.asarray(eta)
    if amb is None:
        amb = TxAmbiguity(tx, config or _dummy_config(tx, eta), grid)
    X = amb.magnitude(eta)
    notes = []
    worst = NslResult(db=-np.inf, value=0.0)
    for i in range(0, grid.phi.size, ref_step):
        i0 = int(np.argmin(np.abs(np.angle(np.exp(1j * (grid.phi_prime - grid.phi[i]))))))
        A, peaks, main, c = _sidelobe_peaks(X[i], i0, threshold)
        if main[:, -1].any() and grid.dnu.size > 1:
            msg = f"main lobe at phi={np.degrees(grid.phi[i]):.1f} deg reaches the dnu grid edge"
            if msg not in notes:
                notes.append(msg)
        if not peaks.any():
            continue
        vals = np.where(peaks, A, -1.0)
        j, n = np.unravel_index(np.argmax(vals), A.shape)
        if A[j, n] > worst.value:
            worst = NslResult(
                db=float(20 * np.log10(A[j, n])), value=float(A[j, n]), phi=float(grid.phi[i]),
                phi_prime=float(grid.phi_prime[(j - c + i0) % A.shape[0]]), dnu=float(grid.dnu[n]),
            )
    worst.warnings = notes
    for msg in notes[:1]:
        _warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return worst


def write_ambiguity_csv(path, grid: AmbiguityGrid, X: np.ndarray, phi_index=None) -> None:
    """Heat-map rows (phi_T_deg, phi_prime_T_deg, dnu_Hz, abs_X, abs_X_dB)."""
    idx = range(grid.phi.size) if phi_index is None else np.atleast_1d(phi_index)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phi_T_deg", "phi_prime_T_deg", "dnu_Hz", "abs_X", "abs_X_dB"])
        for i in idx:
            for j, p2 in enumerate(grid.phi_prime):
                for n, dn in enumerate(grid.dnu):
                    a = float(X[i, j, n])
                    db = 20 * np.log10(a) if a > 0 else -np.inf
                    w.writerow([f"{np.degrees(grid.phi[i]):.4f}", f"{np.degrees(p2):.4f}",
                                f"{dn:.6f}", f"{a:.9e}", f"{db:.4f}"])

