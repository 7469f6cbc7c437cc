"""Sounder timing, TX switching schedules and the structured signal basis.

Observation layout: frequency index fastest, then RX antenna, then TX dwell
slot, then snapshot. A basis vector is ``kron(tx_time, kron(rx, freq))``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property

import numpy as np

from .arrays import Eadf, steering
from .errors import ConstraintViolationError, ValidationError

TWO_PI = 2.0 * np.pi
_TIME_TOL = 1e-12


@dataclass(frozen=True)
class SoundingConfig:
    """Sounder geometry and timing in SI units.

    ``rx_dwell`` is t0 (RX switching interval), ``tx_dwell`` is t1 (TX
    switching interval) and ``period`` is T0 (snapshot separation).
    """

    n_freq: int = 64
    freq_step: float = 15e6 / 64
    n_rx: int = 8
    n_tx: int = 8
    n_snap: int = 3
    rx_dwell: float = 620e-6 / 64
    tx_dwell: float = 620e-6 / 8
    period: float = 620e-6

    def __post_init__(self):
        for name in ("n_freq", "n_rx", "n_tx", "n_snap"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValidationError(name, "must be an integer >= 1", v)
        for name in ("freq_step", "rx_dwell", "tx_dwell", "period"):
            v = getattr(self, name)
            if not v > 0:
                raise ValidationError(name, "must be > 0", v)
        if self.tx_dwell < self.n_rx * self.rx_dwell * (1 - _TIME_TOL):
            raise ValidationError("tx_dwell", "must be >= n_rx * rx_dwell", self.tx_dwell)
        if self.period < self.n_tx * self.tx_dwell * (1 - _TIME_TOL):
            raise ValidationError("period", "must be >= n_tx * tx_dwell", self.period)

    @property
    def n_obs(self) -> int:
        return self.n_freq * self.n_rx * self.n_tx * self.n_snap

    @property
    def nu_max(self) -> float:
        """Half-width of the alias-free Doppler range of a TX-scrambled schedule."""
        return self.n_tx / (2.0 * self.period)

    def dense(self) -> "SoundingConfig":
        """Sequential timing compressed by n_tx (snapshot period T0 / n_tx)."""
        k = self.n_tx
        return replace(
            self, rx_dwell=self.rx_dwell / k, tx_dwell=self.tx_dwell / k, period=self.period / k
        )

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        """Content hash; floats rounded to 12 significant digits so unit conversions do not change it."""
        d = {k: (float(f"{v:.12g}") if isinstance(v, float) else v) for k, v in self.to_dict().items()}
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


# --- switching schedules (S_T) ---------------------------------------------


def uniform_schedule(n_tx: int, n_snap: int) -> np.ndarray:
    return np.tile(np.arange(1, n_tx + 1)[:, None], (1, n_snap))


def random_schedule(n_tx: int, n_snap: int, rng: np.random.Generator) -> np.ndarray:
    return np.stack([rng.permutation(n_tx) + 1 for _ in range(n_snap)], axis=1)


def validate_schedule(schedule, n_tx: int | None = None, n_snap: int | None = None) -> np.ndarray:
    S = np.asarray(schedule)
    if S.ndim != 2:
        raise ConstraintViolationError("schedule", "must be an n_tx x n_snap matrix", S.shape)
    if n_tx is not None and S.shape[0] != n_tx:
        raise ConstraintViolationError("schedule", f"must have {n_tx} rows", S.shape)
    if n_snap is not None and S.shape[1] != n_snap:
        raise ConstraintViolationError("schedule", f"must have {n_snap} columns", S.shape)
    want = np.arange(1, S.shape[0] + 1)
    for t in range(S.shape[1]):
        if not np.array_equal(np.sort(S[:, t]), want):
            raise ConstraintViolationError(
                f"schedule column {t + 1}", f"must be a permutation of 1..{S.shape[0]}", S[:, t].tolist()
            )
    return S.astype(int)


def eta_from_schedule(config: SoundingConfig, schedule) -> np.ndarray:
    """TX switching time matrix (n_tx x n_snap, seconds).

    ``eta[m, t] = t * n_tx * t1 + (S[m, t] - 1) * t1`` with zero-based t.
    """
    S = validate_schedule(schedule, config.n_tx, config.n_snap)
    t = np.arange(config.n_snap)[None, :]
    return t * config.n_tx * config.tx_dwell + (S - 1) * config.tx_dwell


# --- paths -------------------------------------------------------------------


def wrap_angle(phi):
    """Map to (-pi, pi]."""
    w = np.pi - np.remainder(np.pi - np.asarray(phi, dtype=float), TWO_PI)
    return float(w) if np.ndim(w) == 0 else w


@dataclass(frozen=True)
class Path:
    tau: float
    phi_t: float
    phi_r: float
    nu: float
    gamma: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "phi_t", wrap_angle(self.phi_t))
        object.__setattr__(self, "phi_r", wrap_angle(self.phi_r))
        object.__setattr__(self, "gamma", complex(self.gamma))


PARAM_NAMES = ("tau", "phi_t", "phi_r", "nu", "gamma_re", "gamma_im")


@dataclass(frozen=True, eq=False)
class PathSet:
    """P specular paths stored column-wise."""

    tau: np.ndarray
    phi_t: np.ndarray
    phi_r: np.ndarray
    nu: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        for name in ("tau", "phi_t", "phi_r", "nu"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        object.__setattr__(self, "phi_t", np.atleast_1d(wrap_angle(self.phi_t)))
        object.__setattr__(self, "phi_r", np.atleast_1d(wrap_angle(self.phi_r)))
        object.__setattr__(self, "gamma", np.atleast_1d(np.asarray(self.gamma, dtype=complex)))
        n = {len(self.tau), len(self.phi_t), len(self.phi_r), len(self.nu), len(self.gamma)}
        if len(n) != 1:
            raise ValidationError("paths", "parameter arrays must have equal length")

    @classmethod
    def from_paths(cls, paths) -> "PathSet":
        paths = list(paths)
        return cls(
            [p.tau for p in paths],
            [p.phi_t for p in paths],
            [p.phi_r for p in paths],
            [p.nu for p in paths],
            [p.gamma for p in paths],
        )

    @classmethod
    def empty(cls) -> "PathSet":
        return cls([], [], [], [], [])

    def __len__(self) -> int:
        return len(self.tau)

    def __getitem__(self, i) -> Path:
        return Path(self.tau[i], self.phi_t[i], self.phi_r[i], self.nu[i], self.gamma[i])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def validate(self) -> "PathSet":
        if np.any(self.tau < 0):
            raise ValidationError("tau", "path delays must be >= 0", self.tau.tolist())
        keys = set()
        for p in self:
            key = (p.tau, p.phi_t, p.phi_r, p.nu)
            if key in keys:
                raise ValidationError("paths", "paths must be distinct in (tau, phi_t, phi_r, nu)", key)
            keys.add(key)
        return self

    def with_gamma(self, gamma) -> "PathSet":
        return PathSet(self.tau, self.phi_t, self.phi_r, self.nu, gamma)

    def select(self, idx) -> "PathSet":
        idx = np.atleast_1d(idx)
        return PathSet(self.tau[idx], self.phi_t[idx], self.phi_r[idx], self.nu[idx], self.gamma[idx])

    def concat(self, other: "PathSet") -> "PathSet":
        return PathSet(
            np.r_[self.tau, other.tau],
            np.r_[self.phi_t, other.phi_t],
            np.r_[self.phi_r, other.phi_r],
            np.r_[self.nu, other.nu],
            np.r_[self.gamma, other.gamma],
        )

    def to_vector(self) -> np.ndarray:
        """Real parameter vector, per path (tau, phi_t, phi_r, nu, Re g, Im g)."""
        return np.column_stack(
            [self.tau, self.phi_t, self.phi_r, self.nu, self.gamma.real, self.gamma.imag]
        ).ravel()

    @classmethod
    def from_vector(cls, theta) -> "PathSet":
        th = np.asarray(theta, dtype=float).reshape(-1, 6)
        return cls(th[:, 0], th[:, 1], th[:, 2], th[:, 3], th[:, 4] + 1j * th[:, 5])


# --- basis -------------------------------------------------------------------


def freq_grid(config: SoundingConfig) -> np.ndarray:
    """Baseband tone frequencies, centred on zero."""
    m = np.arange(config.n_freq)
    return (m - (config.n_freq - 1) / 2.0) * config.freq_step


def _squeeze(out, scalar):
    return out[:, 0] if scalar else out


def freq_basis(config: SoundingConfig, tau):
    scalar = np.ndim(tau) == 0
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    return _squeeze(np.exp(-1j * TWO_PI * np.outer(freq_grid(config), tau)), scalar)


def rx_times(config: SoundingConfig) -> np.ndarray:
    # m_R * t0 with one-based m_R
    return np.arange(1, config.n_rx + 1) * config.rx_dwell


def rx_basis(config: SoundingConfig, rx: Eadf, phi_r, nu):
    scalar = np.ndim(phi_r) == 0 and np.ndim(nu) == 0
    phi_r, nu = np.broadcast_arrays(np.atleast_1d(phi_r), np.atleast_1d(nu))
    b = steering(rx, phi_r).T
    return _squeeze(b * np.exp(1j * TWO_PI * np.outer(rx_times(config), nu)), scalar)


def tx_time_basis(config: SoundingConfig, tx: Eadf, eta, phi_t, nu):
    """Stacked TX responses over snapshots, block t = b_T(phi_t) * exp(j 2 pi nu eta[:, t])."""
    scalar = np.ndim(phi_t) == 0 and np.ndim(nu) == 0
    phi_t, nu = np.broadcast_arrays(np.atleast_1d(phi_t), np.atleast_1d(nu))
    eta = np.asarray(eta)
    times = eta.T.ravel()  # index t * n_tx + m
    b = np.tile(steering(tx, phi_t).T, (eta.shape[1], 1))
    return _squeeze(b * np.exp(1j * TWO_PI * np.outer(times, nu)), scalar)


def khatri_rao(*mats) -> np.ndarray:
    """Column-wise Kronecker product; the last factor varies fastest."""
    out = np.asarray(mats[0])
    for m in mats[1:]:
        m = np.asarray(m)
        out = (out[:, None, :] * m[None, :, :]).reshape(-1, out.shape[1])
    return out


@dataclass(frozen=True, eq=False)
class Sounder:
    """Configuration plus TX/RX arrays and the TX schedule."""

    config: SoundingConfig
    tx: Eadf
    rx: Eadf
    schedule: np.ndarray = field(default=None)

    def __post_init__(self):
        cfg = self.config
        if self.tx.num_antennas != cfg.n_tx:
            raise ValidationError("tx", f"array must have n_tx={cfg.n_tx} antennas", self.tx.num_antennas)
        if self.rx.num_antennas != cfg.n_rx:
            raise ValidationError("rx", f"array must have n_rx={cfg.n_rx} antennas", self.rx.num_antennas)
        S = uniform_schedule(cfg.n_tx, cfg.n_snap) if self.schedule is None else self.schedule
        S = validate_schedule(S, cfg.n_tx, cfg.n_snap)
        S.setflags(write=False)
        object.__setattr__(self, "schedule", S)

    @cached_property
    def eta(self) -> np.ndarray:
        return eta_from_schedule(self.config, self.schedule)

    @cached_property
    def tx_times(self) -> np.ndarray:
        """Switching time of every TX-time row, in stacked order."""
        return self.eta.T.ravel()

    def with_schedule(self, schedule) -> "Sounder":
        return Sounder(self.config, self.tx, self.rx, schedule)

    def factors(self, paths: PathSet):
        """(TX-time, RX, frequency) factor matrices for ``paths``."""
        cfg = self.config
        return (
            tx_time_basis(cfg, self.tx, self.eta, paths.phi_t, paths.nu),
            rx_basis(cfg, self.rx, paths.phi_r, paths.nu),
            freq_basis(cfg, paths.tau),
        )


def basis_vector(sounder: Sounder, path: Path) -> np.ndarray:
    return basis_matrix(sounder, PathSet.from_paths([path]))[:, 0]


def basis_matrix(sounder: Sounder, paths: PathSet) -> np.ndarray:
    if len(paths) == 0:
        return np.zeros((sounder.config.n_obs, 0), dtype=complex)
    return khatri_rao(*sounder.factors(paths))


def signal(sounder: Sounder, paths: PathSet) -> np.ndarray:
    if len(paths) == 0:
        return np.zeros(sounder.config.n_obs, dtype=complex)
    return basis_matrix(sounder, paths) @ paths.gamma


# --- observation layout ------------------------------------------------------


def check_observation(y, config: SoundingConfig) -> np.ndarray:
    y = np.asarray(y, dtype=complex).ravel()
    if y.size != config.n_obs:
        raise ValidationError("observation", f"length must be {config.n_obs}", y.size)
    return y


def as_tensor(y, config: SoundingConfig) -> np.ndarray:
    """View samples as an (n_freq, n_rx, n_tx, n_snap) array."""
    y = check_observation(y, config)
    return y.reshape((config.n_freq, config.n_rx, config.n_tx, config.n_snap), order="F")


def from_tensor(Y) -> np.ndarray:
    return np.asarray(Y).ravel(order="F")
