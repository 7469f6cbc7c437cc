"""Successive detection on the correlation grid followed by joint LM refinement."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..sounding import PathSet, Sounder, basis_matrix, check_observation
from .grid import SearchGrid, grid_argmax
from .model import CrlbResult, crlb, fim, jacobian, scaled_inverse


@dataclass
class LmStep:
    iteration: int
    cost: float
    zeta: float
    step: float
    accepted: bool


@dataclass
class EstimationResult:
    paths: PathSet
    sigma2_hat: float
    crlb: CrlbResult | None = None
    trace: list = field(default_factory=list)
    detections: list = field(default_factory=list)
    converged: bool = False
    diverged: bool = False
    iterations: int = 0
    initial_cost: float = float("nan")
    final_cost: float = float("nan")

    @property
    def crlb_diag(self):
        return None if self.crlb is None else self.crlb.std**2


@dataclass(frozen=True)
class EstimatorSettings:
    threshold_db: float = 13.0
    max_paths: int = 10
    force_paths: bool = False  # keep max_paths detections regardless of threshold
    refine_iter: int = 20
    max_iter: int = 100
    zeta0: float = 0.01
    step_tol: float = 1e-8
    cost_tol: float = 1e-12
    max_rejections: int = 10


def fit_gamma(sounder: Sounder, y, paths: PathSet) -> PathSet:
    """Least-squares complex weights for fixed (tau, phi_t, phi_r, nu)."""
    if len(paths) == 0:
        return paths
    B = basis_matrix(sounder, paths)
    g, *_ = np.linalg.lstsq(B, y, rcond=None)
    return paths.with_gamma(g)


def _residual_cost(sounder, y, paths):
    r = y - basis_matrix(sounder, paths) @ paths.gamma
    return float(np.vdot(r, r).real)


def _step_scales(sounder: Sounder, paths: PathSet) -> np.ndarray:
    cfg = sounder.config
    g = np.maximum(np.abs(paths.gamma), 1e-300)
    per = np.column_stack([
        np.full(len(paths), 1.0 / (cfg.n_freq * cfg.freq_step)),
        np.ones(len(paths)),
        np.ones(len(paths)),
        np.full(len(paths), 1.0 / (cfg.n_snap * cfg.period)),
        g,
        g,
    ])
    return per.ravel()


def lm_refine(sounder: Sounder, y, paths: PathSet, sigma2: float | None = None,
              settings: EstimatorSettings = EstimatorSettings(), *, max_iter: int | None = None,
              with_crlb: bool = True) -> EstimationResult:
    """Damped Gauss-Newton on all path parameters, weights included.

    Each iteration solves ``(J + zeta diag J) d = q``; zeta shrinks by 0.3
    after an accepted step and grows by 10 after a rejected one. The
    weights are re-fitted by least squares at the end.
    """
    y = check_observation(y, sounder.config)
    n_obs = y.size
    max_iter = settings.max_iter if max_iter is None else max_iter
    theta = paths.to_vector()
    cur = PathSet.from_vector(theta)
    cost = _residual_cost(sounder, y, cur)
    cost0 = cost
    zeta = settings.zeta0
    trace, converged, diverged, it = [], False, False, 0
    rejections = 0
    while it < max_iter and len(cur):
        it += 1
        D = jacobian(sounder, cur)
        J = fim(sounder, cur, 1.0, D)
        q = 2.0 * (D.conj().T @ (y - basis_matrix(sounder, cur) @ cur.gamma)).real
        scales = _step_scales(sounder, cur)
        while True:
            A = J + zeta * np.diag(np.diag(J))
            Ainv, _, _ = scaled_inverse(A)
            d = Ainv @ q
            step = float(np.max(np.abs(d) / scales))
            if step < settings.step_tol:
                converged = True
                trace.append(LmStep(it, cost, zeta, step, False))
                break
            cand = PathSet.from_vector(theta + d)
            c_new = _residual_cost(sounder, y, cand)
            if c_new < cost:
                rel = (cost - c_new) / max(cost, 1e-300)
                theta = cand.to_vector()
                cur, cost = cand, c_new
                zeta *= 0.3
                rejections = 0
                trace.append(LmStep(it, cost, zeta, step, True))
                if rel < settings.cost_tol:
                    converged = True
                break
            zeta *= 10.0
            rejections += 1
            trace.append(LmStep(it, c_new, zeta, step, False))
            if rejections >= settings.max_rejections:
                diverged = True
                break
        if converged or diverged:
            break
    cur = fit_gamma(sounder, y, cur)
    cost = _residual_cost(sounder, y, cur)
    sigma2_hat = cost / n_obs
    res = EstimationResult(cur, sigma2_hat, None, trace, [], converged, diverged, it, cost0, cost)
    if with_crlb and len(cur):
        s2 = sigma2 if sigma2 is not None else max(sigma2_hat, 1e-300)
        res.crlb = crlb(sounder, cur, s2)
    return res


def detect_init(sounder: Sounder, y, grid: SearchGrid, settings: EstimatorSettings = EstimatorSettings()):
    """Successive grid detection, per-path refinement and subtraction.

    Returns ``(paths, sigma2_hat, log)``. A candidate is kept while its
    residual-power reduction is at least ``threshold_db`` above the
    residual noise power per sample.
    """
    y = check_observation(y, sounder.config)
    n_obs = y.size
    paths = PathSet.empty()
    resid = y.copy()
    r_pow = float(np.vdot(y, y).real)
    log = []
    thr = 10.0 ** (settings.threshold_db / 10.0)
    for _ in range(settings.max_paths):
        idx, val = grid_argmax(sounder, resid, grid)
        cand = fit_gamma(sounder, resid, PathSet.from_paths([grid.point(idx)]))
        single = lm_refine(sounder, resid, cand, settings=settings, max_iter=settings.refine_iter,
                           with_crlb=False).paths
        trial = fit_gamma(sounder, y, paths.concat(single))
        new_pow = _residual_cost(sounder, y, trial)
        gain = r_pow - new_pow
        sigma2_hat = new_pow / n_obs
        entry = {"grid_index": idx, "grid_value": val, "gain": gain, "sigma2_hat": sigma2_hat,
                 "path": single[0]}
        if not settings.force_paths and not gain >= thr * sigma2_hat:
            entry["kept"] = False
            log.append(entry)
            break
        entry["kept"] = True
        log.append(entry)
        paths, r_pow = trial, new_pow
        resid = y - basis_matrix(sounder, paths) @ paths.gamma
    return paths, r_pow / n_obs, log


def estimate(sounder: Sounder, y, grid: SearchGrid | None = None,
             settings: EstimatorSettings = EstimatorSettings(), sigma2: float | None = None,
             doppler_span: str = "rs") -> EstimationResult:
    """Full pipeline: detection and initialization, then joint refinement."""
    grid = grid or SearchGrid.default(sounder.config, doppler_span=doppler_span)
    paths, s2, log = detect_init(sounder, y, grid, settings)
    res = lm_refine(sounder, y, paths, sigma2, settings)
    res.detections = log
    if not len(paths):
        res.sigma2_hat = s2
    return res
