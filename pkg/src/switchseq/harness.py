"""Monte-Carlo RMSE versus CRLB, delay-Doppler spectra and run persistence."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path as FsPath

import numpy as np
from scipy import ndimage
from scipy.optimize import linear_sum_assignment

from .ambiguity import azimuth_grid
from .errors import LoadError, SwitchSeqError, ValidationError
from .hrpe import EstimatorSettings, SearchGrid, crlb, estimate
from .hrpe.grid import doppler_slices
from .scenario import Scenario, scenario_to_doc
from .simulate import NoiseModel, scale_to_snr, synth
from .sounding import PARAM_NAMES, PathSet, Sounder, wrap_angle

ERROR_PARAMS = ("tau", "phi_t", "phi_r", "nu")


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    """One Monte-Carlo experiment.

    ``estimator`` picks the Doppler search span of the initial grid:
    ``"rs"`` covers the scrambled-schedule range, ``"ss"`` only +-1/(2 T0).
    With ``known_order`` the estimator keeps exactly as many paths as the
    truth has instead of thresholding.
    """

    scenario: Scenario
    snr_db: tuple = (30.0,)
    trials: int = 100
    base_seed: int = 2018
    estimator: str = "rs"
    known_order: bool = True
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "snr_db", tuple(float(s) for s in np.atleast_1d(self.snr_db)))
        if self.trials < 1:
            raise ValidationError("trials", "must be >= 1", self.trials)
        if not self.snr_db:
            raise ValidationError("snr_db", "SNR list must be non-empty")
        if self.estimator not in ("rs", "ss"):
            raise ValidationError("estimator", "must be 'rs' or 'ss'", self.estimator)
        if len(self.scenario.paths) == 0:
            raise ValidationError("scenario", "needs at least one path")

    def to_doc(self) -> dict:
        return {
            "scenario": scenario_to_doc(self.scenario),
            "snr_db": list(self.snr_db),
            "trials": self.trials,
            "base_seed": self.base_seed,
            "estimator": self.estimator,
            "known_order": self.known_order,
            "label": self.label,
        }


@dataclass
class RmseRow:
    snr_db: float
    param: str
    rmse: float
    sqrt_crlb: float
    n_trials: int
    n_outliers: int


@dataclass
class RmseTable:
    rows: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)  # (snr_db, param) -> (trials, P) raw errors
    failures: dict = field(default_factory=dict)  # snr_db -> count of missed/diverged trials

    def get(self, snr_db: float, param: str, path: int = 0) -> RmseRow:
        for r in self.rows:
            if r.snr_db == snr_db and r.param == _key(param, path):
                return r
        raise KeyError((snr_db, param, path))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["snr_db", "param", "rmse", "sqrt_crlb", "n_trials", "n_outliers"])
        for r in self.rows:
            w.writerow([r.snr_db, r.param, repr(r.rmse), repr(r.sqrt_crlb), r.n_trials, r.n_outliers])
        return buf.getvalue()


def _key(param, path):
    return param if path == 0 else f"{param}[{path}]"


def match_paths(truth: PathSet, est: PathSet, sounder: Sounder):
    """Assignment of estimates to true paths; returns est index per true path (-1 if none)."""
    cfg = sounder.config
    if len(est) == 0:
        return np.full(len(truth), -1)
    scale = np.array([1 / (cfg.n_freq * cfg.freq_step), 0.2, 0.2, cfg.nu_max])
    t = np.column_stack([truth.tau, truth.phi_t, truth.phi_r, truth.nu]) / scale
    e = np.column_stack([est.tau, est.phi_t, est.phi_r, est.nu]) / scale
    cost = np.linalg.norm(t[:, None, :] - e[None, :, :], axis=2)
    rows, cols = linear_sum_assignment(cost)
    out = np.full(len(truth), -1)
    out[rows] = cols
    return out


def param_errors(truth: PathSet, est: PathSet, assign) -> np.ndarray:
    """(P, 4) raw errors in (tau, phi_t, phi_r, nu); angles wrapped, Doppler not."""
    err = np.full((len(truth), 4), np.nan)
    for p, j in enumerate(assign):
        if j < 0:
            continue
        err[p] = [
            est.tau[j] - truth.tau[p],
            wrap_angle(est.phi_t[j] - truth.phi_t[p]),
            wrap_angle(est.phi_r[j] - truth.phi_r[p]),
            est.nu[j] - truth.nu[p],
        ]
    return err


def _run_trial(spec: ExperimentSpec, paths: PathSet, sigma2: float, seed: int):
    snd = spec.scenario.sounder
    y = synth(snd, paths, NoiseModel(sigma2), np.random.default_rng(seed))
    settings = EstimatorSettings(max_paths=len(paths), force_paths=True) if spec.known_order \
        else EstimatorSettings()
    grid = SearchGrid.default(snd.config, doppler_span=spec.estimator)
    try:
        res = estimate(snd, y, grid, settings, sigma2=sigma2)
    except (SwitchSeqError, np.linalg.LinAlgError):
        return np.full((len(paths), 4), np.nan), True
    err = param_errors(paths, res.paths, match_paths(paths, res.paths, snd))
    return err, bool(res.diverged)


def monte_carlo(spec: ExperimentSpec, jobs: int = 1) -> RmseTable:
    """RMSE of every path parameter per SNR, next to the CRLB at the truth.

    Trial ``i`` uses seed ``base_seed + i`` at every SNR. Doppler errors
    are raw, so aliased estimates stay in the RMSE; trials beyond
    ``M_T / (4 T0)`` are counted as outliers.
    """
    sc = spec.scenario
    snd = sc.sounder
    table = RmseTable()
    nu_out = snd.config.n_tx / (4 * snd.config.period)
    pool = ProcessPoolExecutor(jobs) if jobs > 1 else None
    try:
        for snr in spec.snr_db:
            paths = scale_to_snr(snd, sc.paths, sc.sigma2, snr)
            bound = crlb(snd, paths, sc.sigma2)
            seeds = [spec.base_seed + i for i in range(spec.trials)]
            args = [(spec, paths, sc.sigma2, s) for s in seeds]
            out = list(pool.map(_run_trial, *zip(*args))) if pool else [_run_trial(*a) for a in args]
            errs = np.stack([o[0] for o in out])  # trials x P x 4
            table.failures[snr] = int(sum(o[1] for o in out) + np.sum(np.isnan(errs[:, :, 0]).any(axis=1)))
            for p in range(len(paths)):
                for k, name in enumerate(ERROR_PARAMS):
                    e = errs[:, p, k]
                    ok = e[~np.isnan(e)]
                    rmse = float(np.sqrt(np.mean(ok**2))) if ok.size else float("nan")
                    n_out = int(np.sum(np.abs(errs[:, p, 3]) > nu_out) + np.sum(np.isnan(errs[:, p, 3])))
                    table.errors[(snr, _key(name, p))] = e
                    table.rows.append(RmseRow(snr, _key(name, p), rmse,
                                              float(bound.std[p, PARAM_NAMES.index(name)]),
                                              int(ok.size), n_out))
    finally:
        if pool:
            pool.shutdown()
    return table


def loglog_slope(snr_db, values) -> float:
    """Least-squares slope of log10(values) against log10(linear SNR)."""
    x = np.asarray(snr_db, dtype=float) / 10.0
    return float(np.polyfit(x, np.log10(np.asarray(values, dtype=float)), 1)[0])


@dataclass
class Spectrum:
    tau: np.ndarray
    nu: np.ndarray
    power: np.ndarray  # (N_tau, N_nu), |b^H y|^2 / |b|^2 maximized over angles

    def db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10 * np.log10(self.power)

    def peaks(self, floor_db: float = -40.0):
        """Local maxima as (tau, nu, power_db relative to the global max), strongest first."""
        P = self.power
        if not np.any(P > 0):
            return []
        mf = ndimage.maximum_filter(P, size=3, mode="constant", cval=-np.inf)
        rel = 10 * np.log10(np.where(P > 0, P, np.nan) / P.max())
        idx = np.argwhere((P >= mf) & (P > 0) & (rel >= floor_db))
        out = [(float(self.tau[i]), float(self.nu[n]), float(rel[i, n])) for i, n in idx]
        return sorted(out, key=lambda r: -r[2])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau_ns", "nu_hz", "power_db"])
        D = self.db()
        for i, t in enumerate(self.tau):
            for n, v in enumerate(self.nu):
                w.writerow([f"{t * 1e9:.4f}", f"{v:.4f}", f"{D[i, n]:.4f}"])
        return buf.getvalue()


def delay_doppler_spectrum(sounder: Sounder, y, tau, nu, n_angle: int = 72) -> Spectrum:
    """Max over an ``n_angle`` x ``n_angle`` (phi_T, phi_R) grid of the normalized correlation."""
    grid = SearchGrid(tau, azimuth_grid(n_angle), azimuth_grid(n_angle), nu)
    out = np.empty((grid.tau.size, grid.nu.size))
    for n, C in doppler_slices(sounder, y, grid, 1.0):
        out[:, n] = C.max(axis=(1, 2))
    return Spectrum(grid.tau, grid.nu, out)


# --- persistence -------------------------------------------------------------


def content_hash(data) -> str:
    if isinstance(data, str):
        data = data.encode()
    return hashlib.sha256(data).hexdigest()


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def persist_run(spec_doc: dict, outputs: dict, directory, seeds=None) -> dict:
    """Write outputs plus a manifest of input and output hashes."""
    d = FsPath(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
        files = {}
        for name, data in outputs.items():
            blob = data.encode() if isinstance(data, str) else bytes(data)
            (d / name).write_bytes(blob)
            files[name] = content_hash(blob)
        manifest = {
            "spec": spec_doc,
            "seeds": seeds,
            "input_hash": content_hash(canonical_json(spec_doc)),
            "outputs": files,
        }
        (d / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write run directory {d}: {exc}") from exc
    return manifest


def read_manifest(directory) -> dict:
    p = FsPath(directory) / "manifest.json"
    try:
        return json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise LoadError(p, exc) from exc


def check_run(directory) -> list:
    """Names of outputs whose content no longer matches the manifest (empty if intact)."""
    d = FsPath(directory)
    m = read_manifest(d)
    bad = []
    if content_hash(canonical_json(m["spec"])) != m["input_hash"]:
        bad.append("manifest.json:spec")
    for name, h in m["outputs"].items():
        p = d / name
        if not p.exists() or content_hash(p.read_bytes()) != h:
            bad.append(name)
    return bad
