"""Scenario and observation files (JSON, boundary units ns / deg / Hz / us / dB)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from . import presets
from .arrays import Eadf, load_eadf, synthesize_uca
from .errors import LoadError, ValidationError
from .seqopt import read_schedule
from .sounding import PathSet, Sounder, SoundingConfig, check_observation, uniform_schedule


@dataclass(frozen=True, eq=False)
class Scenario:
    sounder: Sounder
    paths: PathSet
    sigma2: float = 1.0
    name: str = ""


def config_to_doc(cfg: SoundingConfig) -> dict:
    return {
        "n_freq": cfg.n_freq,
        "freq_step_hz": cfg.freq_step,
        "n_rx": cfg.n_rx,
        "n_tx": cfg.n_tx,
        "n_snap": cfg.n_snap,
        "rx_dwell_us": cfg.rx_dwell * 1e6,
        "tx_dwell_us": cfg.tx_dwell * 1e6,
        "period_us": cfg.period * 1e6,
    }


def config_from_doc(d: dict) -> SoundingConfig:
    base = SoundingConfig()
    return SoundingConfig(
        n_freq=int(d.get("n_freq", base.n_freq)),
        freq_step=float(d.get("freq_step_hz", base.freq_step)),
        n_rx=int(d.get("n_rx", base.n_rx)),
        n_tx=int(d.get("n_tx", base.n_tx)),
        n_snap=int(d.get("n_snap", base.n_snap)),
        rx_dwell=float(d["rx_dwell_us"]) * 1e-6 if "rx_dwell_us" in d else base.rx_dwell,
        tx_dwell=float(d["tx_dwell_us"]) * 1e-6 if "tx_dwell_us" in d else base.tx_dwell,
        period=float(d["period_us"]) * 1e-6 if "period_us" in d else base.period,
    )


def paths_to_doc(paths: PathSet) -> list:
    out = []
    for p in paths:
        g = complex(p.gamma)
        out.append({
            "tau_ns": p.tau * 1e9,
            "phi_t_deg": float(np.degrees(p.phi_t)),
            "phi_r_deg": float(np.degrees(p.phi_r)),
            "nu_hz": p.nu,
            "gain_db": float(20 * np.log10(abs(g))) if g != 0 else float("-inf"),
            "phase_deg": float(np.degrees(np.angle(g))),
        })
    return out


def paths_from_doc(rows: list) -> PathSet:
    if not rows:
        return PathSet.empty()
    g = [10 ** (r.get("gain_db", 0.0) / 20) * np.exp(1j * np.radians(r.get("phase_deg", 0.0))) for r in rows]
    return PathSet(
        [r["tau_ns"] * 1e-9 for r in rows],
        [np.radians(r["phi_t_deg"]) for r in rows],
        [np.radians(r["phi_r_deg"]) for r in rows],
        [r["nu_hz"] for r in rows],
        g,
    ).validate()


def _array_from_doc(ref, base_dir: FsPath, n: int):
    if ref is None or ref == "reference":
        return presets.reference_array(n)
    if isinstance(ref, dict) and "uca" in ref:
        u = ref["uca"]
        return synthesize_uca(int(u.get("num_antennas", n)), float(u.get("radius", presets.REF_RADIUS)),
                              u.get("max_mode"), directivity=int(u.get("directivity", 0)),
                              gain_sigma=float(u.get("gain_sigma", 0.0)), seed=u.get("seed"))
    if isinstance(ref, dict) and "eadf" in ref:
        return Eadf.from_dict(ref["eadf"])
    if isinstance(ref, dict) and "file" in ref:
        return load_eadf(base_dir / ref["file"])
    raise ValidationError("array", "must be 'reference', {'uca': ...}, {'eadf': ...} or {'file': path}", ref)


def _schedule_from_doc(ref, cfg: SoundingConfig, base_dir: FsPath):
    """Returns (config, schedule); the dense variant rescales the timing."""
    if ref is None or ref == "uniform":
        return cfg, uniform_schedule(cfg.n_tx, cfg.n_snap)
    if ref == "dense":
        return cfg.dense(), uniform_schedule(cfg.n_tx, cfg.n_snap)
    if isinstance(ref, dict) and "columns" in ref:
        return cfg, np.array(ref["columns"]).T
    if isinstance(ref, dict) and "file" in ref:
        return cfg, read_schedule(base_dir / ref["file"])
    raise ValidationError("schedule", "must be 'uniform', 'dense', {'columns': ...} or {'file': path}", ref)


def scenario_from_doc(doc: dict, base_dir=".") -> Scenario:
    base_dir = FsPath(base_dir)
    cfg = config_from_doc(doc.get("config", {}))
    tx = _array_from_doc(doc.get("tx_array"), base_dir, cfg.n_tx)
    rx = _array_from_doc(doc.get("rx_array"), base_dir, cfg.n_rx)
    cfg, S = _schedule_from_doc(doc.get("schedule"), cfg, base_dir)
    sigma2 = float(doc.get("noise_power", 1.0))
    if not sigma2 > 0:
        raise ValidationError("noise_power", "must be > 0", sigma2)
    return Scenario(Sounder(cfg, tx, rx, S), paths_from_doc(doc.get("paths", [])), sigma2,
                    doc.get("name", ""))


def load_scenario(path) -> Scenario:
    path = FsPath(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise LoadError(path, exc) from exc
    return scenario_from_doc(doc, path.parent)


def scenario_to_doc(sc: Scenario) -> dict:
    snd = sc.sounder
    return {
        "name": sc.name,
        "config": config_to_doc(snd.config),
        "tx_array": {"eadf": snd.tx.to_dict()},
        "rx_array": {"eadf": snd.rx.to_dict()},
        "schedule": {"columns": snd.schedule.T.tolist()},
        "paths": paths_to_doc(sc.paths),
        "noise_power": sc.sigma2,
    }


def preset_scenario(name: str, schedule="uniform", sigma2: float = 1.0) -> Scenario:
    """Built-in channel on the reference arrays. ``schedule`` may be a matrix."""
    cfg = presets.default_config()
    arr = presets.reference_array(cfg.n_tx)
    if isinstance(schedule, str):
        cfg, S = _schedule_from_doc(schedule, cfg, FsPath("."))
    else:
        S = schedule
    return Scenario(Sounder(cfg, arr, arr, S), presets.scenario_paths(name), sigma2, name)


def write_observation(path, y, config: SoundingConfig) -> None:
    y = check_observation(y, config)
    doc = {
        "config_hash": config.hash(),
        "layout": "freq,rx,tx_slot,snapshot (freq fastest)",
        "length": int(y.size),
        "samples": [[float(z.real), float(z.imag)] for z in y],
    }
    FsPath(path).write_text(json.dumps(doc) + "\n")


def read_observation(path, config: SoundingConfig | None = None) -> np.ndarray:
    try:
        doc = json.loads(FsPath(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise LoadError(path, exc) from exc
    if config is not None and doc.get("config_hash") != config.hash():
        raise ValidationError("observation", "config hash does not match the scenario", doc.get("config_hash"))
    y = np.array([complex(re, im) for re, im in doc["samples"]])
    if config is not None:
        y = check_observation(y, config)
    return y
