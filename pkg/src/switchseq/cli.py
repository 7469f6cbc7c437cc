"""Command-line entry point.

Exit codes: 0 success, 1 invalid input (bad flag, file or constraint),
2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path as FsPath

import numpy as np

from . import __version__
from .ambiguity import AmbiguityGrid, TxAmbiguity, nsl, write_ambiguity_csv
from .arrays import synthesize_uca
from .errors import LoadError, NumericalError, ValidationError
from .harness import ExperimentSpec, check_run, delay_doppler_spectrum, monte_carlo, persist_run, read_manifest
from .hrpe import EstimatorSettings, SearchGrid, estimate
from .scenario import (
    Scenario,
    config_from_doc,
    config_to_doc,
    load_scenario,
    paths_to_doc,
    preset_scenario,
    read_observation,
    scenario_to_doc,
    write_observation,
)
from .seqopt import DEFAULT_SEED, AnnealParams, anneal_chains, read_schedule
from .simulate import NoiseModel, scale_to_snr, synth
from .sounding import Sounder, eta_from_schedule, signal, uniform_schedule

ANNEAL_KEYS = {"p", "temp0", "alpha", "k_max", "eps_th"}


def _parse_overrides(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ValidationError("--set", "expected key=value", item)
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = json.loads(v)
        except json.JSONDecodeError:
            out[k.strip()] = v
    return out


def _apply_config_overrides(sc: Scenario, overrides: dict) -> Scenario:
    keys = {k: v for k, v in overrides.items() if k not in ANNEAL_KEYS}
    if not keys:
        return sc
    doc = config_to_doc(sc.sounder.config)
    for k in keys:
        if k not in doc:
            raise ValidationError("--set", f"unknown key, choose from {sorted(doc) + sorted(ANNEAL_KEYS)}", k)
    doc.update(keys)
    cfg = config_from_doc(doc)
    S = sc.sounder.schedule
    if S.shape != (cfg.n_tx, cfg.n_snap):
        S = uniform_schedule(cfg.n_tx, cfg.n_snap)
    tx, rx = sc.sounder.tx, sc.sounder.rx
    return Scenario(Sounder(cfg, tx, rx, S), sc.paths, sc.sigma2, sc.name)


def _anneal_params(args, overrides) -> AnnealParams:
    kw = {k: overrides[k] for k in ANNEAL_KEYS if k in overrides}
    return AnnealParams(seed=args.seed, **kw)


def _load_scenario(ref: str) -> Scenario:
    if ref.startswith("preset:"):
        return preset_scenario(ref.split(":", 1)[1])
    return load_scenario(ref)


def _resolve_schedule(sc: Scenario, variant: str, args, overrides) -> Scenario:
    """Replace the scenario schedule by a named variant or a schedule file."""
    snd = sc.sounder
    cfg = snd.config
    if variant in (None, "scenario"):
        return sc
    if variant == "uniform":
        S = uniform_schedule(cfg.n_tx, cfg.n_snap)
    elif variant == "dense":
        cfg = cfg.dense()
        S = uniform_schedule(cfg.n_tx, cfg.n_snap)
    elif variant == "optimized":
        res = anneal_chains(snd.tx, cfg, AmbiguityGrid.default(cfg), _anneal_params(args, overrides),
                            [args.seed + i for i in range(args.chains)], jobs=args.jobs)
        S = res.schedule
    else:
        S = read_schedule(variant)
    return Scenario(Sounder(cfg, snd.tx, snd.rx, S), sc.paths, sc.sigma2, sc.name)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _schedule_doc(S) -> str:
    return json.dumps({"n_tx": int(S.shape[0]), "n_snap": int(S.shape[1]), "columns": S.T.tolist()}) + "\n"


# --- subcommands --------------------------------------------------------------


def cmd_synth_array(args, overrides):
    eadf = synthesize_uca(args.antennas, args.radius, args.max_mode, directivity=args.directivity,
                          gain_sigma=args.gain_sigma, seed=args.seed)
    tmp = io.StringIO()
    json.dump(eadf.to_dict(), tmp, indent=1)
    return {"eadf.json": tmp.getvalue() + "\n"}


def cmd_optimize_seq(args, overrides):
    sc = _apply_config_overrides(_load_scenario(args.scenario), overrides)
    cfg = sc.sounder.config
    grid = AmbiguityGrid.default(cfg, n_phi=args.n_phi, n_nu=args.n_nu)
    params = _anneal_params(args, overrides)
    res = anneal_chains(sc.sounder.tx, cfg, grid, params, [args.seed + i for i in range(args.chains)],
                        jobs=args.jobs)
    amb = TxAmbiguity(sc.sounder.tx, cfg, grid)
    uni = uniform_schedule(cfg.n_tx, cfg.n_snap)
    n_opt = nsl(sc.sounder.tx, eta_from_schedule(cfg, res.schedule), grid, amb=amb)
    n_uni = nsl(sc.sounder.tx, eta_from_schedule(cfg, uni), grid, amb=amb)
    tr = res.trace
    trace = _csv(["k", "temp", "cost", "best", "accepted"],
                 [[k, repr(t), repr(c), repr(b), int(a)]
                  for k, t, c, b, a in zip(tr.k, tr.temp, tr.cost, tr.best, tr.accepted)])
    summary = {
        "seed": res.seed,
        "cost": res.cost,
        "cost_uniform": amb.cost(eta_from_schedule(cfg, uni), params.p),
        "nsl_db": n_opt.db,
        "nsl_uniform_db": n_uni.db,
        "warnings": n_opt.warnings,
    }
    print(f"f_{params.p:g}: {res.cost:.6g} (uniform {summary['cost_uniform']:.6g}); "
          f"NSL {n_opt.db:.2f} dB (uniform {n_uni.db:.2f} dB)")
    return {"schedule.json": _schedule_doc(res.schedule), "trace.csv": trace,
            "nsl.json": json.dumps(summary, indent=1) + "\n"}


def cmd_ambiguity_map(args, overrides):
    sc = _apply_config_overrides(_load_scenario(args.scenario), overrides)
    sc = _resolve_schedule(sc, args.schedule, args, overrides)
    cfg = sc.sounder.config
    grid = AmbiguityGrid.default(cfg, n_phi=args.n_phi, n_nu=args.n_nu)
    X = TxAmbiguity(sc.sounder.tx, cfg, grid).magnitude(sc.sounder.eta)
    idx = None
    if args.phi_t is not None:
        idx = [int(np.argmin(np.abs(np.angle(np.exp(1j * (grid.phi - np.radians(d))))))) for d in args.phi_t]
    out = FsPath(args.out) / "ambiguity.csv"
    FsPath(args.out).mkdir(parents=True, exist_ok=True)
    write_ambiguity_csv(out, grid, X, idx)
    return {"ambiguity.csv": out.read_text(), "schedule.json": _schedule_doc(sc.sounder.schedule)}


def cmd_simulate(args, overrides):
    sc = _apply_config_overrides(_load_scenario(args.scenario), overrides)
    sc = _resolve_schedule(sc, args.schedule, args, overrides)
    paths = sc.paths
    if args.snr_db is not None:
        paths = scale_to_snr(sc.sounder, paths, sc.sigma2, args.snr_db)
    y = synth(sc.sounder, paths, None if args.noiseless else NoiseModel(sc.sigma2),
              np.random.default_rng(args.seed))
    out = FsPath(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_observation(out / "observation.json", y, sc.sounder.config)
    used = Scenario(sc.sounder, paths, sc.sigma2, sc.name)
    return {"observation.json": (out / "observation.json").read_text(),
            "scenario.json": json.dumps(scenario_to_doc(used)) + "\n"}


def _paths_rows(paths, crlb=None):
    rows = []
    for i, d in enumerate(paths_to_doc(paths)):
        row = [d["tau_ns"], d["phi_t_deg"], d["phi_r_deg"], d["nu_hz"], d["gain_db"], d["phase_deg"]]
        if crlb is not None:
            s = crlb.std[i]
            row += [s[0] * 1e9, np.degrees(s[1]), np.degrees(s[2]), s[3]]
        rows.append(row)
    return rows


def cmd_estimate(args, overrides):
    sc = _apply_config_overrides(_load_scenario(args.scenario), overrides)
    sc = _resolve_schedule(sc, args.schedule, args, overrides)
    y = read_observation(args.observation, sc.sounder.config)
    settings = EstimatorSettings(threshold_db=args.threshold_db, max_paths=args.max_paths)
    grid = SearchGrid.default(sc.sounder.config, doppler_span=args.estimator)
    res = estimate(sc.sounder, y, grid, settings)
    header = ["tau_ns", "phi_t_deg", "phi_r_deg", "nu_hz", "gain_db", "phase_deg"]
    if res.crlb is not None:
        header += ["crlb_tau_ns", "crlb_phi_t_deg", "crlb_phi_r_deg", "crlb_nu_hz"]
    doc = {
        "paths": paths_to_doc(res.paths),
        "sigma2_hat": res.sigma2_hat,
        "converged": res.converged,
        "diverged": res.diverged,
        "iterations": res.iterations,
        "fim_cond": None if res.crlb is None else res.crlb.cond,
        "pinv": None if res.crlb is None else res.crlb.pinv,
    }
    trace = _csv(["iteration", "cost", "zeta", "step", "accepted"],
                 [[s.iteration, repr(s.cost), repr(s.zeta), repr(s.step), int(s.accepted)] for s in res.trace])
    print(f"{len(res.paths)} path(s), sigma2_hat={res.sigma2_hat:.4g}")
    return {"estimate.json": json.dumps(doc, indent=1) + "\n", "paths.csv": _csv(header, _paths_rows(res.paths, res.crlb)),
            "trace.csv": trace}


def cmd_montecarlo(args, overrides):
    base = _apply_config_overrides(_load_scenario(args.scenario), overrides)
    outputs = {}
    for variant in args.schedule:
        sc = _resolve_schedule(base, variant, args, overrides)
        spec = ExperimentSpec(sc, tuple(args.snr_db), args.trials, args.seed, args.estimator,
                              known_order=not args.detect)
        table = monte_carlo(spec, jobs=args.jobs)
        name = FsPath(variant).stem if variant not in ("uniform", "dense", "optimized", "scenario") else variant
        outputs[f"rmse_{name}.csv"] = table.to_csv()
        outputs[f"schedule_{name}.json"] = _schedule_doc(sc.sounder.schedule)
        for r in table.rows:
            print(f"{name:>10} {r.snr_db:6.1f} dB {r.param:>10}: rmse={r.rmse:.4g} sqrt_crlb={r.sqrt_crlb:.4g} "
                  f"outliers={r.n_outliers}")
    return outputs


def cmd_spectrum(args, overrides):
    sc = _apply_config_overrides(_load_scenario(args.scenario), overrides)
    sc = _resolve_schedule(sc, args.schedule, args, overrides)
    cfg = sc.sounder.config
    if args.observation:
        y = read_observation(args.observation, cfg)
    else:
        y = signal(sc.sounder, sc.paths)
    tau = np.arange(args.n_tau) / (args.n_tau * cfg.freq_step)
    half = cfg.n_tx / (2 * cfg.period) if args.nu_max is None else args.nu_max
    nu = np.linspace(-half, half, args.n_nu)
    sp = delay_doppler_spectrum(sc.sounder, y, tau, nu, args.n_angle)
    peaks = sp.peaks(-20.0)[:10]
    for t, v, p in peaks[:5]:
        print(f"peak tau={t * 1e9:.1f} ns nu={v:.1f} Hz {p:.2f} dB")
    return {"spectrum.csv": sp.to_csv(),
            "peaks.csv": _csv(["tau_ns", "nu_hz", "rel_db"], [[t * 1e9, v, p] for t, v, p in peaks])}


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="run", help="run directory (default: ./run)")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"RNG seed (default {DEFAULT_SEED})")
    common.add_argument("--jobs", type=int, default=1, help="max worker processes/threads")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config field (n_snap, period_us, ...) or anneal parameter (p, temp0, alpha, k_max, eps_th)")
    common.add_argument("--check", action="store_true",
                        help="verify an existing run directory against its manifest instead of running")

    scen_only = argparse.ArgumentParser(add_help=False)
    scen_only.add_argument("--scenario", default="preset:snapshot1",
                           help="scenario JSON file or preset:{snapshot1,snapshot2,two-path}")
    scen_only.add_argument("--chains", type=int, default=1, help="annealing chains for optimized schedules")
    scen = argparse.ArgumentParser(add_help=False, parents=[scen_only])
    scen.add_argument("--schedule", default="scenario",
                      help="scenario | uniform | dense | optimized | path to a schedule JSON")

    p = argparse.ArgumentParser(prog="switchseq", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth-array", parents=[common], help="synthesize a UCA EADF file")
    s.add_argument("--antennas", type=int, default=8)
    s.add_argument("--radius", type=float, default=0.5, help="radius in wavelengths")
    s.add_argument("--max-mode", type=int, default=None, help="EADF order K (default 2M)")
    s.add_argument("--directivity", type=int, default=0, help="element pattern exponent q")
    s.add_argument("--gain-sigma", type=float, default=0.0, help="std of complex gain errors")
    s.set_defaults(func=cmd_synth_array)

    s = sub.add_parser("optimize-seq", parents=[common], help="anneal a TX switching schedule")
    s.add_argument("--scenario", default="preset:snapshot1", help="source of config and TX array")
    s.add_argument("--n-phi", type=int, default=72)
    s.add_argument("--n-nu", type=int, default=None, help="Doppler grid size (default 16 M_T + 1)")
    s.add_argument("--chains", type=int, default=1)
    s.set_defaults(func=cmd_optimize_seq)

    s = sub.add_parser("ambiguity-map", parents=[common, scen], help="write |X_T| heat-map CSV")
    s.add_argument("--n-phi", type=int, default=72)
    s.add_argument("--n-nu", type=int, default=None)
    s.add_argument("--phi-t", type=float, nargs="+", default=None, help="reference DoDs in degrees")
    s.set_defaults(func=cmd_ambiguity_map)

    s = sub.add_parser("simulate", parents=[common, scen], help="synthesize an observation")
    s.add_argument("--snr-db", type=float, default=None, help="rescale path weights to this SNR")
    s.add_argument("--noiseless", action="store_true")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("estimate", parents=[common, scen], help="extract paths from an observation")
    s.add_argument("--observation", required=True)
    s.add_argument("--estimator", choices=["rs", "ss"], default="rs", help="Doppler search span")
    s.add_argument("--threshold-db", type=float, default=13.0)
    s.add_argument("--max-paths", type=int, default=10)
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("montecarlo", parents=[common, scen_only], help="RMSE versus CRLB sweep")
    s.add_argument("--schedule", nargs="+", default=["uniform", "optimized"],
                   help="one or more schedule variants (see ambiguity-map --schedule)")
    s.add_argument("--snr-db", type=float, nargs="+", default=[10.0, 20.0, 30.0])
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--estimator", choices=["rs", "ss"], default="rs")
    s.add_argument("--detect", action="store_true", help="threshold model order instead of using the true one")
    s.set_defaults(func=cmd_montecarlo)

    s = sub.add_parser("spectrum", parents=[common, scen], help="delay-Doppler spectrum CSV")
    s.add_argument("--observation", default=None, help="default: noiseless scenario signal")
    s.add_argument("--n-tau", type=int, default=128)
    s.add_argument("--n-nu", type=int, default=193)
    s.add_argument("--n-angle", type=int, default=72)
    s.add_argument("--nu-max", type=float, default=None, help="Doppler half-span in Hz")
    s.set_defaults(func=cmd_spectrum)
    return p


def _run_doc(args) -> dict:
    d = {k: v for k, v in vars(args).items() if k not in ("func", "check", "out", "jobs")}
    return {"command": args.command, "args": d}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.check:
            m = read_manifest(args.out)
            if m["spec"].get("command") != args.command:
                raise ValidationError("--check", f"run directory holds a '{m['spec'].get('command')}' run",
                                      args.command)
            bad = check_run(args.out)
            if bad:
                print(f"hash mismatch: {', '.join(bad)}", file=sys.stderr)
                return 1
            print(f"{args.out}: {len(m['outputs'])} output(s) verified")
            return 0
        if args.jobs < 1:
            raise ValidationError("--jobs", "must be >= 1", args.jobs)
        overrides = _parse_overrides(args.set)
        outputs = args.func(args, overrides)
        persist_run(_run_doc(args), outputs, args.out, seeds={"seed": args.seed})
        return 0
    except (ValidationError, LoadError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
