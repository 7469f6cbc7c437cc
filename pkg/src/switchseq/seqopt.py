"""Simulated annealing over TX switching schedules (one permutation per snapshot)."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .ambiguity import AmbiguityGrid, TxAmbiguity
from .arrays import Eadf
from .errors import LoadError, NoNeighborError, ValidationError
from .sounding import SoundingConfig, eta_from_schedule, random_schedule, validate_schedule

DEFAULT_SEED = 2018


@dataclass(frozen=True)
class AnnealParams:
    p: float = 6
    temp0: float = 100.0
    alpha: float = 0.97
    k_max: int = 500
    eps_th: float = 0.0
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValidationError("alpha", "must lie in (0, 1)", self.alpha)
        if self.k_max < 1:
            raise ValidationError("k_max", "must be >= 1", self.k_max)
        if not self.temp0 > 0:
            raise ValidationError("temp0", "must be > 0", self.temp0)
        if not self.p > 0:
            raise ValidationError("p", "must be > 0", self.p)


@dataclass
class AnnealTrace:
    k: list = field(default_factory=list)
    temp: list = field(default_factory=list)
    cost: list = field(default_factory=list)
    best: list = field(default_factory=list)
    accepted: list = field(default_factory=list)

    def append(self, k, temp, cost, best, accepted):
        self.k.append(k)
        self.temp.append(temp)
        self.cost.append(cost)
        self.best.append(best)
        self.accepted.append(accepted)

    def __len__(self):
        return len(self.k)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "temp", "cost", "best", "accepted"])
            for row in zip(self.k, self.temp, self.cost, self.best, self.accepted):
                w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3]), int(row[4])])


@dataclass
class AnnealResult:
    schedule: np.ndarray
    cost: float
    trace: AnnealTrace
    initial: np.ndarray
    seed: int


def neighbor(schedule, rng: np.random.Generator) -> np.ndarray:
    """Swap two distinct entries of one uniformly chosen column."""
    S = np.array(schedule)
    n_tx, n_snap = S.shape
    if n_tx < 2:
        raise NoNeighborError("n_tx", "need at least 2 TX antennas to swap", n_tx)
    col = rng.integers(n_snap)
    i, j = rng.choice(n_tx, size=2, replace=False)
    S[[i, j], col] = S[[j, i], col]
    return S


def acceptance(e: float, e_new: float, temp: float, rng: np.random.Generator) -> bool:
    """Metropolis rule: downhill always, uphill with probability exp((e - e_new) / temp).

    One uniform draw is consumed on every call so the RNG stream does not
    depend on the outcome.
    """
    u = rng.random()
    if e_new < e:
        return True
    return u < math.exp((e - e_new) / temp)


def anneal(tx: Eadf, config: SoundingConfig, grid: AmbiguityGrid | None = None,
           params: AnnealParams = AnnealParams(), *, initial=None,
           amb: TxAmbiguity | None = None) -> AnnealResult:
    """Minimize f_p over feasible schedules.

    Starts from seeded random column permutations unless ``initial`` is
    given. Runs while ``k <= k_max`` and the current cost exceeds
    ``eps_th``; the temperature at iteration k is ``temp0 * alpha**k``.
    Returns the best schedule visited.
    """
    grid = grid or AmbiguityGrid.default(config)
    amb = amb or TxAmbiguity(tx, config, grid)
    rng = np.random.default_rng(params.seed)
    if initial is None:
        S = random_schedule(config.n_tx, config.n_snap, rng)
    else:
        S = validate_schedule(initial, config.n_tx, config.n_snap).copy()
    S0 = S.copy()

    def f(sched):
        return amb.cost(eta_from_schedule(config, sched), params.p)

    e = f(S)
    best_S, best_e = S.copy(), e
    trace = AnnealTrace()
    trace.append(0, params.temp0, e, best_e, True)
    k = 1
    while k <= params.k_max and e > params.eps_th:
        temp = params.temp0 * params.alpha**k
        cand = neighbor(S, rng)
        e_new = f(cand)
        ok = acceptance(e, e_new, temp, rng)
        if ok:
            S, e = cand, e_new
            if e < best_e:
                best_S, best_e = S.copy(), e
        trace.append(k, temp, e, best_e, ok)
        k += 1
    return AnnealResult(best_S, best_e, trace, S0, params.seed)


def anneal_chains(tx: Eadf, config: SoundingConfig, grid: AmbiguityGrid | None, params: AnnealParams,
                  seeds, jobs: int = 1) -> AnnealResult:
    """Independent chains; lowest cost wins, ties go to the earlier seed."""
    grid = grid or AmbiguityGrid.default(config)
    amb = TxAmbiguity(tx, config, grid)
    runs = [replace(params, seed=int(s)) for s in seeds]
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(lambda p: anneal(tx, config, grid, p, amb=amb), runs))
    else:
        results = [anneal(tx, config, grid, p, amb=amb) for p in runs]
    return min(results, key=lambda r: r.cost)


def write_schedule(path, schedule) -> None:
    """Columns as permutation lists, one snapshot per line."""
    S = validate_schedule(schedule)
    doc = {"n_tx": S.shape[0], "n_snap": S.shape[1], "columns": S.T.tolist()}
    with open(path, "w") as fh:
        fh.write(json.dumps(doc) + "\n")


def read_schedule(path) -> np.ndarray:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise LoadError(path, exc) from exc
    return validate_schedule(np.array(doc["columns"]).T)
