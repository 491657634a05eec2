"""Parameter sweeps over the sign predictor, written out as CSV files.

Each experiment expands into grid points; every point runs ``replicas``
times with seeds ``base_seed + replica``.  The replica seed drives both the
signal realization and (through a separate stream) the game, so all points
of one replica see the same series.  Results are reduced in canonical
``(point_id, replica)`` order, so output bytes do not depend on how many
worker processes ran them.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .baselines import DegenerateInputError, wiener_psi
from .game import GameConfig
from .predictor import psi_max_oracle, psi_windowed, run_prediction
from .sources import (
    AR3_COEFFS,
    ARProcess,
    IIDNoise,
    RegimeSwitchSource,
    load_prices,
)

log = logging.getLogger(__name__)

EXPERIMENTS = ("ns_sweep", "min_vs_maj", "lambda_sweep", "regime_switch", "m_sweep", "utility_trace")
SOURCES = ("ar3", "regime", "anti", "noise")
ANTI_COEFFS = (-0.4,)

DEFAULT_HORIZON = 3000
DEFAULT_REPLICAS = 10

NS_GRID = (2, 4, 8, 16, 32, 64, 128, 256)
MIN_MAJ_N_GRID = (1, 3, 5, 9, 17, 33, 65)
LAMBDA_GRID = (0.7, 0.8, 0.9, 0.95, 0.97, 0.99, 1.0)
REGIME_LAMBDAS = (0.7, 0.97, 1.0)
M_GRID = (1, 2, 5)
TRACE_LAMBDAS = (1.0, 0.97)


class InsufficientSignalError(RuntimeError):
    pass


@dataclass(frozen=True)
class Base:
    """Settings shared by every point of an experiment; grids override fields."""

    N: int = 1
    S: int = 2
    m: int = 3
    lam: float | None = None
    payoff: str = "step"
    kind: str = "minority"
    space: str = "rss"
    grand_canonical: bool = True
    source: str | None = None
    csv: str | None = None
    column: str = "price"
    delimiter: str = ","


@dataclass
class ExperimentSpec:
    name: str
    points: list[dict[str, Any]]
    replicas: int = DEFAULT_REPLICAS
    base_seed: int = 0
    horizon: int = DEFAULT_HORIZON
    out_dir: Path | None = None
    jobs: int = 1
    window: int = 100
    trace: bool = False
    utilities: bool = False
    ceiling: bool = False

    def seeds(self) -> list[int]:
        return [self.base_seed + r for r in range(self.replicas)]


@dataclass
class SweepResult:
    spec: ExperimentSpec
    raw: list[dict[str, Any]]  # point_id, replica, seed, psi_final
    aggregate: list[dict[str, Any]]
    traces: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    utilities: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    failures: dict[int, str] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return not self.failures

    def psi(self, **match) -> float:
        """Mean psi of the single point whose params match ``match``."""
        rows = [a for a in self.aggregate if all(a.get(k) == v for k, v in match.items())]
        if len(rows) != 1:
            raise KeyError(f"{len(rows)} points match {match}")
        return rows[0]["psi_mean"]


# grid construction ------------------------------------------------------

def _point(base: Base, **overrides) -> dict[str, Any]:
    params = {
        "source": base.source,
        "N": base.N,
        "S": base.S,
        "m": base.m,
        "lam": base.lam,
        "payoff": base.payoff,
        "kind": base.kind,
        "space": base.space,
        "grand_canonical": base.grand_canonical,
    }
    if base.csv:
        params.update(csv=base.csv, column=base.column, delimiter=base.delimiter)
    params.update(overrides)
    if params["space"] != "draw":
        params["S"] = GameConfig(N=1, m=params["m"], space=params["space"]).strategies_per_agent
    params["NS"] = params["N"] * params["S"]
    return params


def build_points(name: str, base: Base, grid: dict[str, tuple] | None = None) -> list[dict[str, Any]]:
    """Expand a named experiment into its list of parameter points."""
    grid = grid or {}

    def pick(key, default):
        return tuple(grid.get(key) or default)

    if name == "ns_sweep":
        b = replace(base, source=base.source or "ar3", lam=1.0 if base.lam is None else base.lam)
        points = []
        for ns in pick("ns", NS_GRID):
            if ns % 2 == 0:
                points.append(_point(b, series="S=2", N=ns // 2, S=2, space="draw"))
        for ns in pick("ns", NS_GRID):
            points.append(_point(b, series="S=5", N=max(1, round(ns / 5)), S=5, space="draw"))
        for ns in pick("ns", NS_GRID):
            points.append(_point(b, series="N=1", N=1, S=ns, space="draw"))
        points.append(_point(b, series="RSS", N=1, space="rss"))
        points.append(_point(b, series="FSS", N=1, space="fss"))
        return _dedupe(points)
    if name == "min_vs_maj":
        b = replace(base, source=base.source or "ar3", lam=1.0 if base.lam is None else base.lam,
                    space="draw")
        return [
            _point(b, N=n, kind=kind)
            for kind in ("minority", "majority")
            for n in pick("n", MIN_MAJ_N_GRID)
        ]
    if name in ("lambda_sweep", "regime_switch", "utility_trace"):
        default = {"lambda_sweep": LAMBDA_GRID, "regime_switch": REGIME_LAMBDAS,
                   "utility_trace": TRACE_LAMBDAS}[name]
        b = replace(base, source=base.source or "regime")
        return [_point(b, lam=lam) for lam in pick("lam", default)]
    if name == "m_sweep":
        b = replace(base, source=base.source or "anti", lam=0.97 if base.lam is None else base.lam)
        return [_point(b, m=m) for m in pick("m", M_GRID)]
    raise ValueError(f"unknown experiment {name!r}")


def _dedupe(points: list[dict]) -> list[dict]:
    seen, out = set(), []
    for p in points:
        key = json.dumps(p, sort_keys=True)
        if key not in seen:
            seen.add(key)
            out.append(p)
    return out


def point_config(params: dict[str, Any], seed: int) -> GameConfig:
    lam = params["lam"]
    return GameConfig(
        N=params["N"], S=params["S"], m=params["m"], lam=1.0 if lam is None else lam,
        payoff=params["payoff"], kind=params["kind"], space=params["space"],
        grand_canonical=params["grand_canonical"], seed=seed,
    )


def make_source(params: dict[str, Any], seed: int):
    if params.get("csv"):
        return load_prices(params["csv"], params.get("column", "price"), params.get("delimiter", ","))
    kind = params.get("source") or "ar3"
    if kind == "ar3":
        return ARProcess(AR3_COEFFS, seed=seed)
    if kind == "regime":
        return RegimeSwitchSource(ARProcess(AR3_COEFFS, seed=seed))
    if kind == "anti":
        return ARProcess(ANTI_COEFFS, seed=seed)
    if kind == "noise":
        return IIDNoise(seed=seed)
    raise ValueError(f"unknown source {kind!r}")


# execution --------------------------------------------------------------

@dataclass(frozen=True)
class _Task:
    point_id: int
    replica: int
    seed: int
    params: dict
    horizon: int
    trace: bool
    utilities: bool


def run_task(task: _Task) -> tuple[float, np.ndarray | None, np.ndarray | None, str | None]:
    try:
        cfg = point_config(task.params, task.seed)
        source = make_source(task.params, task.seed)
        horizon = task.horizon
        if hasattr(source, "returns"):
            horizon = min(horizon, len(source) - cfg.m)
        result = run_prediction(cfg, source, horizon, record_utilities=task.utilities)
        trace = result.psi.astype(float) if task.trace else None
        return result.psi_final, trace, result.utilities if task.utilities else None, None
    except Exception as exc:  # recorded per point; the sweep keeps going
        return math.nan, None, None, f"{type(exc).__name__}: {exc}"


def _std(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(values.std(ddof=1)) if len(values) > 1 else 0.0


def aggregate_rows(points: list[dict], raw: list[dict]) -> list[dict]:
    out = []
    for pid, params in enumerate(points):
        vals = [r["psi_final"] for r in raw if r["point_id"] == pid]
        if not vals:
            continue
        out.append({"point_id": pid, **params, "psi_mean": float(np.mean(vals)),
                    "psi_std": _std(vals), "replicas": len(vals)})
    return out


def run_experiment(spec: ExperimentSpec, only_point: int | None = None) -> SweepResult:
    """Run every (point, replica) pair and, when ``spec.out_dir`` is set, write the CSVs."""
    for params in spec.points:  # invalid grids fail before any run
        point_config(params, spec.base_seed)
    if only_point is not None and not 0 <= only_point < len(spec.points):
        raise ValueError(f"point {only_point} not in 0..{len(spec.points) - 1}")
    ids = range(len(spec.points)) if only_point is None else [only_point]
    tasks = [
        _Task(pid, r, seed, spec.points[pid], spec.horizon, spec.trace, spec.utilities and r == 0)
        for pid in ids
        for r, seed in enumerate(spec.seeds())
    ]
    if spec.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            outputs = list(pool.map(run_task, tasks, chunksize=max(1, len(tasks) // (4 * spec.jobs))))
    else:
        outputs = [run_task(t) for t in tasks]

    raw, traces, utils, failures = [], {}, {}, {}
    for task, (psi, trace, u, err) in zip(tasks, outputs):
        if err is not None:
            failures.setdefault(task.point_id, err)
            log.error("point %d replica %d failed: %s", task.point_id, task.replica, err)
            continue
        raw.append({"point_id": task.point_id, "replica": task.replica, "seed": task.seed,
                    "psi_final": psi})
        if trace is not None:
            traces[task.point_id, task.replica] = trace
        if u is not None:
            utils[task.point_id, task.replica] = u
    result = SweepResult(spec, raw, aggregate_rows(spec.points, raw), traces, utils, failures)
    if spec.out_dir is not None:
        write_outputs(result, only_point)
    return result


# output -----------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def _write_csv(path: Path, header: list[str], rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            values = [row[h] for h in header] if isinstance(row, dict) else row
            w.writerow([_fmt(v) for v in values])


def param_columns(points: list[dict]) -> list[str]:
    cols: list[str] = []
    for p in points:
        for k in p:
            if k not in cols:
                cols.append(k)
    return cols


def write_outputs(result: SweepResult, only_point: int | None = None):
    spec = result.spec
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "raw.csv", ["point_id", "replica", "seed", "psi_final"], result.raw)
    cols = ["point_id"] + param_columns(spec.points) + ["psi_mean", "psi_std", "replicas"]
    _write_csv(out / "aggregate.csv", cols, [{c: a.get(c) for c in cols} for a in result.aggregate])

    if result.traces:
        rows = []
        for pid in sorted({k[0] for k in result.traces}):
            stack = np.stack([v for (p, _), v in sorted(result.traces.items()) if p == pid])
            mean = np.nanmean(stack, axis=0)
            std = np.nanstd(stack, axis=0, ddof=1) if len(stack) > 1 else np.zeros(stack.shape[1])
            lam = spec.points[pid]["lam"]
            for t in range(stack.shape[1]):
                rows.append((pid, lam, t + 1, float(mean[t]), float(std[t])))
        _write_csv(out / "psi_trace.csv", ["point_id", "lam", "t", "psi_mean", "psi_std"], rows)

    for (pid, replica), u in sorted(result.utilities.items()):
        u = u.reshape(len(u), -1)
        header = ["t"] + [f"u{k}" for k in range(u.shape[1])]
        rows = ([t + 1] + [float(x) for x in u[t]] for t in range(len(u)))
        _write_csv(out / f"utilities_p{pid}_r{replica}.csv", header, rows)

    if spec.ceiling:
        params = spec.points[0]
        rows = [(r, seed, oracle_for(params, seed, spec.horizon)) for r, seed in enumerate(spec.seeds())]
        _write_csv(out / "ceiling.csv", ["replica", "seed", "psi_max"], rows)

    write_manifest(result, out / "manifest.txt", only_point)


def write_manifest(result: SweepResult, path: Path, only_point: int | None = None):
    spec = result.spec
    lines = [
        f"experiment={spec.name}",
        f"status={'complete' if result.complete else 'incomplete'}",
        f"base_seed={spec.base_seed}",
        f"replicas={spec.replicas}",
        f"horizon={spec.horizon}",
        f"window={spec.window}",
        f"points={len(spec.points)}",
        "seed_rule=replica seed = base_seed + replica; source and game both seeded from it",
    ]
    if only_point is not None:
        lines.append(f"only_point={only_point}")
    for pid, params in enumerate(spec.points):
        lines.append(f"point.{pid}={json.dumps(params, sort_keys=True)}")
    if result.failures:
        lines.append("incomplete=" + ",".join(str(p) for p in sorted(result.failures)))
        for pid, err in sorted(result.failures.items()):
            lines.append(f"error.{pid}={err}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path) -> dict[str, Any]:
    """Parse a manifest back into its settings and point parameters."""
    info: dict[str, Any] = {"points": {}}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        key, _, value = line.partition("=")
        if key.startswith("point."):
            info["points"][int(key.split(".", 1)[1])] = json.loads(value)
        elif key != "points":
            info[key] = value
    return info


# predict on a price file --------------------------------------------------

@dataclass
class PredictReport:
    n_prices: int
    n_steps: int
    n_scored: int
    psi_final: float
    psi_test_half: float
    wiener_psi: float
    wiener_weights: list[float]
    psi_oracle: float | None = None


def predict_prices(path, cfg: GameConfig, out_dir, column: str = "price", delimiter: str = ",",
                   window: int = 100, order: int = 1, trace: bool = False) -> PredictReport:
    """Run the predictor and the Wiener baseline over a price file and write a report.

    Files written: ``predictions.csv`` (per step), ``report.txt`` (key=value
    summary) and, with ``trace``, ``utilities.csv``.
    """
    series = load_prices(path, column, delimiter, min_prices=cfg.m + 2)
    steps = len(series) - cfg.m
    if not np.any(series.signs[cfg.m:]):
        raise InsufficientSignalError(
            f"{path}: every return after the first {cfg.m} is zero; correctness is undefined"
        )
    result = run_prediction(cfg, series, steps, record_utilities=trace)
    split = len(series) // 2
    test = result.scored.copy()
    test[: max(split - cfg.m, 0)] = False
    psi_test = float(result.hits[test].mean()) if test.any() else float("nan")
    try:
        w_psi, wf = wiener_psi(series.returns, order, np.random.default_rng([cfg.seed, 1]))
        weights = [float(w) for w in wf.weights]
    except (DegenerateInputError, ValueError) as exc:
        log.warning("Wiener baseline unavailable: %s", exc)
        w_psi, weights = float("nan"), []

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    windowed = np.full(steps, np.nan)
    scored_idx = np.flatnonzero(result.scored)
    windowed[scored_idx] = psi_windowed(result.hits[scored_idx], window)
    rows = (
        (t + 1, int(result.predicted[t]), int(result.realized[t]), int(result.hits[t]),
         float(result.psi[t]), float(windowed[t]))
        for t in range(steps)
    )
    _write_csv(out / "predictions.csv",
               ["t", "predicted", "realized", "hit", "psi_running", f"psi_window{window}"], rows)
    if trace and result.utilities is not None:
        u = result.utilities.reshape(steps, -1)
        _write_csv(out / "utilities.csv", ["t"] + [f"u{k}" for k in range(u.shape[1])],
                   ([t + 1] + [float(x) for x in u[t]] for t in range(steps)))
    report = PredictReport(len(series) + 1, steps, result.n_scored, result.psi_final, psi_test,
                           w_psi, weights)
    lines = [f"source={path}", f"column={column}",
             f"config={json.dumps(config_dict(cfg), sort_keys=True)}"]
    lines += [f"{k}={_fmt(v)}" for k, v in report.__dict__.items() if v is not None]
    lines.append(f"skipped_zero_returns={steps - result.n_scored}")
    (out / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return report


def config_dict(cfg: GameConfig) -> dict[str, Any]:
    return {"N": cfg.N, "S": cfg.strategies_per_agent, "m": cfg.m, "lam": cfg.lam,
            "payoff": cfg.payoff.value, "kind": cfg.kind.value, "space": cfg.space.value,
            "grand_canonical": cfg.grand_canonical, "seed": cfg.seed}


def oracle_for(params: dict[str, Any], seed: int, horizon: int) -> float:
    """Ceiling psi of the point's synthetic source on the replica's realization."""
    source = make_source(params, seed)
    return psi_max_oracle(source, source.samples(horizon + params["m"]), seed)
