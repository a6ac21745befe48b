"""Experiment runner: JSON configs, seeded replications, CSV/JSON outputs.

Verbs:
  run <config.json> [--out DIR] [--trace] [--parallel N]
  bench-lp <config.json>      print per-segment LP values, margin, pacing value
  validate <config.json>      schema-check only

Exit codes: 0 success, 2 config error, 3 runtime error.  Outputs are
byte-identical across reruns and across parallelism degrees: replication r
always uses seed base_seed + r and rows are written in replication order.
"""

from __future__ import annotations

import argparse
import csv
import gzip
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from math import log
from pathlib import Path

import numpy as np

from .benchmark import instance_lps, instance_slater_margin, metrics, pacing_benchmark
from .duals import dual_init
from .env import (
    ConstraintSpec,
    InstanceSpec,
    NoiseSpec,
    OutcomeModel,
    normalize_instance,
)
from .orchestrator import RunConfig, game_setup, run
from .primal_bandit import NoncontextualPrimal, adv_bandit_init
from .regression import FiniteClassOracle, LinearOracle, OgdOracle, singleton_class
from .squarecb import IgwConfig, RegressionPrimal, squarecb_gamma

PRIMALS = ("squarecb", "exp3p", "exp3s")
DUALS = ("hedge", "fixed_share")
FLOAT_FMT = ".12g"


class ConfigError(Exception):
    """Carries the list of schema violations, one per offending field."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass
class SquareCbSettings:
    regression: dict
    normalization: str = "binary_search"
    gamma: float | None = None
    error_bound: float | None = None


@dataclass
class ExperimentConfig:
    instance: InstanceSpec
    primal: str
    dual: str
    num_switches_hint: int | None
    squarecb: SquareCbSettings | None
    run: RunConfig
    replications: int
    base_seed: int
    echo: dict


def _require(condition, violations, message):
    if not condition:
        violations.append(message)
    return condition


def _parse_instance(doc: dict, violations: list) -> InstanceSpec | None:
    try:
        horizon = int(doc["horizon"])
        num_arms = int(doc["num_arms"])
        resources = doc["resources"]
        segments = doc["segments"]
    except (KeyError, TypeError, ValueError) as exc:
        violations.append(f"instance: missing or malformed field ({exc})")
        return None
    contexts = doc.get("contexts", [{"id": "x0", "prob": 1.0}])
    probs = np.array([c.get("prob", 0.0) for c in contexts], dtype=float)
    ids = tuple(str(c.get("id", f"x{j}")) for j, c in enumerate(contexts))
    signs = np.array([r.get("sign", 1) for r in resources], dtype=int)
    budgets = np.array([r.get("budget", 0.0) for r in resources], dtype=float)
    is_time = np.array([bool(r.get("is_time", False)) for r in resources])
    d = len(resources)
    seg_pairs = []
    for k, seg in enumerate(segments):
        rewards = np.asarray(seg.get("rewards"), dtype=float)
        cons = np.asarray(seg.get("consumptions"), dtype=float)
        noise_doc = seg.get("noise")
        if noise_doc is None:
            noise = tuple(NoiseSpec("deterministic") for _ in range(d + 1))
        else:
            try:
                noise = tuple(
                    NoiseSpec(n.get("kind", "deterministic"), float(n.get("std", 0.0)))
                    for n in noise_doc
                )
            except ValueError as exc:
                violations.append(f"instance.segments[{k}].noise: {exc}")
                return None
        try:
            model = OutcomeModel(
                np.concatenate([rewards[:, :, None], cons], axis=2), noise
            )
        except (ValueError, IndexError) as exc:
            violations.append(f"instance.segments[{k}]: {exc}")
            return None
        seg_pairs.append((int(seg.get("start_round", 1)), model))
    try:
        raw = InstanceSpec(
            horizon=horizon,
            num_arms=num_arms,
            constraints=ConstraintSpec(signs, budgets, is_time),
            context_probs=probs,
            segments=tuple(seg_pairs),
            context_ids=ids,
            null_arm=doc.get("null_arm"),
        )
        return normalize_instance(raw)
    except ValueError as exc:
        violations.append(f"instance: {exc}")
        return None


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a config document; raises ConfigError listing all problems."""
    violations: list[str] = []
    inst_doc = doc.get("instance")
    if inst_doc is None and "instance_file" in doc:
        try:
            inst_doc = json.loads(Path(doc["instance_file"]).read_text())
        except OSError as exc:
            violations.append(f"instance_file: {exc}")
    instance = None
    if _require(inst_doc is not None, violations, "instance: required"):
        instance = _parse_instance(inst_doc, violations)

    algo = doc.get("algorithms", {})
    primal = algo.get("primal", "exp3p")
    dual = algo.get("dual", "hedge")
    _require(primal in PRIMALS, violations, f"algorithms.primal: unknown {primal!r}")
    _require(dual in DUALS, violations, f"algorithms.dual: unknown {dual!r}")
    hint = algo.get("num_switches_hint")
    if hint is not None:
        hint = int(hint)
        _require(hint >= 0, violations, "algorithms.num_switches_hint: must be >= 0")

    sq = None
    if primal == "squarecb":
        sq_doc = algo.get("squarecb", {})
        reg = sq_doc.get("regression")
        if _require(
            reg is not None, violations, "algorithms.squarecb.regression: required for squarecb"
        ):
            kind = reg.get("kind")
            _require(
                kind in ("finite", "linear", "ogd"),
                violations,
                f"algorithms.squarecb.regression.kind: unknown {kind!r}",
            )
            sq = SquareCbSettings(
                regression=reg,
                normalization=sq_doc.get("normalization", "binary_search"),
                gamma=sq_doc.get("gamma"),
                error_bound=sq_doc.get("error_bound"),
            )
            _require(
                sq.normalization in ("binary_search", "closed_form"),
                violations,
                "algorithms.squarecb.normalization: unknown mode",
            )
    elif instance is not None:
        _require(
            instance.num_contexts == 1,
            violations,
            f"algorithms.primal: {primal} requires a single context",
        )

    run_doc = doc.get("run", {})
    run_cfg = None
    try:
        run_cfg = RunConfig(
            mode=run_doc.get("mode", "standard"),
            eta_mode=run_doc.get("eta_mode", "slater"),
            zeta=run_doc.get("zeta"),
            regret_estimate=run_doc.get("regret_estimate"),
            epsilon=float(run_doc.get("epsilon", 0.0)),
            delta=float(run_doc.get("delta", 0.05)),
            tight_payoff_bounds=bool(run_doc.get("tight_payoff_bounds", True)),
        )
        if run_cfg.eta_mode == "slater" and (run_cfg.zeta is None or run_cfg.zeta <= 0):
            violations.append("run.zeta: slater mode requires a positive margin")
        if run_cfg.eta_mode == "general" and not run_cfg.regret_estimate:
            violations.append("run.regret_estimate: required in general mode")
    except ValueError as exc:
        violations.append(f"run: {exc}")

    replications = int(doc.get("replications", 1))
    _require(replications >= 1, violations, "replications: must be >= 1")
    base_seed = int(doc.get("base_seed", 0))

    if violations:
        raise ConfigError(violations)
    return ExperimentConfig(
        instance=instance,
        primal=primal,
        dual=dual,
        num_switches_hint=hint,
        squarecb=sq,
        run=run_cfg,
        replications=replications,
        base_seed=base_seed,
        echo=doc,
    )


def load_config(path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError([f"config file: {exc}"]) from exc
    return parse_config(doc)


def _rescaled_candidates(tables, coord: int, raw_budgets, B: float, shift: float):
    """Candidate tables live in outcome space, so they rescale with the
    instance normalization (and shift with reported consumptions)."""
    tables = np.asarray(tables, dtype=float)
    if coord == 0:
        return tables
    return tables * (B / raw_budgets[coord - 1]) - shift


def _build_regression_oracles(config: ExperimentConfig, setup):
    instance = config.instance
    reg = config.squarecb.regression
    d = instance.num_resources
    shift = setup.consumption_shift
    raw_doc = config.echo.get("instance") or json.loads(
        Path(config.echo["instance_file"]).read_text()
    )
    raw_budgets = np.array([r.get("budget") for r in raw_doc["resources"]], dtype=float)
    auto_time = len(raw_budgets) == d - 1  # time resource appended, as last coord
    B = instance.budget
    oracles = []
    for coord in range(d + 1):
        lo, hi = (0.0, 1.0) if coord == 0 else (-1.0 - shift[coord - 1], 1.0)
        if auto_time and coord == d:
            # synthetic time coordinate: deterministic singleton class
            table = np.full((instance.num_contexts, instance.num_arms), B / instance.horizon)
            oracles.append(FiniteClassOracle(singleton_class(table), lo, hi))
            continue
        kind = reg["kind"]
        if kind == "finite":
            cands = _rescaled_candidates(
                reg["candidates"][coord], coord, raw_budgets, B,
                shift[coord - 1] if coord else 0.0,
            )
            alpha = 0.0
            if config.num_switches_hint:
                alpha = config.num_switches_hint / (instance.horizon - 1)
            oracles.append(FiniteClassOracle(cands, lo, hi, share_alpha=alpha))
        elif kind == "linear":
            feats = np.asarray(reg["features"], dtype=float)
            oracles.append(LinearOracle(feats, lo, hi, ridge=float(reg.get("ridge", 1.0))))
        else:
            feats = np.asarray(reg["features"], dtype=float)
            oracles.append(OgdOracle(feats, lo, hi, lr_scale=float(reg.get("lr_scale", 0.5))))
    return oracles


def default_error_bound(config: ExperimentConfig) -> float:
    """Realizability-style budget for the gamma formula: ln|F| plus the
    confidence term at per-oracle failure probability delta / (d+1)."""
    d = config.instance.num_resources
    delta = config.run.delta
    reg = config.squarecb.regression
    if reg["kind"] == "finite":
        size = len(reg["candidates"][0])
        base = log(max(size, 2))
    else:
        b = np.asarray(reg["features"]).shape[-1]
        base = b * log(max(config.instance.horizon / max(b, 1), 2.0))
    return base + log(2.0 * (d + 1) / delta)


def build_players(config: ExperimentConfig, setup):
    """Fresh primal and dual players for one replication."""
    instance = config.instance
    T, K, d = instance.horizon, instance.num_arms, instance.num_resources
    params = setup.params
    hint = config.num_switches_hint
    dual = dual_init(
        d, T, params.payoff_lo, params.payoff_hi,
        num_switches_hint=hint if config.dual == "fixed_share" else None,
    )
    if config.primal == "squarecb":
        oracles = _build_regression_oracles(config, setup)
        gamma = config.squarecb.gamma
        if gamma is None:
            U = config.squarecb.error_bound or default_error_bound(config)
            gamma = squarecb_gamma(setup.game_budget, T, K, d, U)
        igw = IgwConfig(gamma=gamma, normalization_mode=config.squarecb.normalization)
        primal = RegressionPrimal(oracles, igw, params, setup.signs)
    else:
        state = adv_bandit_init(
            K, T, config.run.delta, params.payoff_lo, params.payoff_hi,
            num_switches_hint=hint if config.primal == "exp3s" else None,
        )
        primal = NoncontextualPrimal(state)
    return primal, dual


def run_replication(config: ExperimentConfig, replication: int, lps=None, keep_log=False):
    """One seeded replication: returns (metrics row dict, log or None)."""
    rcfg = replace(config.run, seed=config.base_seed + replication)
    setup = game_setup(config.instance, rcfg)
    primal, dual = build_players(config, setup)
    log = run(config.instance, primal, dual, rcfg)
    report = metrics(log, config.instance, lps=lps)
    row = {
        "replication": replication,
        "seed": rcfg.seed,
        "total_reward": report.total_reward,
        "opt": report.opt,
        "opt_pac": report.opt_pac,
        "regret": report.regret,
        **{f"v_{i + 1}": float(v) for i, v in enumerate(report.violations)},
        "reg_out": report.reg_out,
        "reg_pace": report.reg_pace,
        "primal_reg": report.primal_regret,
        "dual_reg": report.dual_regret,
        "nu_measured": report.nu_measured,
        "stop_round": report.stop_round if report.stop_round is not None else -1,
    }
    return row, (log if keep_log else None)


def _worker(args):
    config, replication, keep_log = args
    return run_replication(config, replication, keep_log=keep_log)


def run_experiment(config: ExperimentConfig, parallel: int = 1, keep_logs: bool = False):
    """All replications, in replication order regardless of scheduling."""
    tasks = [(config, r, keep_logs) for r in range(config.replications)]
    if parallel > 1 and config.replications > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(_worker, tasks))
    else:
        results = [_worker(t) for t in tasks]
    rows = [row for row, _ in results]
    logs = [lg for _, lg in results]
    return {"rows": rows, "logs": logs, "config": config}


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, FLOAT_FMT)
    return str(value)


def _summary_stats(rows) -> dict:
    stats = {}
    keys = [k for k in rows[0] if k not in ("replication", "seed")]
    for key in keys:
        vals = np.array([float(r[key]) for r in rows])
        q1, med, q3 = np.percentile(vals, [25, 50, 75])
        stats[key] = {"median": med, "iqr": [q1, q3]}
    return stats


def emit_results(bundle, out_dir, trace: bool = False) -> list[Path]:
    """Write runs.csv, summary.json and optionally trace.csv.gz."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = bundle["rows"]
    config: ExperimentConfig = bundle["config"]
    written = []

    runs_path = out / "runs.csv"
    with open(runs_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(rows[0].keys())
        for row in rows:
            writer.writerow([_fmt(v) for v in row.values()])
    written.append(runs_path)

    summary_path = out / "summary.json"
    summary = {"config": config.echo, "replications": len(rows), "stats": _summary_stats(rows)}
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    written.append(summary_path)

    if trace:
        trace_path = out / "trace.csv.gz"
        d = config.instance.num_resources
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(
            ["replication", "round", "context", "arm", "reward"]
            + [f"c_{i + 1}" for i in range(d)]
            + [f"lambda_{i + 1}" for i in range(d)]
            + ["payoff"]
        )
        for r, lg in enumerate(bundle["logs"]):
            if lg is None:
                continue
            for t in range(lg.num_rounds):
                writer.writerow(
                    [r, t + 1, int(lg.contexts[t]), int(lg.arms[t]),
                     _fmt(float(lg.outcomes[t, 0]))]
                    + [_fmt(float(v)) for v in lg.outcomes[t, 1:]]
                    + [_fmt(float(v)) for v in lg.lambdas[t]]
                    + [_fmt(float(lg.payoffs[t]))]
                )
        with gzip.GzipFile(trace_path, "wb", mtime=0) as gz:
            gz.write(buf.getvalue().encode())
        written.append(trace_path)
    return written


def _cmd_run(args) -> int:
    config = load_config(args.config)
    bundle = run_experiment(config, parallel=args.parallel, keep_logs=args.trace)
    written = emit_results(bundle, args.out, trace=args.trace)
    for path in written:
        print(path)
    return 0


def _cmd_bench_lp(args) -> int:
    config = load_config(args.config)
    spec = config.instance
    lps = instance_lps(spec)
    for j, lp in enumerate(lps):
        value = format(lp.value, FLOAT_FMT) if lp.ok else lp.status
        print(f"segment {j}: opt_lp {value}")
    print(f"slater_margin {format(instance_slater_margin(spec), FLOAT_FMT)}")
    print(f"opt_pac {format(pacing_benchmark(spec, lps), FLOAT_FMT)}")
    return 0


def _cmd_validate(args) -> int:
    load_config(args.config)
    print("ok")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="pdbandits", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default="out")
    p_run.add_argument("--trace", action="store_true")
    p_run.add_argument("--parallel", type=int, default=1)
    p_run.set_defaults(func=_cmd_run)
    p_lp = sub.add_parser("bench-lp", help="print LP benchmark values")
    p_lp.add_argument("config")
    p_lp.set_defaults(func=_cmd_bench_lp)
    p_val = sub.add_parser("validate", help="validate a config file")
    p_val.add_argument("config")
    p_val.set_defaults(func=_cmd_validate)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - runtime failures map to exit 3
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
