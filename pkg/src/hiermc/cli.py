"""Command-line interface.

Subcommands: generate, estimate, threshold, regime-grid, sweep,
adversarial-check, selftest. Configuration comes from a JSON file with
sections (params, delta, ground_truth, estimator, sweep, grid, baseline,
adversarial); a few flags override config values. Exit codes: 0 success,
1 configuration/usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import adversarial, experiments, threshold
from .estimators import EstimatorConfig, exact_ml, practical_estimate
from .likelihood import neg_log_likelihood
from .mds import build_code
from .modelgen import (
    DeltaPair,
    GroundTruthConfig,
    ModelParams,
    instance_from_json,
    instance_to_json,
    matrix_to_csv,
)


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _params_from_config(cfg: dict, overrides: dict | None = None) -> ModelParams:
    if "params" not in cfg:
        raise ConfigError("config is missing the 'params' section")
    vals = dict(cfg["params"])
    vals.setdefault("p", 0.0)
    if overrides:
        vals.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ModelParams(**vals)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid params: {exc}") from exc


def _delta_from_config(cfg: dict) -> DeltaPair:
    d = cfg.get("delta")
    if d is None:
        raise ConfigError("config is missing the 'delta' section (tau1/tau2)")
    return DeltaPair(d.get("tau1"), d.get("tau2"))


def _gt_config(cfg: dict) -> GroundTruthConfig:
    try:
        return GroundTruthConfig.from_dict(cfg.get("ground_truth", {}))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_generate(args) -> int:
    cfg = _load_config(args.config)
    params = _params_from_config(cfg, {"p": args.p})
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    seq = np.random.SeedSequence([int(seed)])
    inst = experiments.generate_instance(params, _gt_config(cfg), seq)
    inst.seed = int(seed)
    text = instance_to_json(inst)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if args.csv:
        matrix_to_csv(inst.matrix.entries, args.csv)
    return 0


def _cmd_estimate(args) -> int:
    cfg = _load_config(args.config)
    est_section = cfg.get("estimator", {})
    kind = est_section.get("kind", "practical")
    est_cfg = EstimatorConfig.from_dict(est_section.get("config", {}))
    if args.instance:
        with open(args.instance, "r", encoding="utf-8") as fh:
            inst = instance_from_json(fh.read())
        if inst.observation is None or inst.graph is None:
            raise ConfigError("instance file lacks an observation or graph")
        params = inst.params
    else:
        params = _params_from_config(cfg, {"p": args.p})
        seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        inst = experiments.generate_instance(
            params, _gt_config(cfg), np.random.SeedSequence([int(seed)])
        )
    if kind == "exact":
        est = exact_ml(inst.observation, inst.graph, params)
    else:
        est = practical_estimate(
            inst.observation, inst.graph, params, est_cfg, seed=args.seed or 0
        )
    gt_score = neg_log_likelihood(
        inst.observation, inst.graph, inst.matrix, inst.partition, params
    )
    report = {
        "estimator": kind,
        "score": est.score,
        "ground_truth_score": gt_score,
        "success": bool(np.array_equal(est.matrix.entries, inst.matrix.entries)),
        "diagnostics": est.diagnostics,
    }
    text = json.dumps(report, indent=2, default=str)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _cmd_threshold(args) -> int:
    cfg = _load_config(args.config)
    params = _params_from_config(cfg)
    delta = _delta_from_config(cfg)
    res = threshold.p_star(params, delta)
    report = {
        "p_star": res.p_star,
        "branches": list(res.branches),
        "floored": list(res.floored),
        "regime": res.regime,
        "feasible": res.feasible,
    }
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _cmd_regime_grid(args) -> int:
    cfg = _load_config(args.config)
    params = _params_from_config(cfg)
    delta = _delta_from_config(cfg)
    grid = cfg.get("grid", {})
    cells = threshold.regime_grid(
        params,
        delta,
        i_g_range=tuple(grid.get("i_g_range", (0.0, 50.0))),
        i_c2_range=tuple(grid.get("i_c2_range", (0.0, 10.0))),
        resolution=grid.get("resolution", 41),
        gamma=grid.get("gamma", 1.0),
    )
    if not args.out:
        raise ConfigError("regime-grid requires --out")
    threshold.write_regime_grid_csv(cells, args.out)
    print(f"wrote {len(cells)} grid cells to {args.out}")
    return 0


def _cmd_baseline(args) -> int:
    cfg = _load_config(args.config)
    params = _params_from_config(cfg)
    delta = _delta_from_config(cfg)
    spec = cfg.get("baseline", {})
    points = threshold.baseline_comparison(
        params,
        delta,
        i_g_range=tuple(spec.get("i_g_range", (0.0, 50.0))),
        npoints=spec.get("npoints", 101),
    )
    if not args.out:
        raise ConfigError("baseline requires --out")
    threshold.write_baseline_csv(points, args.out)
    print(f"wrote {len(points)} baseline points to {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    if "sweep" not in cfg:
        raise ConfigError("config is missing the 'sweep' section")
    section = dict(cfg["sweep"])
    section.setdefault("base_params", cfg.get("params", {}))
    section["base_params"] = {
        k: v for k, v in section["base_params"].items() if k not in ("n", "m", "p")
    }
    if args.seed is not None:
        section["master_seed"] = args.seed
    if args.threads is not None:
        section["workers"] = args.threads
    if "ground_truth" not in section and "ground_truth" in cfg:
        section["ground_truth"] = cfg["ground_truth"]
    if "estimator_config" not in section and "estimator" in cfg:
        section["estimator_config"] = cfg["estimator"].get("config", {})
        section.setdefault("estimator", cfg["estimator"].get("kind", "practical"))
    try:
        sweep_cfg = experiments.SweepConfig.from_dict(section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid sweep config: {exc}") from exc
    rows = experiments.sweep(sweep_cfg, args.out)
    print(f"completed {len(rows)} new points" + (f" -> {args.out}" if args.out else ""))
    return 0


def _cmd_adversarial(args) -> int:
    cfg = _load_config(args.config)
    params = _params_from_config(cfg)
    spec = cfg.get("adversarial", {})
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    p_values = spec.get("p_values")
    ratios = spec.get("ratios", [0.3, 3.0])
    max_count = spec.get("max_columns", 32)
    seq = np.random.SeedSequence([int(seed)])
    gt_cfg = _gt_config(cfg)
    report = {"seed": int(seed), "fractions": []}
    base_inst = experiments.generate_instance(params.replace(p=0.5), gt_cfg, seq)
    delta = base_inst.delta
    ref = threshold.p_star(params, delta)
    if p_values is None:
        p_values = [min(1.0, r * ref.p_star) for r in ratios]
    code = build_code(params.g, params.r, params.q)
    cands = adversarial.column_candidates(
        base_inst.matrix, base_inst.vectors, code, max_count
    )
    for p in p_values:
        pp = params.replace(p=float(p))
        seq_p = np.random.SeedSequence([int(seed), int(round(1e9 * p))])
        inst = experiments.generate_instance(pp, gt_cfg, seq_p)
        frac = adversarial.converse_check(
            inst.observation, inst.graph, inst.matrix,
            adversarial.column_candidates(inst.matrix, inst.vectors, code, max_count),
            pp,
        )
        report["fractions"].append({"p": float(p), "fraction": frac})
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _cmd_selftest(args) -> int:
    failures = experiments.selftest(verbose=True)
    return 0 if failures == 0 else 2


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hiermc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("generate", help="generate an instance JSON")
    common(p)
    p.add_argument("--p", type=float, default=None, help="observation probability")
    p.add_argument("--csv", default=None, help="also export the dense matrix as CSV")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("estimate", help="run an estimator on an instance")
    common(p)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--instance", default=None, help="instance JSON from `generate`")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("threshold", help="print p*, branch values and regime")
    common(p)
    p.set_defaults(func=_cmd_threshold)

    p = sub.add_parser("regime-grid", help="emit the regime map CSV")
    common(p)
    p.set_defaults(func=_cmd_regime_grid)

    p = sub.add_parser("baseline", help="emit the baseline comparison CSV")
    common(p)
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("sweep", help="run a Monte-Carlo success-rate sweep")
    common(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("adversarial-check", help="converse failure-fraction report")
    common(p)
    p.set_defaults(func=_cmd_adversarial)

    p = sub.add_parser("selftest", help="run the oracle-equivalence checks")
    p.set_defaults(func=_cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
