"""Command-line interface.

Subcommands::

    contagionfit fit        fit one rule to an observed order, optional CIs
    contagionfit simulate   simulate spread on a loaded or generated network
    contagionfit compare    fit several rules and rank them by AICc
    contagionfit experiment run a Monte-Carlo experiment from a JSON spec

Indices are 1-based on the command line and in all files; exit codes are
0 success, 1 input error, 2 fit non-convergence (or failed comparison rows).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from .experiments import (
    CalibrationError,
    ExperimentConfig,
    calibrate_ci,
    expand_grid,
    run_coverage_experiment,
    run_manifest,
    run_selection_experiment,
    write_coverage_csv,
    write_selection_csv,
)
from .fit import FitConfig, compare_models, fit_oada
from .network import GeneratorConfig, Network, generate_network, load_network_csv, write_network_csv
from .oada import DiffusionData, load_order_file, parse_order_text, write_order_file
from .profile_ci import ProfileConfig, profile_ci
from .rules import rule_from_name
from .simulate import simulate_diffusion, write_trace_csv

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOCONV = 2


class _Parser(argparse.ArgumentParser):
    # input errors must exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_INPUT


def _parse_floats(text: str, flag: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError:
        raise ValueError(f"{flag} expects comma-separated numbers, got {text!r}") from None


def _parse_fixes(pairs) -> dict[str, float]:
    fixes: dict[str, float] = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ValueError(f"--fix expects name=value, got {pair!r}")
        name, _, value = pair.partition("=")
        try:
            fixes[name.strip()] = float(value)
        except ValueError:
            raise ValueError(f"--fix {pair!r}: value is not a number") from None
    return fixes


def _build_rule(name: str, fixes: dict[str, float], estimate_b: bool, f_lower: float | None):
    name = name.strip().lower()
    kwargs = {}
    if name == "threshold":
        if "b" in fixes:
            kwargs["sharpness"] = fixes.pop("b")
        if estimate_b:
            kwargs["estimate_sharpness"] = True
    if name == "freqdep" and f_lower is not None:
        kwargs["f_lower"] = f_lower
    rule = rule_from_name(name, **kwargs)
    if fixes:
        raise ValueError(
            f"rule {name!r} has no fixable constant named {sorted(fixes)[0]!r}"
        )
    return rule


def _load_order(value: str) -> np.ndarray:
    if os.path.exists(value):
        return load_order_file(value)
    return parse_order_text(value)


def _load_data(args) -> DiffusionData:
    network = load_network_csv(args.network, header=args.header)
    order = _load_order(args.order)
    return DiffusionData(network=network, order=order, label=args.network)


def _fit_config(args) -> FitConfig:
    return FitConfig(
        start=_parse_floats(args.start, "--start") if args.start else None,
        lower=_parse_floats(args.lower, "--lower") if getattr(args, "lower", None) else None,
        upper=_parse_floats(args.upper, "--upper") if getattr(args, "upper", None) else None,
        restarts=args.restarts,
        tolerance=args.tolerance,
        max_evals=args.max_evals,
        seed=args.seed,
    )


def _format_value(v: float) -> str:
    return f"{v:.6g}"


def cmd_fit(args) -> int:
    data = _load_data(args)
    rule = _build_rule(args.rule, _parse_fixes(args.fix), args.estimate_b, args.f_lower)
    cfg = _fit_config(args)
    result = fit_oada(data, rule, cfg)

    report = result.report_dict()
    report["label"] = args.label or args.network
    report["n_individuals"] = data.network.n
    if args.ci and rule.n_params > 0:
        prof_cfg = ProfileConfig(cutoff=args.cutoff)
        cis = [profile_ci(result, i, config=prof_cfg) for i in range(rule.n_params)]
        report["ci"] = [ci.report_dict() for ci in cis]
    else:
        cis = []

    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    if args.json or not args.out:
        if args.json:
            print(text)
        else:
            _print_fit_summary(result, cis)
    if not result.converged:
        print("warning: optimizer did not meet tolerance", file=sys.stderr)
        return EXIT_NOCONV
    return EXIT_OK


def _print_fit_summary(result, cis) -> None:
    print(f"rule: {result.rule.kind}")
    print(f"events: {result.table.n_events}   individuals: {result.data.network.n}")
    for i, name in enumerate(result.param_names):
        se = "-" if result.se is None else _format_value(result.se[i])
        bound = "  (at bound)" if result.boundary_flags[i] else ""
        print(f"  {name} = {_format_value(result.mle[i])}   SE {se}{bound}")
    for k, v in result.rule.fixed.items():
        print(f"  {k} = {_format_value(v)}   (fixed)")
    print(f"nll: {_format_value(result.nll)}   aicc: {_format_value(result.aicc)}")
    print(f"converged: {'yes' if result.converged else 'NO'}   evals: {result.n_evals}")
    for ci in cis:
        lo = "-inf" if ci.lower_open else _format_value(ci.lower)
        hi = "+inf (open)" if ci.upper_open else _format_value(ci.upper)
        bound = "  (includes bound)" if ci.at_lower_bound or ci.at_upper_bound else ""
        print(f"  CI[{ci.param_name}] (cutoff {ci.cutoff:g}): [{lo}, {hi}]{bound}")
    for note in result.notes:
        print(f"note: {note}")


def _parse_generator(spec: str) -> GeneratorConfig:
    if os.path.exists(spec):
        with open(spec) as fh:
            doc = json.load(fh)
        return _generator_from_dict(doc, where=spec)
    if "=" not in spec:
        raise ValueError(
            f"--generate expects key=value pairs or a JSON file path, got {spec!r}"
        )
    alias = {"n": "n", "threshold": "sparsity_threshold", "mult": "multiplier_max",
             "seed": "seed", "sparsity_threshold": "sparsity_threshold",
             "multiplier_max": "multiplier_max"}
    kwargs = {}
    for pair in spec.split(","):
        key, _, value = pair.partition("=")
        key = key.strip()
        if key not in alias:
            raise ValueError(f"--generate: unknown key {key!r}")
        field = alias[key]
        kwargs[field] = int(float(value)) if field in ("n", "seed") else float(value)
    return GeneratorConfig(**kwargs)


def _generator_from_dict(doc: dict, where: str = "generator") -> GeneratorConfig:
    allowed = {"n", "sparsity_threshold", "multiplier_max", "seed"}
    bad = set(doc) - allowed
    if bad:
        raise ValueError(f"{where}: unknown generator field {sorted(bad)[0]!r}")
    return GeneratorConfig(**doc)


def cmd_simulate(args) -> int:
    if bool(args.network) == bool(args.generate):
        return _fail("simulate needs exactly one of --network or --generate")
    if args.network:
        network = load_network_csv(args.network, header=args.header)
    else:
        network = generate_network(_parse_generator(args.generate))
    rule = _build_rule(args.rule, _parse_fixes(args.fix), args.estimate_b, args.f_lower)
    params = _parse_floats(args.params, "--params") if args.params else ()
    if len(params) != rule.n_params:
        raise ValueError(
            f"rule {rule.kind!r} takes {rule.n_params} parameter(s) "
            f"{rule.param_names}; got {len(params)} via --params"
        )
    initial = tuple(int(i) - 1 for i in _parse_floats(args.initial, "--initial")) if args.initial else ()
    data, trace = simulate_diffusion(
        network,
        rule,
        params,
        seed=args.seed,
        stop_after=args.stop_after,
        initially_informed=initial,
        label=args.label,
    )
    if args.out:
        write_order_file(data.order, f"{args.out}_order.txt")
        write_trace_csv(trace, f"{args.out}_trace.csv")
        if args.generate:
            write_network_csv(network, f"{args.out}_network.csv")
    else:
        print(",".join(str(int(i) + 1) for i in data.order))
    return EXIT_OK


def cmd_compare(args) -> int:
    data = _load_data(args)
    names = [tok.strip() for tok in args.rules.split(",") if tok.strip()]
    if not names:
        return _fail("--rules must name at least one rule")
    rules = [
        _build_rule(name, _parse_fixes(args.fix), args.estimate_b, args.f_lower)
        for name in names
    ]
    kinds = [r.kind for r in rules]
    if len(set(kinds)) != len(kinds):
        return _fail(f"duplicate rules requested: {','.join(kinds)}")

    cfg = FitConfig(restarts=args.restarts, tolerance=args.tolerance,
                    max_evals=args.max_evals, seed=args.seed)
    fits = []
    failed: list[str] = []
    for rule in rules:
        try:
            fits.append(fit_oada(data, rule, cfg))
        except Exception as exc:  # a failed row must not sink the table
            failed.append(rule.kind)
            print(f"warning: fit of {rule.kind!r} failed: {exc}", file=sys.stderr)

    rows = compare_models(fits) if fits else []
    out_rows = [
        {
            "model": r.rule_kind,
            "k": r.k,
            "nll": repr(float(r.nll)),
            "aicc": repr(float(r.aicc_value)) if math.isfinite(r.aicc_value) else "inf",
            "delta_aicc": repr(float(r.delta_aicc)) if math.isfinite(r.delta_aicc) else "inf",
            "favored": str(r.favored).lower(),
        }
        for r in rows
    ]
    for kind in failed:
        out_rows.append(
            {"model": kind, "k": "", "nll": "", "aicc": "", "delta_aicc": "",
             "favored": "false"}
        )
    header = ["model", "k", "nll", "aicc", "delta_aicc", "favored"]
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=header)
            writer.writeheader()
            writer.writerows(out_rows)
    else:
        print(",".join(header))
        for row in out_rows:
            print(",".join(str(row[c]) for c in header))
    return EXIT_NOCONV if failed else EXIT_OK


# --- experiment specs ---

def _rule_from_spec(doc, where: str):
    if not isinstance(doc, dict) or "name" not in doc:
        raise ValueError(f"{where}: expected an object with a 'name' field")
    extra = set(doc) - {"name", "b", "estimate_b", "f_lower"}
    if extra:
        raise ValueError(f"{where}: unknown field {sorted(extra)[0]!r}")
    kwargs = {}
    if doc["name"] == "threshold":
        if "b" in doc:
            kwargs["sharpness"] = float(doc["b"])
        if doc.get("estimate_b"):
            kwargs["estimate_sharpness"] = True
    if doc["name"] == "freqdep" and "f_lower" in doc:
        kwargs["f_lower"] = float(doc["f_lower"])
    return rule_from_name(str(doc["name"]), **kwargs)


def _require(spec: dict, field: str, kind, where: str = "spec"):
    if field not in spec:
        raise ValueError(f"{where}: missing required field {field!r}")
    value = spec[field]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ValueError(f"{where}: field {field!r} has the wrong type")
    return value


def _experiment_config(spec: dict, args) -> ExperimentConfig:
    generator = _generator_from_dict(_require(spec, "generator", dict), "generator")
    true_rule = _rule_from_spec(_require(spec, "true_rule", dict), "true_rule")
    grid_axes = _require(spec, "grid", dict)
    grid = expand_grid(
        true_rule, {k: [float(v) for v in vs] for k, vs in grid_axes.items()}
    )
    candidates = tuple(
        _rule_from_spec(d if isinstance(d, dict) else {"name": d}, "candidates")
        for d in spec.get("candidates", [])
    )
    reps = args.reps if args.reps is not None else _require(spec, "reps", int)
    seed = args.seed if args.seed is not None else int(spec.get("seed", 0))
    fit_doc = spec.get("fit", {})
    fit_cfg = FitConfig(
        restarts=int(fit_doc.get("restarts", 8)),
        tolerance=float(fit_doc.get("tolerance", 1e-8)),
        max_evals=int(fit_doc.get("max_evals", 20000)),
    )
    prof_doc = spec.get("profile", {})
    prof_cfg = ProfileConfig(
        cutoff=float(prof_doc.get("cutoff", 1.92)),
        inner_restarts=int(prof_doc.get("inner_restarts", 2)),
        inner_max_evals=int(prof_doc.get("inner_max_evals", 4000)),
    )
    try:
        return ExperimentConfig(
            generator=generator,
            true_rule=true_rule,
            grid=grid,
            candidates=candidates,
            reps=int(reps),
            base_seed=seed,
            fit=fit_cfg,
            profile=prof_cfg,
        )
    except ValueError as exc:
        raise ValueError(f"spec: {exc}") from None


def cmd_experiment(args) -> int:
    with open(args.spec) as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            return _fail(f"{args.spec}: invalid JSON ({exc})")
    kind = args.kind or spec.get("kind")
    if kind not in ("selection", "coverage", "calibrate"):
        return _fail("spec: field 'kind' must be selection, coverage or calibrate")
    os.makedirs(args.out_dir, exist_ok=True)

    if kind == "calibrate":
        return _run_calibrate_spec(spec, args)

    config = _experiment_config(spec, args)
    if kind == "selection":
        result = run_selection_experiment(config, threads=args.threads)
        write_selection_csv(result, os.path.join(args.out_dir, "selection.csv"))
        extra = {}
    else:
        result = run_coverage_experiment(config, threads=args.threads)
        write_coverage_csv(result, os.path.join(args.out_dir, "coverage.csv"))
        extra = {"skipped_non_identified": list(result.skipped)}
    manifest = run_manifest(
        config,
        kind,
        result.runtime_s,
        threads=args.threads,
        include_timestamp=not args.deterministic,
        extra=extra,
    )
    with open(os.path.join(args.out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"{kind} experiment: {len(result.rows)} rows -> {args.out_dir}")
    return EXIT_OK


def _run_calibrate_spec(spec: dict, args) -> int:
    network = load_network_csv(
        _require(spec, "network", str), header=bool(spec.get("header", False))
    )
    order = _load_order(_require(spec, "order", str))
    data = DiffusionData(network=network, order=order)
    rule = _rule_from_spec(_require(spec, "rule", dict), "rule")
    param = _require(spec, "param", str)
    if param not in rule.param_names:
        raise ValueError(f"spec: param {param!r} is not a parameter of {rule.kind!r}")
    reps = args.reps if args.reps is not None else _require(spec, "reps", int)
    seed = args.seed if args.seed is not None else int(spec.get("seed", 0))
    fit_doc = spec.get("fit", {})
    fit_cfg = FitConfig(
        restarts=int(fit_doc.get("restarts", 8)),
        tolerance=float(fit_doc.get("tolerance", 1e-8)),
        max_evals=int(fit_doc.get("max_evals", 20000)),
        seed=seed,
    )
    fit = fit_oada(data, rule, fit_cfg)
    try:
        result = calibrate_ci(
            fit,
            rule.param_names.index(param),
            reps=int(reps),
            seed=seed,
            fit_config=fit_cfg,
        )
    except CalibrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    report = {
        "kind": "calibrate",
        "rule": rule.kind,
        "fit": fit.report_dict(),
        "calibration": result.report_dict(),
    }
    out_path = os.path.join(args.out_dir, "calibration.json")
    with open(out_path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"calibrate: adjusted cutoff {result.cutoff:.4f} -> {out_path}")
    return EXIT_OK


def _add_rule_opts(p: argparse.ArgumentParser, many: bool = False) -> None:
    if many:
        p.add_argument("--rules", required=True,
                       help="comma-separated rule names (asocial, simple/standard, "
                            "proportional, freqdep, threshold)")
    else:
        p.add_argument("--rule", required=True,
                       help="asocial | simple | proportional | freqdep | threshold "
                            "(alias: standard = simple)")
    p.add_argument("--fix", action="append", metavar="NAME=VALUE",
                   help="fix a rule constant, e.g. --fix b=3 (threshold sharpness)")
    p.add_argument("--estimate-b", action="store_true",
                   help="estimate the threshold sharpness instead of fixing it")
    p.add_argument("--f-lower", type=float, default=None,
                   help="lower bound for the conformity exponent f (default 0.2)")


def _add_fit_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--max-evals", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0, help="optimizer jitter seed")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="contagionfit",
                     description="Fit, compare and simulate contagion spread on networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", parents=[], help="fit one rule to an observed order")
    p_fit.add_argument("--network", required=True, help="square CSV weight matrix")
    p_fit.add_argument("--header", action="store_true", help="network CSV has a header row")
    p_fit.add_argument("--order", required=True,
                       help="acquisition order: file, or inline like 4,5,2,3,1 (1-based)")
    _add_rule_opts(p_fit)
    p_fit.add_argument("--start", help="comma-separated start values")
    p_fit.add_argument("--lower", help="comma-separated lower bounds")
    p_fit.add_argument("--upper", help="comma-separated upper bounds")
    _add_fit_opts(p_fit)
    p_fit.add_argument("--ci", action="store_true", help="add profile CIs to the report")
    p_fit.add_argument("--cutoff", type=float, default=1.92)
    p_fit.add_argument("--json", action="store_true", help="print the JSON report to stdout")
    p_fit.add_argument("--out", help="write the JSON report to a file")
    p_fit.add_argument("--label")
    p_fit.set_defaults(func=cmd_fit)

    p_sim = sub.add_parser("simulate", help="simulate spread through a network")
    p_sim.add_argument("--network", help="square CSV weight matrix")
    p_sim.add_argument("--header", action="store_true")
    p_sim.add_argument("--generate", metavar="SPEC",
                       help="random network: n=100,threshold=0.7,mult=3,seed=5 "
                            "or a JSON file with generator fields")
    _add_rule_opts(p_sim)
    p_sim.add_argument("--params", help="comma-separated rule parameters")
    p_sim.add_argument("--seed", type=int, default=0, help="simulation seed")
    p_sim.add_argument("--stop-after", type=int, default=None,
                       help="stop after this many acquisition events")
    p_sim.add_argument("--initial", help="comma-separated 1-based pre-informed individuals")
    p_sim.add_argument("--out", metavar="PREFIX",
                       help="write PREFIX_order.txt and PREFIX_trace.csv "
                            "(and PREFIX_network.csv when --generate)")
    p_sim.add_argument("--label", default="")
    p_sim.set_defaults(func=cmd_simulate)

    p_cmp = sub.add_parser("compare", help="fit several rules, rank by AICc")
    p_cmp.add_argument("--network", required=True)
    p_cmp.add_argument("--header", action="store_true")
    p_cmp.add_argument("--order", required=True)
    _add_rule_opts(p_cmp, many=True)
    _add_fit_opts(p_cmp)
    p_cmp.add_argument("--out", help="write the comparison CSV to a file")
    p_cmp.set_defaults(func=cmd_compare)

    p_exp = sub.add_parser("experiment", help="run a Monte-Carlo experiment from JSON")
    p_exp.add_argument("--spec", required=True, help="experiment spec (JSON)")
    p_exp.add_argument("--kind", choices=("selection", "coverage", "calibrate"),
                       help="override the spec's kind")
    p_exp.add_argument("--out-dir", default=".", help="directory for tables + manifest")
    p_exp.add_argument("--reps", type=int, default=None, help="override spec reps")
    p_exp.add_argument("--seed", type=int, default=None, help="override spec seed")
    p_exp.add_argument("--threads", type=int,
                       default=int(os.environ.get("CONTAGIONFIT_THREADS", "1")),
                       help="worker processes (results are independent of this)")
    p_exp.add_argument("--deterministic", action="store_true",
                       help="omit the timestamp from the manifest")
    p_exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
