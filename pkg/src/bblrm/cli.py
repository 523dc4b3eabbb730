"""Command line interface.

Four subcommands: ``simulate`` (one scenario/alpha/omega cell), ``sweep``
(cross product of cells), ``recommend`` (one assessment of a recorded
history), ``serve`` (the HTTP service). Exit codes: 0 success, 1 runtime
failure, 2 usage or input-validation failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import secrets
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .errors import (
    BblrmError,
    ConfigFormatError,
    FormatError,
    InvalidArgumentError,
)
from .scenarios import (
    BUILTIN_SCENARIO_NAMES,
    Scenario,
    get_scenario,
    load_scenario_file,
    parse_scenario,
    scenario_to_dict,
)
from .simulator import (
    TrialConfig,
    assessment_to_dict,
    config_from_dict,
    config_to_dict,
    default_trial_config,
    evaluate,
    history_from_dict,
    oc_csv_header,
    oc_csv_row,
    run_batch,
    trial_record_to_dict,
)


def parse_scenario_names(text: str) -> list[str]:
    """Expand a scenario selection like "S1,S3" or "S2..S5" or "S1,S4..S6"."""
    names: list[str] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            raise InvalidArgumentError(f"empty scenario name in {text!r}")
        if ".." in part:
            lo, _, hi = part.partition("..")
            if lo not in BUILTIN_SCENARIO_NAMES or hi not in BUILTIN_SCENARIO_NAMES:
                raise InvalidArgumentError(
                    f"scenario range {part!r} must use builtin names "
                    f"{BUILTIN_SCENARIO_NAMES[0]}..{BUILTIN_SCENARIO_NAMES[-1]}"
                )
            i, j = BUILTIN_SCENARIO_NAMES.index(lo), BUILTIN_SCENARIO_NAMES.index(hi)
            if j < i:
                raise InvalidArgumentError(f"scenario range {part!r} runs backwards")
            names.extend(BUILTIN_SCENARIO_NAMES[i : j + 1])
        else:
            names.append(part)
    return names


def _parse_floats(text: str, flag: str) -> list[float]:
    out = []
    for part in text.split(","):
        part = part.strip()
        try:
            out.append(float(part))
        except ValueError:
            raise InvalidArgumentError(f"{flag}: {part!r} is not a number") from None
    if not out:
        raise InvalidArgumentError(f"{flag}: empty list")
    return out


def _load_config(path: str | None) -> TrialConfig:
    if path is None:
        return default_trial_config()
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigFormatError(f"{path}: cannot read file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigFormatError(f"{path}: not valid JSON: {exc}") from exc
    return config_from_dict(obj, source=path)


def _apply_overrides(config: TrialConfig, args) -> TrialConfig:
    decision = config.decision
    for name in ("alpha", "omega", "gamma"):
        val = getattr(args, name, None)
        if val is not None:
            decision = replace(decision, **{name: val})
    if getattr(args, "rule", None) is not None:
        decision = replace(decision, rule=args.rule)
    if getattr(args, "no_burden", False):
        decision = replace(decision, burden_enabled=False)
    return replace(config, decision=decision)


def _resolve_scenario(name: str) -> Scenario:
    """A builtin name, or a path to a scenario JSON file."""
    if name in BUILTIN_SCENARIO_NAMES:
        return get_scenario(name)
    if name.endswith(".json") or os.sep in name or os.path.exists(name):
        return load_scenario_file(name)
    raise InvalidArgumentError(
        f"unknown scenario {name!r}; use a builtin name "
        f"({', '.join(BUILTIN_SCENARIO_NAMES)}) or a path to a scenario JSON file"
    )


def _master_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    seed = secrets.randbelow(2**32)
    print(f"seed: chose {seed} (record it to reproduce this run)", file=sys.stderr)
    return seed


def _write_manifest(path, command, scenarios, alphas, omegas, config, n_trials,
                    master_seed, jobs, outputs):
    manifest = {
        "command": command,
        "version": __version__,
        "created_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "scenarios": [scenario_to_dict(s) for s in scenarios],
        "alphas": alphas,
        "omegas": omegas,
        "n_trials": n_trials,
        "master_seed": master_seed,
        "jobs": jobs,
        "config": config_to_dict(config),
        "outputs": outputs,
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load_manifest(path):
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigFormatError(f"{path}: cannot read manifest: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigFormatError(f"{path}: manifest is not valid JSON: {exc}") from exc
    items = []
    if not isinstance(obj, dict):
        raise ConfigFormatError(f"{path}: manifest must be a JSON object")
    for key in ("scenarios", "alphas", "omegas", "n_trials", "master_seed", "config"):
        if key not in obj:
            items.append(f"missing key {key!r}")
    if items:
        raise ConfigFormatError(f"{path}: invalid manifest", items)
    scenarios = [
        parse_scenario(s, source=f"{path}: scenarios[{i}]")
        for i, s in enumerate(obj["scenarios"])
    ]
    config = config_from_dict(obj["config"], source=f"{path}: config")
    return {
        "scenarios": scenarios,
        "alphas": [float(a) for a in obj["alphas"]],
        "omegas": [float(w) for w in obj["omegas"]],
        "n_trials": int(obj["n_trials"]),
        "master_seed": int(obj["master_seed"]),
        "jobs": int(obj.get("jobs", 1)),
        "config": config,
    }


def _execute_cells(command, scenarios, alphas, omegas, config, n_trials, master_seed,
                   jobs, out_csv, audit_path, manifest_path):
    """Run every (scenario, alpha, omega) cell and write the output files."""
    import csv

    audit_fh = open(audit_path, "w") if audit_path else None
    rows = []
    try:
        for scenario in scenarios:
            for alpha in alphas:
                for omega in omegas:
                    cell_cfg = replace(
                        config,
                        decision=replace(config.decision, alpha=alpha, omega=omega),
                    )
                    hook = None
                    if audit_fh is not None:
                        def hook(rec, _cfg=cell_cfg, _a=alpha, _w=omega):
                            line = trial_record_to_dict(rec, _cfg.grid)
                            line["alpha"] = _a
                            line["omega"] = _w
                            audit_fh.write(json.dumps(line, sort_keys=True) + "\n")
                    oc = run_batch(
                        scenario, cell_cfg, n_trials, master_seed, jobs,
                        record_hook=hook,
                    )
                    rows.append(oc)
    finally:
        if audit_fh is not None:
            audit_fh.close()

    with open(out_csv, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(oc_csv_header(config.grid))
        for oc in rows:
            writer.writerow(oc_csv_row(oc))

    outputs = {"csv": str(out_csv)}
    if audit_path:
        outputs["audit"] = str(audit_path)
    if manifest_path:
        _write_manifest(
            manifest_path, command, scenarios, alphas, omegas, config,
            n_trials, master_seed, jobs, outputs,
        )
    for oc in rows:
        true = "-" if oc.pct_true_mtd != oc.pct_true_mtd else f"{oc.pct_true_mtd:.3f}"
        print(
            f"{oc.scenario} alpha={oc.alpha:g} omega={oc.omega:g}: "
            f"true-MTD {true}, toxic-MTD {oc.pct_toxic_mtd:.3f}, "
            f"patients {oc.mean_patients_total:.1f}"
        )
    print(f"wrote {out_csv}" + (f" and {audit_path}" if audit_path else ""))
    return 0


def cmd_simulate(args) -> int:
    if args.from_manifest:
        m = _load_manifest(args.from_manifest)
        scenarios, alphas, omegas = m["scenarios"], m["alphas"], m["omegas"]
        config, n_trials, master_seed = m["config"], m["n_trials"], m["master_seed"]
        jobs = args.jobs if args.jobs is not None else m["jobs"]
    else:
        if args.scenario is None:
            raise InvalidArgumentError("--scenario is required (or --from-manifest)")
        scenarios = [_resolve_scenario(args.scenario)]
        config = _apply_overrides(_load_config(args.config), args)
        alphas = [config.decision.alpha]
        omegas = [config.decision.omega]
        n_trials = args.n_trials
        master_seed = _master_seed(args)
        jobs = args.jobs if args.jobs is not None else 1
    manifest_path = args.manifest
    if manifest_path is None and not args.from_manifest:
        manifest_path = str(args.out) + ".manifest.json"
    return _execute_cells(
        "simulate", scenarios, alphas, omegas, config, n_trials, master_seed,
        jobs, args.out, args.audit, manifest_path,
    )


def cmd_sweep(args) -> int:
    if args.from_manifest:
        m = _load_manifest(args.from_manifest)
        scenarios, alphas, omegas = m["scenarios"], m["alphas"], m["omegas"]
        config, n_trials, master_seed = m["config"], m["n_trials"], m["master_seed"]
        jobs = args.jobs if args.jobs is not None else m["jobs"]
    else:
        if args.scenarios is None:
            raise InvalidArgumentError("--scenarios is required (or --from-manifest)")
        names = parse_scenario_names(args.scenarios)
        scenarios = [_resolve_scenario(n) for n in names]
        config = _load_config(args.config)
        if args.no_burden:
            config = replace(
                config, decision=replace(config.decision, burden_enabled=False)
            )
        alphas = (
            _parse_floats(args.alphas, "--alphas")
            if args.alphas
            else [config.decision.alpha]
        )
        omegas = (
            _parse_floats(args.omegas, "--omegas")
            if args.omegas
            else [config.decision.omega]
        )
        n_trials = args.n_trials
        master_seed = _master_seed(args)
        jobs = args.jobs if args.jobs is not None else 1
    manifest_path = args.manifest
    if manifest_path is None and not args.from_manifest:
        manifest_path = str(args.out) + ".manifest.json"
    return _execute_cells(
        "sweep", scenarios, alphas, omegas, config, n_trials, master_seed,
        jobs, args.out, args.audit, manifest_path,
    )


def cmd_recommend(args) -> int:
    config = _apply_overrides(_load_config(args.config), args)
    try:
        obj = json.loads(Path(args.history).read_text())
    except OSError as exc:
        raise ConfigFormatError(f"{args.history}: cannot read file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigFormatError(f"{args.history}: not valid JSON: {exc}") from exc
    history = history_from_dict(obj, config.grid, source=args.history)
    assessment = evaluate(history, config, args.seed)
    json.dump(assessment_to_dict(assessment, config.grid), sys.stdout, indent=2)
    print()
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    bind = args.bind or os.environ.get("BBLRM_BIND", "127.0.0.1:8000")
    host, _, port_text = bind.rpartition(":")
    if not host or not port_text.isdigit():
        raise InvalidArgumentError(
            f"--bind must look like HOST:PORT, got {bind!r}"
        )
    data_dir = args.data_dir or os.environ.get("BBLRM_DATA_DIR")
    if not data_dir:
        raise InvalidArgumentError(
            "a data directory is required (--data-dir or BBLRM_DATA_DIR)"
        )
    token = args.token or os.environ.get("BBLRM_TOKEN")
    ui_dir = args.ui_dir or os.environ.get("BBLRM_UI_DIR")
    config = _load_config(args.config)
    return serve(
        host=host,
        port=int(port_text),
        data_dir=data_dir,
        token=token,
        default_config=config,
        ui_dir=ui_dir,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bblrm",
        description="Burden-adjusted Bayesian dose escalation: simulate designs, "
        "recommend doses, serve trials over HTTP.",
    )
    parser.add_argument("--version", action="version", version=f"bblrm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate one scenario cell")
    sim.add_argument("--scenario", help="builtin name (S1..S7) or scenario JSON file")
    sim.add_argument("--n-trials", type=int, default=1000)
    sim.add_argument("--seed", type=int, help="master seed; random (and printed) if omitted")
    sim.add_argument("--alpha", type=float, help="escalation rule weight")
    sim.add_argument("--omega", type=float, help="burden multiplier scale")
    sim.add_argument("--gamma", type=float, help="overdose-control quantile")
    sim.add_argument("--rule", choices=["rule1", "rule2"])
    sim.add_argument("--no-burden", action="store_true", help="disable the burden term")
    sim.add_argument("--config", help="trial configuration JSON file")
    sim.add_argument("--out", default="oc.csv", help="operating characteristics CSV")
    sim.add_argument("--audit", help="per-trial audit JSONL file")
    sim.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
    sim.add_argument("--from-manifest", help="rerun a recorded invocation")
    sim.add_argument("--jobs", type=int, help="parallel worker processes")
    sim.set_defaults(func=cmd_simulate)

    sw = sub.add_parser("sweep", help="sweep scenarios x alphas x omegas")
    sw.add_argument("--scenarios", help="e.g. S1..S7 or S1,S3,S5 or file paths")
    sw.add_argument("--alphas", help="comma-separated list, e.g. 0.25,0.35")
    sw.add_argument("--omegas", help="comma-separated list, e.g. 0,0.55")
    sw.add_argument("--n-trials", type=int, default=1000)
    sw.add_argument("--seed", type=int, help="master seed; random (and printed) if omitted")
    sw.add_argument("--no-burden", action="store_true", help="disable the burden term")
    sw.add_argument("--config", help="trial configuration JSON file")
    sw.add_argument("--out", default="sweep.csv", help="operating characteristics CSV")
    sw.add_argument("--audit", help="per-trial audit JSONL file")
    sw.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
    sw.add_argument("--from-manifest", help="rerun a recorded invocation")
    sw.add_argument("--jobs", type=int, help="parallel worker processes")
    sw.set_defaults(func=cmd_sweep)

    rec = sub.add_parser("recommend", help="assess a recorded history")
    rec.add_argument("--history", required=True, help="history JSON file")
    rec.add_argument("--config", help="trial configuration JSON file")
    rec.add_argument("--seed", type=int, default=0, help="assessment seed (default 0)")
    rec.add_argument("--alpha", type=float)
    rec.add_argument("--omega", type=float)
    rec.add_argument("--gamma", type=float)
    rec.add_argument("--rule", choices=["rule1", "rule2"])
    rec.add_argument("--no-burden", action="store_true")
    rec.set_defaults(func=cmd_recommend)

    srv = sub.add_parser("serve", help="run the HTTP trial-conduct service")
    srv.add_argument("--bind", help="HOST:PORT (default BBLRM_BIND or 127.0.0.1:8000)")
    srv.add_argument("--data-dir", help="event-log directory (default BBLRM_DATA_DIR)")
    srv.add_argument("--token", help="bearer token (default BBLRM_TOKEN; none = open)")
    srv.add_argument("--config", help="default trial configuration JSON file")
    srv.add_argument("--ui-dir", help="static console directory served at / (default BBLRM_UI_DIR)")
    srv.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (FormatError, InvalidArgumentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BblrmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
