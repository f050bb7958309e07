"""Command-line entry point: ``bakrylab {check,run,examples,export-schema}``.

Exit codes: 0 when every verdict is as expected, 1 when a verdict failed,
2 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .scenario import ScenarioConfig, ScenarioError, parse_scenario, schema_document

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def builtin_names() -> list[str]:
    root = resources.files("bakrylab") / "scenarios"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".scn"))


def builtin_text(name: str) -> str:
    return (resources.files("bakrylab") / "scenarios" / f"{name}.scn").read_text(encoding="utf-8")


def _summary(text: str) -> str:
    lines = []
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        lines.append(line.lstrip("# ").strip())
    return " ".join(lines)


def load_target(target: str) -> ScenarioConfig:
    path = Path(target)
    if path.is_file():
        text = path.read_text(encoding="utf-8")
    elif target in builtin_names():
        text = builtin_text(target)
    else:
        raise ScenarioError([(0, f"{target}: no such file or built-in scenario")])
    return parse_scenario(text)


# ---------------------------------------------------------------------------
# self-check battery
# ---------------------------------------------------------------------------

def self_checks(seed: int) -> list[tuple[str, bool, str]]:
    from .congruence import CongruenceState, FProfile, integrate
    from .geometry import SpacetimeModel, WeightFunction, cauchy_schwarz_gap, ric_general, ric_time_time
    from .mcflow import FlowInputs, FlowState, PeriodicGrid, evolve

    rng = np.random.default_rng(seed)
    out = []
    zero = FProfile.constant(0.0)

    d = float(rng.uniform(0.2, 2.0))
    _, rec = integrate(CongruenceState(0.0, 0.0, -d), zero, 0.0, 4, "inf", 2.0 / d + 1.0)
    err = abs(rec.t_blowup - 1.0 / d) * d if rec.detected else math.inf
    out.append(("riccati blow-up at 1/delta", err <= 1e-6, f"delta={d:.6g} rel_err={err:.3g}"))

    d = float(rng.uniform(0.3, 3.0))
    tp = math.atanh(1.0 / (1.0 + d))
    _, rec = integrate(CongruenceState(0.0, 0.0, -(1.0 + d)), zero, -3.0, 4, "inf", tp + 1.0)
    err = abs(rec.t_blowup - tp) / tp if rec.detected else math.inf
    out.append(("de Sitter blow-up at arctanh(1/(1+delta))", err <= 1e-6, f"delta={d:.6g} rel_err={err:.3g}"))

    H, fp = rng.normal(size=(2, 1000)) * 5
    n = int(rng.integers(2, 8))
    N = n + rng.uniform(0.01, 10, size=1000)
    gap = cauchy_schwarz_gap(H, fp, n, N)
    ok = bool(np.all(gap >= -1e-12 * (1 + H * H + fp * fp)))
    out.append(("Cauchy-Schwarz gap nonnegative", ok, f"min={float(np.min(gap)):.3g}"))

    c = float(rng.uniform(-0.5, 0.5))
    model = SpacetimeModel(4, f"exp({c}*t) + 0.1*sin(t)", weight=WeightFunction.separable(f"{c}*t*t"))
    closed = float(ric_time_time(model, "inf", 0.3))
    fd = ric_general(model, "inf", (1.0, 0.0, 0.0, 0.0), 0.3, 0.0, method="fd")
    out.append(("closed form vs finite differences", abs(closed - fd) < 1e-5, f"diff={abs(closed - fd):.3g}"))

    g = PeriodicGrid(16)
    inp = FlowInputs.build(g, 4, "inf")
    traj = evolve(FlowState.initial(g, np.zeros(16), np.zeros(16), inp), inp, 10 * 0.45 * g.dy**2, 0.45 * g.dy**2)
    out.append(("flow fixes phi = 0", bool(np.all(traj.phi == 0)), ""))
    return out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_check(args) -> int:
    if args.files:
        status = EXIT_OK
        for target in args.files:
            try:
                load_target(target)
                print(f"ok      {target}")
            except ScenarioError as exc:
                status = EXIT_CONFIG
                for ln, msg in exc.errors:
                    print(f"error   {target}:{ln}: {msg}", file=sys.stderr)
        return status
    results = self_checks(args.seed)
    for name, ok, note in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {note}".rstrip())
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_FAILED


def cmd_run(args) -> int:
    from .runner import run

    configs = []
    status = EXIT_OK
    for target in args.targets:
        try:
            configs.append(load_target(target))
        except ScenarioError as exc:
            status = EXIT_CONFIG
            for ln, msg in exc.errors:
                print(f"error   {target}:{ln}: {msg}", file=sys.stderr)
    if status:
        return status

    def one(cfg):
        out = Path(args.out) / cfg.name if args.out else None
        return run(cfg, out=out, tolerance=args.tolerance)

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        reports = list(pool.map(one, configs))
    for rep in reports:
        print(f"{'PASS' if rep.passed else 'FAIL'}  {rep.scenario}  -> {rep.output_dir}")
        for v in rep.verdicts:
            if not v["passed"]:
                print(f"        failed: {v['name']}")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


def cmd_examples(args) -> int:
    for name in builtin_names():
        print(f"{name:28s} {_summary(builtin_text(name))}")
    return EXIT_OK


def cmd_export_schema(args) -> int:
    text = json.dumps(schema_document(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="DIR", help="output directory (run: one subdirectory per scenario)")
    common.add_argument("--tolerance", type=float, metavar="X", help="override the TCD satisfaction tolerance")
    common.add_argument("--jobs", type=int, default=1, metavar="K", help="scenarios to run concurrently")
    common.add_argument("--seed", type=int, default=0, metavar="U64", help="seed for randomized checks")

    p = argparse.ArgumentParser(prog="bakrylab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"bakrylab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("check", parents=[common], help="run the self-check battery, or validate scenario files")
    c.add_argument("files", nargs="*")
    c.set_defaults(func=cmd_check)
    r = sub.add_parser("run", parents=[common], help="run scenario files or built-in scenarios")
    r.add_argument("targets", nargs="+", metavar="file|builtin")
    r.set_defaults(func=cmd_run)
    e = sub.add_parser("examples", parents=[common], help="list built-in scenarios")
    e.set_defaults(func=cmd_examples)
    s = sub.add_parser("export-schema", parents=[common], help="print the scenario schema as JSON")
    s.set_defaults(func=cmd_export_schema)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed < 0 or args.seed >= 2**64:
        print("--seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
