"""Command-line front end.

Exit codes: 0 success, 1 a verification check (or a solve) failed, 2 usage
or parameter error. Numbers are printed with 12 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import __version__
from . import equilibrium as eq
from . import montecarlo as mc
from . import verify as ver
from .errors import NoConvergenceError, ParameterError, RevCausalError
from .scm import PRESETS, Family, Scenario, parse_keyvalue, scenario_from_mapping

SEED_ENV = "REVCAUSAL_SEED"
MIN_RELIABLE_DRAWS = 10_000

REPORT_FIELDS = (
    "k_equilibrium",
    "k_benchmark",
    "k_closed_form",
    "welfare",
    "welfare_benchmark",
    "welfare_gap",
    "c2_margin",
    "iterations",
)
SWEEPABLE = ("gamma", "lambda", "tau", "kappa", "alpha", "delta")
SWEEP_COLUMNS = ("k_equilibrium", "k_benchmark", "welfare_gap")
_FAMILY_SWEEPS = {
    Family.MAIN: ("gamma", "lambda", "tau"),
    Family.REVERSE_ONLY: ("gamma", "lambda", "tau"),
    Family.EXOGENEITY_ONLY: ("kappa", "alpha", "delta", "tau"),
}
SWEEP_EXTRAS = ("k_closed_form", "welfare", "welfare_benchmark", "c2_margin", "iterations", "tau", "beta")


class UsageError(Exception):
    """Bad command-line input; reported with exit code 2."""


def fmt(value) -> str:
    if isinstance(value, (bool, str)):
        return str(value).lower() if isinstance(value, bool) else value
    if isinstance(value, int):
        return str(value)
    return f"{value:.12g}"


def _json_value(value):
    if isinstance(value, float):
        return float(fmt(value))
    return value


def report_values(scenario: Scenario, report: eq.EquilibriumReport | None = None) -> dict:
    """The numbers ``solve`` prints, as Python scalars."""
    rep = report or eq.solve_equilibrium(scenario)
    return {
        "k_equilibrium": rep.strategy.slope,
        "k_benchmark": rep.benchmark_strategy.slope,
        "k_closed_form": eq.closed_form_strategy(scenario).slope,
        "welfare": rep.welfare,
        "welfare_benchmark": rep.welfare_benchmark,
        "welfare_gap": rep.welfare_gap,
        "c2_margin": rep.c2_margin,
        "iterations": int(rep.iterations),
        "tau": scenario.tau,
        "beta": scenario.beta,
    }


# -- solve ------------------------------------------------------------------

_SCENARIO_FLAGS = {
    "gamma": "gamma",
    "lambda": "lambda",
    "kappa": "kappa",
    "alpha": "alpha",
    "delta": "delta",
    "var_theta": "var-theta",
    "var_eps": "var-eps",
    "var_eta": "var-eta",
    "tau": "tau",
}


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("scenario")
    g.add_argument("--scenario-file", help="flat key=value scenario file")
    g.add_argument("--preset", choices=sorted(PRESETS), help="start from a named preset")
    g.add_argument("--family", help="main, exogeneity-only or reverse-only")
    for key, flag in _SCENARIO_FLAGS.items():
        g.add_argument(f"--{flag}", dest=key, type=str, metavar="X")
    g.add_argument("--unsafe-params", action="store_true", help="skip parameter range checks (output is tagged)")


def scenario_from_args(args: argparse.Namespace) -> Scenario:
    values: dict[str, object] = {}
    if args.scenario_file:
        values.update(_read_keyvalue(args.scenario_file))
    if args.preset:
        values["preset"] = args.preset
    if args.family:
        values["family"] = args.family
    for key in _SCENARIO_FLAGS:
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    if args.tau is not None and args.var_eps is None:
        values.pop("var_eps", None)  # --tau overrides a var_eps from the file
    return scenario_from_mapping(values, unsafe=args.unsafe_params)


def _read_keyvalue(path: str) -> dict[str, str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_keyvalue(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def cmd_solve(args: argparse.Namespace, out) -> int:
    scenario = scenario_from_args(args)
    values = {k: report_values(scenario)[k] for k in REPORT_FIELDS}
    header = {"family": scenario.family.value, "unsafe_params": scenario.unsafe}
    if args.json:
        payload = {**header, **{k: _json_value(v) for k, v in values.items()}}
        out.write(json.dumps(payload, indent=2) + "\n")
    else:
        out.write(f"family: {scenario.family.value}\n")
        if scenario.unsafe:
            out.write("unsafe_params: true  (range checks skipped)\n")
        for k, v in values.items():
            out.write(f"{k}: {fmt(v)}\n")
    return 0


# -- sweep ------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    base: Scenario
    parameter: str
    grid: tuple[float, ...]
    outputs: tuple[str, ...] = field(default=())

    @property
    def columns(self) -> tuple[str, ...]:
        return (self.parameter, *SWEEP_COLUMNS, *self.outputs)

    def scenarios(self) -> list[Scenario]:
        return [self.base.with_params(**{self.parameter: v}) for v in self.grid]


def parse_sweep_spec(text: str, unsafe: bool = False) -> SweepSpec:
    values = parse_keyvalue(text)
    param = values.pop("sweep", None)
    grid_text = values.pop("grid", None)
    outputs_text = values.pop("outputs", "")
    if param is None or grid_text is None:
        raise ParameterError("sweep", "sweep spec needs both sweep=<param> and grid=v1,v2,...")
    param = param.strip()
    if param not in SWEEPABLE:
        raise ParameterError("sweep", f"cannot sweep {param!r}; choose one of {list(SWEEPABLE)}")
    try:
        grid = tuple(float(v) for v in grid_text.split(",") if v.strip())
    except ValueError:
        raise ParameterError("grid", f"grid values must be numbers, got {grid_text!r}") from None
    if not grid:
        raise ParameterError("grid", "grid is empty")
    outputs = tuple(o.strip() for o in outputs_text.split(",") if o.strip())
    for o in outputs:
        if o not in SWEEP_EXTRAS:
            raise ParameterError("outputs", f"unknown output column {o!r}; choose from {list(SWEEP_EXTRAS)}")
    if param == "tau":
        values.pop("var_eps", None)
    fam_text = values.get("family") or (PRESETS[values["preset"]].family.value if values.get("preset") in PRESETS else None)
    if fam_text is not None and param not in _FAMILY_SWEEPS[Family.parse(fam_text)]:
        raise ParameterError("sweep", f"{param} is not a parameter of family {Family.parse(fam_text).value}")
    # the swept parameter need not appear in the base; the first grid value stands in
    values[param] = str(grid[0])
    base = scenario_from_mapping(values, unsafe=unsafe)
    spec = SweepSpec(base, param, grid, outputs)
    spec.scenarios()  # validate every grid point before any solving
    return spec


def _sweep_row(scenario: Scenario) -> dict:
    return report_values(scenario)


def run_sweep(spec: SweepSpec, jobs: int = 1) -> str:
    scenarios = spec.scenarios()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, scenarios))  # map keeps grid order
    else:
        rows = [_sweep_row(s) for s in scenarios]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(spec.columns)
    for v, row in zip(spec.grid, rows):
        w.writerow([fmt(v)] + [fmt(row[c]) for c in spec.columns[1:]])
    return buf.getvalue()


def cmd_sweep(args: argparse.Namespace, out) -> int:
    try:
        with open(args.spec, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {args.spec}: {exc.strerror}") from None
    spec = parse_sweep_spec(text, unsafe=args.unsafe_params)
    body = run_sweep(spec, jobs=args.jobs)
    if args.output in (None, "-"):
        out.write(body)
    else:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(body)
    return 0


# -- verify -----------------------------------------------------------------


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return mc.DEFAULT_SEED
    try:
        seed = int(raw, 0)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None
    return seed


def cmd_verify(args: argparse.Namespace, out) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    if not 0 <= seed < 2**64:
        raise UsageError("seed must be in [0, 2**64)")
    if args.draws < 1 or (args.fit_draws is not None and args.fit_draws < 1):
        raise UsageError("draws must be >= 1")
    if args.draws < MIN_RELIABLE_DRAWS:
        print(
            f"warning: {args.draws} draws; sampling tolerances are unreliable below {MIN_RELIABLE_DRAWS}",
            file=sys.stderr,
        )
    results = ver.run_all(draws=args.draws, seed=seed, fit_draws=args.fit_draws)
    failed = [r for r in results if not r.passed]
    if args.json:
        payload = {
            "seed": seed,
            "draws": args.draws,
            "passed": not failed,
            "checks": [
                {"name": r.name, "passed": r.passed, "worst": float(fmt(r.worst)), "tolerance": r.tolerance, "detail": r.detail}
                for r in results
            ],
        }
        out.write(json.dumps(payload, indent=2) + "\n")
    else:
        out.write(f"seed {seed}, {args.draws} draws\n")
        for r in results:
            out.write(r.line() + "\n")
        out.write(f"{len(results) - len(failed)}/{len(results)} checks passed\n")
    return 1 if failed else 0


def cmd_presets(args: argparse.Namespace, out) -> int:
    for name in sorted(PRESETS):
        params = ", ".join(f"{k}={fmt(v)}" for k, v in PRESETS[name].to_dict().items() if k not in ("family", "unsafe"))
        out.write(f"{name}: {PRESETS[name].family.value}  {params}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="revcausal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one scenario")
    _add_scenario_args(p)
    p.add_argument("--json", action="store_true", help="emit JSON")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="comparative statics over one parameter, written as CSV")
    p.add_argument("spec", help="key=value file with sweep=<param> and grid=v1,v2,...")
    p.add_argument("-o", "--output", help="CSV path (default: standard output)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--unsafe-params", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="cross-check solver, closed forms and simulation")
    p.add_argument("--draws", type=int, default=1_000_000, help="simulation draws (default 1e6)")
    p.add_argument("--fit-draws", type=int, default=None, help="draws for the regression checks (default 10x draws)")
    p.add_argument("--seed", type=int, default=None, help=f"simulation seed (default ${SEED_ENV} or {mc.DEFAULT_SEED})")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("presets", help="list named presets")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, out)
    except (UsageError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NoConvergenceError, RevCausalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
