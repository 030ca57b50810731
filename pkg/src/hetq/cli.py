"""Command-line surface: analyze, region, simulate, validate, solve.

Scenarios come from flags, a JSON config file, or both (flags override the
file).  Tabular results are CSV with a fixed header and 12-significant-digit
numbers; simulate/validate/solve emit versioned JSON documents.  Exit codes:
0 ok, 1 malformed input, 2 infeasible/unstable/unreachable, 3 divergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from . import cd, conservation, ctmc, dynamic, ps
from .core import PolicyKind, PolicySpec, SystemParams, validate_params
from .errors import (
    DivergenceDetected,
    HetqError,
    Infeasible,
    ParamError,
    TargetUnreachable,
    Unstable,
)
from .sim import run_replications

SCENARIO_SCHEMA = "hetq-scenario/1"
RESULT_SCHEMA = "hetq-result/1"
CSV_HEADER = "p,p_block,e_sojourn,stable,source,ci_halfwidth"

_POLICIES = ("ps", "cd", "dynamic-ps", "conservation")


class UsageError(Exception):
    pass


@dataclass
class Scenario:
    policy: str
    rho_i: float | None
    lambda_i: float | None
    mu_i: float | None
    lambda_t: float
    mu_t: float
    p: float
    k: int
    sweep: dict | None
    sim: dict | None

    @property
    def exact_rates(self) -> bool:
        return self.lambda_i is not None

    def system_params(self, p: float | None = None) -> SystemParams:
        if self.exact_rates:
            lam_i, mu_i = self.lambda_i, self.mu_i
        else:
            lam_i, mu_i = self.rho_i, 1.0  # SFJ quantities depend on rho_i only
        return validate_params(
            SystemParams(
                lambda_i=lam_i,
                mu_i=mu_i,
                lambda_t=self.lambda_t,
                mu_t=self.mu_t,
                p=self.p if p is None else p,
                k=self.k,
            )
        )

    def to_document(self) -> dict:
        return {
            "schema": SCENARIO_SCHEMA,
            "policy": self.policy,
            "params": {
                "rho_i": self.rho_i,
                "lambda_i": self.lambda_i,
                "mu_i": self.mu_i,
                "lambda_t": self.lambda_t,
                "mu_t": self.mu_t,
                "p": self.p,
                "k": self.k,
            },
            "sweep": self.sweep,
            "sim": self.sim,
        }


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _row(p, p_block, e_sojourn, stable, source, ci="") -> str:
    return ",".join(
        [_fmt(p), _fmt(p_block), _fmt(e_sojourn), _fmt(stable), source, _fmt(ci)]
    )


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if doc.get("schema") != SCENARIO_SCHEMA:
        raise UsageError(f"config schema must be {SCENARIO_SCHEMA!r}")
    return doc


def build_scenario(args: argparse.Namespace, need_sim: bool = False) -> Scenario:
    doc = _load_config(args.config) if args.config else {}
    prm = doc.get("params") or {}

    def pick(flag, key, default=None):
        value = getattr(args, flag, None)
        return value if value is not None else prm.get(key, default)

    policy = args.policy if args.policy is not None else doc.get("policy")
    if policy not in _POLICIES:
        raise UsageError(f"--policy must be one of {_POLICIES}, got {policy!r}")

    rho_i = pick("rho_i", "rho_i")
    lambda_i = pick("lambda_i", "lambda_i")
    mu_i = pick("mu_i", "mu_i")
    if (lambda_i is None) != (mu_i is None):
        raise UsageError("--lambda-i and --mu-i must be given together")
    if (rho_i is None) == (lambda_i is None):
        raise UsageError("give exactly one of --rho-i or --lambda-i/--mu-i")

    lambda_t = pick("lambda_t", "lambda_t")
    mu_t = pick("mu_t", "mu_t")
    for name, val in (("lambda-t", lambda_t), ("mu-t", mu_t)):
        if val is None:
            raise UsageError(f"missing required field --{name}")
    p = pick("p", "p", 1.0)
    k = pick("k", "k", 1 if policy == "conservation" else None)
    if k is None:
        raise UsageError("missing required field --k")

    sweep = doc.get("sweep")
    if getattr(args, "grid", None) is not None:
        sweep = {
            "param": "p-block" if policy == "conservation" else "p",
            "grid": args.grid,
        }

    sim = doc.get("sim")
    if need_sim:
        sim = dict(sim or {})
        for flag, key, default in (
            ("horizon_arrivals", "t_arrivals", 200_000),
            ("reps", "reps", 10),
            ("seed", "seed", 12345),
            ("warmup", "warmup", 0.1),
        ):
            value = getattr(args, flag, None)
            if value is not None:
                sim[key] = value
            else:
                sim.setdefault(key, default)

    return Scenario(
        policy=policy,
        rho_i=rho_i,
        lambda_i=lambda_i,
        mu_i=mu_i,
        lambda_t=float(lambda_t),
        mu_t=float(mu_t),
        p=float(p),
        k=int(k),
        sweep=sweep,
        sim=sim,
    )


def _dump_config_if_asked(scn: Scenario, args) -> bool:
    if getattr(args, "dump_config", False):
        _emit(
            json.dumps(scn.to_document(), indent=2, sort_keys=True) + "\n",
            args.out,
        )
        return True
    return False


def _policy_kind(name: str) -> PolicyKind:
    return PolicyKind(name)


def _sfj_point(scn: Scenario):
    """(p_block, sfj sojourn or None) for the scenario's policy at its p."""
    prm = scn.system_params()
    rho_i = prm.lambda_i / prm.mu_i
    if scn.policy == "cd":
        p_block = cd.cd_blocking(prm.p, rho_i, prm.k)
        sojourn = lambda: cd.cd_sojourn_sfj(prm.p, rho_i, prm.k, prm.lambda_t, prm.mu_t)
    elif scn.policy == "dynamic-ps":
        p_block = dynamic.dynamic_blocking_ps(prm)
        sojourn = lambda: ps.ps_sojourn_sfj(prm.p, rho_i, prm.k, prm.lambda_t, prm.mu_t)
    else:
        p_block = ps.ps_blocking(prm.p, rho_i, prm.k)
        sojourn = lambda: ps.ps_sojourn_sfj(prm.p, rho_i, prm.k, prm.lambda_t, prm.mu_t)
    return prm, p_block, sojourn


def cmd_analyze(args) -> int:
    scn = build_scenario(args)
    if _dump_config_if_asked(scn, args):
        return 0
    if scn.sweep is not None:
        raise UsageError("analyze takes a single point; use `region` for sweeps")
    if scn.policy == "conservation":
        raise UsageError("analyze supports ps/cd/dynamic-ps; use `region` for the law")
    prm, p_block, sojourn = _sfj_point(scn)
    lines = [CSV_HEADER]
    e_sfj = sojourn()  # Unstable propagates to exit 2
    lines.append(_row(prm.p, p_block, e_sfj, True, "formula-sfj"))
    if scn.exact_rates and scn.policy == "ps":
        try:
            lo, hi = ps.ps_sojourn_bounds(prm)
            lines.append(_row(prm.p, p_block, lo, True, "bound-lower"))
            lines.append(_row(prm.p, p_block, hi, True, "bound-upper"))
        except Unstable as exc:
            lines.append(_row(prm.p, p_block, None, False, f"bound-{exc.system}"))
    if scn.exact_rates and scn.policy == "cd":
        est = cd.cd_est_moments_exact(prm)
        try:
            exact = ps.mg1_sojourn(est, prm.lambda_t)
            lines.append(_row(prm.p, p_block, exact, True, "formula-exact"))
        except Unstable:
            lines.append(_row(prm.p, p_block, None, False, "formula-exact"))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_region(args) -> int:
    scn = build_scenario(args)
    if _dump_config_if_asked(scn, args):
        return 0
    if scn.sweep is None:
        raise UsageError("region needs a sweep (give --grid)")
    grid = int(scn.sweep["grid"])
    lines = [CSV_HEADER]
    if scn.policy == "conservation":
        rho_i = scn.rho_i if scn.rho_i is not None else scn.lambda_i / scn.mu_i
        curve = conservation.static_region(rho_i, scn.lambda_t, scn.mu_t, grid)
    else:
        spec = PolicySpec(_policy_kind(scn.policy), scn.system_params())
        curve = conservation.policy_region(spec, grid)
    for pt in curve.points:
        lines.append(_row(pt.p, pt.p_block, pt.e_sojourn, pt.stable, "formula-sfj"))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_simulate(args) -> int:
    scn = build_scenario(args, need_sim=True)
    if _dump_config_if_asked(scn, args):
        return 0
    if scn.policy == "conservation":
        raise UsageError("simulate supports ps/cd/dynamic-ps")
    if not scn.exact_rates:
        raise UsageError("simulate needs --lambda-i/--mu-i (finite eager rates)")
    spec = PolicySpec(_policy_kind(scn.policy), scn.system_params())
    sim = scn.sim
    est = run_replications(
        spec,
        reps=int(sim["reps"]),
        base_seed=int(sim["seed"]),
        t_arrivals=int(sim["t_arrivals"]),
        warmup_fraction=float(sim["warmup"]),
    )
    doc = {
        "schema": RESULT_SCHEMA,
        "command": "simulate",
        "inputs": scn.to_document(),
        "estimate": {
            "p_block": est.p_block,
            "p_block_halfwidth": est.p_block_halfwidth,
            "e_sojourn": est.e_sojourn,
            "e_sojourn_halfwidth": est.e_sojourn_halfwidth,
            "reps": est.reps,
            "seed": est.seed,
            "events": est.events,
            "littles_check": est.littles_check,
        },
    }
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def cmd_validate(args) -> int:
    scn = build_scenario(args)
    if _dump_config_if_asked(scn, args):
        return 0
    if scn.policy not in ("ps", "cd"):
        raise UsageError("validate supports ps and cd")
    grid = args.grid if args.grid is not None else 101
    prm = scn.system_params()
    kind = _policy_kind(scn.policy)
    deviation = conservation.verify_conservation(kind, prm, grid)
    doc = {
        "schema": RESULT_SCHEMA,
        "command": "validate",
        "inputs": scn.to_document(),
        "max_conservation_deviation": deviation,
        "sandwich": None,
    }
    if scn.exact_rates and scn.policy == "ps":
        try:
            lo, hi = ps.ps_sojourn_bounds(prm)
            point = ctmc.oracle_perf(PolicySpec(kind, prm))
            doc["sandwich"] = {
                "lower": lo,
                "oracle": point.e_sojourn,
                "upper": hi,
                "lower_ok": bool(lo <= point.e_sojourn),
                "upper_ok": bool(point.e_sojourn <= hi),
            }
        except Unstable as exc:
            doc["sandwich"] = {"unstable": str(exc)}
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def cmd_solve(args) -> int:
    scn = build_scenario(args)
    if _dump_config_if_asked(scn, args):
        return 0
    if scn.policy not in ("ps", "cd"):
        raise UsageError("solve supports ps and cd")
    if args.target_pb is None:
        raise UsageError("missing required field --target-pb")
    rho_i = scn.rho_i if scn.rho_i is not None else scn.lambda_i / scn.mu_i
    kind = _policy_kind(scn.policy)
    p_star = conservation.solve_admission_for_pb(kind, scn.k, rho_i, args.target_pb)
    blocking = ps.ps_blocking if kind is PolicyKind.PS else cd.cd_blocking
    doc = {
        "schema": RESULT_SCHEMA,
        "command": "solve",
        "inputs": scn.to_document(),
        "target_pb": args.target_pb,
        "p": p_star,
        "achieved_pb": blocking(p_star, rho_i, scn.k),
    }
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    return 0


class _Parser(argparse.ArgumentParser):
    # usage problems are exit code 1 in this tool (argparse default is 2)
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--policy", choices=_POLICIES)
    sub.add_argument("--p", type=float)
    sub.add_argument("--k", type=int)
    sub.add_argument("--rho-i", dest="rho_i", type=float)
    sub.add_argument("--lambda-i", dest="lambda_i", type=float)
    sub.add_argument("--mu-i", dest="mu_i", type=float)
    sub.add_argument("--lambda-t", dest="lambda_t", type=float)
    sub.add_argument("--mu-t", dest="mu_t", type=float)
    sub.add_argument("--config")
    sub.add_argument("--dump-config", action="store_true")
    sub.add_argument("--out")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hetq", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("analyze", help="single-point formulas")
    _add_common(sub)
    sub.set_defaults(fn=cmd_analyze)

    sub = subs.add_parser("region", help="achievable-region sweep to CSV")
    _add_common(sub)
    sub.add_argument("--grid", type=int)
    sub.set_defaults(fn=cmd_region)

    sub = subs.add_parser("simulate", help="replicated simulation to JSON")
    _add_common(sub)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--reps", type=int)
    sub.add_argument("--horizon-arrivals", dest="horizon_arrivals", type=int)
    sub.add_argument("--warmup", type=float)
    sub.set_defaults(fn=cmd_simulate)

    sub = subs.add_parser("validate", help="conservation law / sandwich checks")
    _add_common(sub)
    sub.add_argument("--grid", type=int)
    sub.set_defaults(fn=cmd_validate)

    sub = subs.add_parser("solve", help="admission probability for a target p_block")
    _add_common(sub)
    sub.add_argument("--target-pb", dest="target_pb", type=float)
    sub.set_defaults(fn=cmd_solve)

    return parser


def _reason(kind: str, exc: Exception) -> str:
    doc = {"schema": RESULT_SCHEMA, "error": kind, "reason": str(exc)}
    if isinstance(exc, TargetUnreachable):
        doc["p_block_floor"] = exc.p_block_floor
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (UsageError, ParamError) as exc:
        sys.stderr.write(f"hetq: error: {exc}\n")
        return 1
    except (Unstable, Infeasible, TargetUnreachable) as exc:
        sys.stdout.write(_reason(type(exc).__name__, exc))
        return 2
    except DivergenceDetected as exc:
        sys.stdout.write(_reason("DivergenceDetected", exc))
        return 3
    except HetqError as exc:
        sys.stderr.write(f"hetq: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
