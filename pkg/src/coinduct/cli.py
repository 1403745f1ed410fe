"""Command-line entry point.

    coinduct fixpoint demo
    coinduct stream merge|split|distance GEN [GEN]
    coinduct mc analyze|recurrence CHAIN.json
    coinduct mdp solve|value|derandomize|bruteforce MDP.json [POLICY.json]
    coinduct nwf bisim|distance|approx|canonical A.json [B.json]

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 internal error.
Nothing is written to stdout unless the whole command succeeds.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from . import io, markov, mdp, nwf, streams
from .errors import NumericalError, ValidationError
from .fixpoint import REAL_LINE, ContractiveSystem, iterate_to_fixpoint

SCHEMA = "coinduct.result/1"

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3
EXIT_INTERNAL = 4

COMMANDS = {
    "fixpoint": ("demo",),
    "stream": ("merge", "split", "distance"),
    "mc": ("analyze", "recurrence"),
    "mdp": ("solve", "value", "derandomize", "bruteforce"),
    "nwf": ("bisim", "distance", "approx", "canonical"),
}

ARITY = {
    ("fixpoint", "demo"): (0, 0),
    ("stream", "merge"): (2, 2),
    ("stream", "split"): (1, 1),
    ("stream", "distance"): (2, 2),
    ("mc", "analyze"): (1, 1),
    ("mc", "recurrence"): (1, 1),
    ("mdp", "solve"): (1, 1),
    ("mdp", "value"): (2, 2),
    ("mdp", "derandomize"): (2, 2),
    ("mdp", "bruteforce"): (1, 1),
    ("nwf", "bisim"): (2, 2),
    ("nwf", "distance"): (2, 2),
    ("nwf", "approx"): (1, 1),
    ("nwf", "canonical"): (1, 1),
}


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    action: str
    inputs: tuple[str, ...] = ()
    tolerance: float = 1e-10
    horizon: int = 200
    depth: int = 64
    iters: int = 30
    state: int | None = None
    output_format: str = "text"

    def __post_init__(self):
        if self.subcommand not in COMMANDS or self.action not in COMMANDS[self.subcommand]:
            raise ValidationError(f"unknown command {self.subcommand} {self.action}")
        lo, hi = ARITY[(self.subcommand, self.action)]
        if not lo <= len(self.inputs) <= hi:
            raise ValidationError(f"{self.subcommand} {self.action} takes {lo} to {hi} inputs, got {len(self.inputs)}")
        if not (self.tolerance > 0 and math.isfinite(self.tolerance)):
            raise ValidationError("--tol must be a positive number")
        for name in ("horizon", "depth", "iters"):
            if getattr(self, name) < 1:
                raise ValidationError(f"--{name} must be >= 1")
        if self.output_format not in ("text", "record"):
            raise ValidationError("--format must be 'text' or 'record'")


@dataclass
class Report:
    """Machine-readable fields plus the human-readable rendering."""

    record: dict
    lines: list[str] = field(default_factory=list)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _vec(xs) -> str:
    return "(" + ", ".join(_fmt(float(x)) for x in xs) + ")"


# --- handlers -----------------------------------------------------------------

def _fixpoint_demo(cfg: RunConfig) -> Report:
    demos = [
        ("halving", ContractiveSystem(lambda x: x / 2, 0.5, REAL_LINE), 1.0),
        ("heron_sqrt2", ContractiveSystem(lambda x: (x + 2 / x) / 2, 0.5, REAL_LINE), 1.0),
        ("constant_3", ContractiveSystem(lambda x: 3.0, 0.0, REAL_LINE), 1.0),
    ]
    rows, lines = [], ["map            point              iterations  residual      error_bound"]
    for name, sys_, start in demos:
        res = iterate_to_fixpoint(sys_, start, cfg.tolerance)
        rows.append({"map": name, "point": res.point, "iterations": res.iterations,
                     "residual": res.residual, "error_bound": res.error_bound})
        lines.append(f"{name:<14} {_fmt(res.point):<18} {res.iterations:<11} {res.residual:<13.3e} {res.error_bound:.3e}")
    return Report({"results": rows}, lines)


def _stream(cfg: RunConfig) -> Report:
    gens = [io.parse_stream(spec) for spec in cfg.inputs]
    k = cfg.depth
    if cfg.action == "merge":
        out = str(streams.unfold(streams.merge(*gens), k))
        return Report({"prefix": out, "depth": k}, [out])
    if cfg.action == "split":
        even, odd = (str(streams.unfold(s, k)) for s in streams.split(gens[0]))
        return Report({"even": even, "odd": odd, "depth": k}, [f"even: {even}", f"odd:  {odd}"])
    d = streams.stream_distance(gens[0], gens[1], k)
    return Report({"distance": str(d), "exponent": d.exponent, "exact": d.exact, "depth": k}, [str(d)])


def _mc(cfg: RunConfig) -> Report:
    chain = io.load_chain(cfg.inputs[0])
    if cfg.action == "recurrence":
        t = 0 if cfg.state is None else cfg.state
        rep = markov.recurrence_report(chain, t, cfg.horizon)
        rec = {
            "state": t, "horizon": cfg.horizon, "mu": rep.mu_partial,
            "u_M": float(rep.u_seq[-1]), "f_head": rep.f[:10].tolist(),
            "renewal_residual": rep.renewal_residual, "reciprocal_residual": rep.reciprocal_residual,
            "limit_residual": rep.limit_residual, "partial_sum_residual": rep.partial_sum_residual,
        }
        lines = [f"state {t}, horizon {cfg.horizon}",
                 f"mu_t          {_fmt(rep.mu_partial)}",
                 f"P^M_tt        {_fmt(rep.u_seq[-1])}",
                 f"1/mu_t        {_fmt(1 / rep.mu_partial)}",
                 f"f_1..f_10     {_vec(rep.f[:10])}",
                 f"renewal       {rep.renewal_residual:.3e}",
                 f"sigma*rho-1   {rep.reciprocal_residual:.3e}",
                 f"|u_M - 1/mu|  {rep.limit_residual:.3e}",
                 f"partial sums  {rep.partial_sum_residual:.3e}"]
        return Report(rec, lines)

    st = markov.stationary_distribution(chain, cfg.tolerance)
    oracle = markov.linear_solve_stationary(chain.P)
    radius = markov.spectral_gap_estimate(chain)
    per_state = []
    lines = [f"stationary    {_vec(st.u)}",
             f"residual      {st.residual:.3e}  (||uP - u||_inf)",
             f"linear solve  {float(np.abs(st.u - oracle).max()):.3e}  (max deviation)",
             f"power         {st.power}  (contraction {st.contraction:.4g})",
             f"radius        {_fmt(radius)}",
             "",
             "state  u_t             mu_t            1/mu_t          |u_M-1/mu|  renewal"]
    for t in range(chain.n):
        rep = markov.recurrence_report(chain, t, cfg.horizon)
        per_state.append({"state": t, "u": float(st.u[t]), "mu": rep.mu_partial,
                          "limit_residual": rep.limit_residual, "renewal_residual": rep.renewal_residual,
                          "reciprocal_residual": rep.reciprocal_residual})
        lines.append(f"{t:<6} {_fmt(st.u[t]):<15} {_fmt(rep.mu_partial):<15} {_fmt(1 / rep.mu_partial):<15} "
                     f"{rep.limit_residual:<11.3e} {rep.renewal_residual:.3e}")
    rec = {"stationary": st.u.tolist(), "iterations": st.iterations, "residual": st.residual,
           "power": st.power, "contraction": st.contraction, "spectral_radius": radius,
           "oracle_deviation": float(np.abs(st.u - oracle).max()), "horizon": cfg.horizon,
           "states": per_state}
    return Report(rec, lines)


def _named_policy(m: mdp.Mdp, policy) -> dict:
    return {m.state_names[x]: m.action_names[x][d] for x, d in enumerate(policy)}


def _value_lines(m: mdp.Mdp, v, policy=None) -> list[str]:
    lines = []
    for x, s in enumerate(m.state_names):
        act = f"  {m.action_names[x][policy[x]]}" if policy is not None else ""
        lines.append(f"  {s:<12} {_fmt(v[x])}{act}")
    return lines


def _mdp(cfg: RunConfig) -> Report:
    m = io.load_mdp(cfg.inputs[0])
    tol = cfg.tolerance
    names = list(m.state_names)
    if cfg.action == "solve":
        v = mdp.optimal_value(m, tol)
        pol = mdp.greedy_policy(m, v)
        v_pol = mdp.policy_value(m, pol, tol)
        rec = {"states": names, "optimal_value": v.tolist(), "policy": _named_policy(m, pol),
               "greedy_gap": float(np.abs(v - v_pol).max())}
        lines = ["optimal value and greedy policy:", *_value_lines(m, v, pol),
                 f"||v* - v_greedy||  {rec['greedy_gap']:.3e}"]
        if m.n_policies <= mdp.BRUTE_FORCE_LIMIT:
            best, _ = mdp.brute_force_optimal(m, tol)
            rec["oracle_deviation"] = float(np.abs(best - v).max())
            lines.append(f"||v* - brute force||  {rec['oracle_deviation']:.3e}")
        return Report(rec, lines)
    if cfg.action == "bruteforce":
        best, pol = mdp.brute_force_optimal(m, tol)
        rec = {"states": names, "optimal_value": best.tolist(), "policy": _named_policy(m, pol),
               "policies": m.n_policies}
        return Report(rec, [f"enumerated {m.n_policies} policies", *_value_lines(m, best, pol)])
    data = io.read_json(cfg.inputs[1])
    if cfg.action == "value":
        pol = io.policy_from_dict(m, data, cfg.inputs[1])
        v = mdp.policy_value(m, pol, tol)
        exact = mdp.policy_value_exact(m, pol)
        rec = {"states": names, "value": v.tolist(), "policy": _named_policy(m, pol),
               "oracle_deviation": float(np.abs(v - exact).max())}
        return Report(rec, ["policy value:", *_value_lines(m, v, pol),
                            f"||v - linear solve||  {rec['oracle_deviation']:.3e}"])
    mu = io.strategy_from_dict(m, data, cfg.inputs[1])
    v_mu = mdp.prob_policy_value(m, mu, tol)
    pol = mdp.derandomize(m, mu, tol)
    v_det = mdp.policy_value(m, pol, tol)
    rec = {"states": names, "strategy_value": v_mu.tolist(), "policy": _named_policy(m, pol),
           "policy_value": v_det.tolist(), "min_improvement": float((v_det - v_mu).min())}
    lines = ["strategy value:", *_value_lines(m, v_mu), "derandomized policy:", *_value_lines(m, v_det, pol),
             f"min(v_delta - v_mu)  {rec['min_improvement']:.3e}"]
    return Report(rec, lines)


def _nwf(cfg: RunConfig) -> Report:
    graphs = [io.load_apg(p) for p in cfg.inputs]
    if cfg.action == "bisim":
        same = nwf.bisimilar(*graphs)
        return Report({"bisimilar": same}, ["bisimilar" if same else "not bisimilar"])
    if cfg.action == "distance":
        d = nwf.distance(*graphs)
        tau = nwf.tau_iterate(graphs[0], graphs[1], cfg.iters).root
        rec = {"distance": str(d), "exponent": d.exponent, "tau_iterate": tau, "tau_iters": cfg.iters}
        return Report(rec, [str(d)])
    if cfg.action == "approx":
        tower = nwf.approximant_tower(graphs[0], cfg.depth)
        text = [str(s) for s in tower]
        return Report({"tower": text, "depth": cfg.depth}, [f"f_{n}: {s}" for n, s in enumerate(text)])
    canon = nwf.canonical_F(graphs[0])
    data = io.apg_to_dict(canon)
    return Report({"canonical": data}, [json.dumps(data, sort_keys=True)])


HANDLERS = {"fixpoint": _fixpoint_demo, "stream": _stream, "mc": _mc, "mdp": _mdp, "nwf": _nwf}


def execute(cfg: RunConfig) -> Report:
    rep = HANDLERS[cfg.subcommand](cfg)
    rep.record = {"schema": SCHEMA, "command": f"{cfg.subcommand} {cfg.action}", **rep.record}
    return rep


def render(rep: Report, fmt: str) -> str:
    if fmt == "record":
        return json.dumps(rep.record, sort_keys=True, allow_nan=True) + "\n"
    return "\n".join(rep.lines) + "\n"


def run(cfg: RunConfig, out: TextIO | None = None, err: TextIO | None = None) -> int:
    """Execute ``cfg``; write the report to ``out`` and diagnostics to ``err``; return the exit code."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        text = render(execute(cfg), cfg.output_format)
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_NUMERICAL
    except Exception as exc:  # noqa: BLE001 - last-resort guard for the exit-code contract
        print(f"internal error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_INTERNAL
    out.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-10, help="convergence tolerance (default 1e-10)")
    common.add_argument("--horizon", type=int, default=200, help="recurrence horizon M (default 200)")
    common.add_argument("--depth", type=int, default=64, help="prefix / approximant depth (default 64)")
    common.add_argument("--iters", type=int, default=30, help="tau iterations (default 30)")
    common.add_argument("--state", type=int, default=None, help="state for 'mc recurrence' (default 0)")
    common.add_argument("--format", choices=("text", "record"), default="text", dest="output_format")

    parser = argparse.ArgumentParser(prog="coinduct", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, actions in COMMANDS.items():
        p = sub.add_parser(name)
        acts = p.add_subparsers(dest="action", required=True)
        for act in actions:
            a = acts.add_parser(act, parents=[common])
            a.add_argument("inputs", nargs="*")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            subcommand=args.subcommand, action=args.action, inputs=tuple(args.inputs),
            tolerance=args.tol, horizon=args.horizon, depth=args.depth, iters=args.iters,
            state=args.state, output_format=args.output_format,
        )
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
