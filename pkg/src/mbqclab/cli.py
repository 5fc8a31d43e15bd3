"""Command-line interface.

Verbs: ``solve``, ``profile``, ``channel``, ``oracle``, ``run <experiment>``,
``verify``. Exit codes: 0 success, 2 invariant violation, 3 convergence
failure, 4 bad configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .channel import RotationSchedule, channel_matrix, export_channel_json, gm_exact, target_rotation
from .errors import ConvergenceError
from .experiments import (
    EXPERIMENTS,
    ExperimentConfig,
    GroundStateCache,
    run_experiment,
)
from .groundstate import SolverParams, save_state, solve_dmrg, solve_exact
from .oracle import MeasurementPlan, enumerate_channel, export_oracle_json
from .pauli import ChainSpec
from .stringorder import export_profile_csv, export_profile_json, profile

EXIT_OK = 0
EXIT_INVARIANT = 2
EXIT_CONVERGENCE = 3
EXIT_CONFIG = 4


def _chain_spec(args) -> ChainSpec:
    return ChainSpec(args.n_sites, args.alpha)


def _solver_params(args, spec: ChainSpec) -> SolverParams:
    overrides = {}
    if args.chi_max:
        overrides["chi_max"] = args.chi_max
    return SolverParams.for_spec(spec, **overrides)


def _get_state(args, spec: ChainSpec):
    params = _solver_params(args, spec)
    if getattr(args, "cache", None):
        return GroundStateCache(args.cache).get(spec, params)
    if spec.n_sites <= 15:
        return solve_exact(spec, params)
    return solve_dmrg(spec, params)


def cmd_solve(args) -> int:
    spec = _chain_spec(args)
    state = _get_state(args, spec)
    print(f"alpha={spec.alpha} N={spec.n_sites} energy={state.energy:.12f}")
    print(f"representation={state.representation} residual={state.convergence.residual:.3e}")
    if args.out:
        path = save_state(state, Path(args.out))
        print(f"saved {path}")
    return EXIT_OK


def cmd_profile(args) -> int:
    spec = _chain_spec(args)
    state = _get_state(args, spec)
    deltas = None
    if args.delta_max:
        deltas = list(range(2, args.delta_max + 1, 2))
    prof = profile(state, args.parity, deltas=deltas)
    print(f"bulk <K> = {prof.bulk_value:.12f}  xi = {prof.xi_estimate:.3f} sites")
    out = Path(args.out)
    pair_path, site_path = export_profile_csv(prof, out)
    export_profile_json(prof, out / "profile_summary.json")
    print(f"wrote {pair_path}, {site_path}")
    return EXIT_OK


def _schedule_from_args(args, bulk: float) -> RotationSchedule:
    buffer_d = args.buffer_d
    if buffer_d is None:
        buffer_d = 3 if args.axis == "z" else 2
    return RotationSchedule.auto_scaled(args.axis, args.m, args.delta, buffer_d, args.beta_log, bulk)


def cmd_channel(args) -> int:
    spec = _chain_spec(args)
    state = _get_state(args, spec)
    prof = profile(state, "odd" if args.axis == "z" else "even")
    sched = _schedule_from_args(args, prof.bulk_value)
    channel = channel_matrix(state, sched, method=args.method)
    print("channel matrix:")
    for row in channel.matrix:
        print("  " + "  ".join(f"{x:+.9f}" for x in row))
    print(f"d_m = {channel.d_m:.9e}   2|G_m| = {2 * abs(channel.gm):.9e}")
    print(f"beta_effective = {channel.beta_effective:.9f} (target {sched.beta_log})")
    if args.out:
        export_channel_json(channel, sched, args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    spec = _chain_spec(args)
    if spec.n_sites > 14:
        print("oracle enumeration needs N <= 14", file=sys.stderr)
        return EXIT_CONFIG
    state = solve_exact(spec, _solver_params(args, spec))
    prof = profile(state, "odd" if args.axis == "z" else "even")
    sched = _schedule_from_args(args, prof.bulk_value)
    plan = MeasurementPlan.from_schedule(sched, spec.n_sites)
    result = enumerate_channel(state, plan)
    print(f"branches = {result.n_branches}, probability deviation = {result.max_prob_deviation:.3e}")
    print("oracle channel:")
    for row in result.channel:
        print("  " + "  ".join(f"{x:+.9f}" for x in row))
    if args.out:
        export_oracle_json(plan, result, args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_run(args) -> int:
    if args.config:
        try:
            config = ExperimentConfig.from_ini(args.config)
        except (ValueError, OSError, SyntaxError) as exc:
            print(f"bad config: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        config = replace(config, experiment=args.experiment)
    else:
        config = ExperimentConfig(experiment=args.experiment)
    overrides = {}
    if args.desk:
        overrides["desk"] = True
    if args.alpha is not None:
        overrides["alphas"] = (args.alpha,)
    if args.n_sites:
        overrides["n_sites"] = args.n_sites
    if args.delta:
        overrides["deltas"] = tuple(args.delta)
    if args.m:
        overrides["m_values"] = tuple(args.m)
    if args.beta_log is not None:
        overrides["beta_log"] = args.beta_log
    if args.chi_max:
        overrides["chi_max"] = args.chi_max
    if args.out:
        overrides["output_dir"] = args.out
    if args.cache:
        overrides["cache_dir"] = args.cache
    config = replace(config, **overrides)
    table, errors = run_experiment(config)
    print(f"{config.experiment}: {len(table)} rows -> {config.output_dir}")
    if len(errors):
        print(f"{len(errors)} sweep points failed (see errors table)", file=sys.stderr)
        return EXIT_CONVERGENCE
    if config.experiment == "thm2_optimality":
        if not table.metadata["convexity"]["is_convex"]:
            print("convexity violated", file=sys.stderr)
            return EXIT_INVARIANT
        d_m = table.column("d_m")
        if d_m and min(range(len(d_m)), key=d_m.__getitem__) != 0:
            print("packing cost not minimized at the densest spacing", file=sys.stderr)
            return EXIT_INVARIANT
    return EXIT_OK


def cmd_verify(args) -> int:
    """Desk-scale invariant suite; exercises every module end to end."""
    from . import (
        cluster_stabilizer,
        expectation,
        multiply,
        string_order_geq,
        string_order_pair,
        symmetry_generators,
    )
    from .oracle import enumerate_logical_expectations

    failures = []

    def check(name: str, ok: bool, detail: str = ""):
        tag = "ok" if ok else "FAIL"
        print(f"[{tag}] {name}" + (f"  ({detail})" if detail else ""))
        if not ok:
            failures.append(name)

    n = 9
    identity_ok = True
    for k in range(1, n - 1):
        for l in range(k + 2, n, 2):
            prod = multiply(string_order_geq(k, n), multiply(string_order_pair(k, l, n), string_order_geq(l, n)))
            identity_ok &= prod.is_identity
    check("string operator triple products collapse to identity", identity_ok)

    g0, g1 = symmetry_generators(n)
    comm_ok = all(
        (g * string_order_geq(k, n)).letters == (string_order_geq(k, n) * g).letters
        and (g * string_order_geq(k, n)).phase_power == (string_order_geq(k, n) * g).phase_power
        for g in (g0, g1)
        for k in range(1, n)
    )
    check("symmetries commute with string operators", comm_ok)

    try:
        state = solve_exact(ChainSpec(n, 0.3))
    except ConvergenceError as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    check("ground state is symmetric", abs(expectation(state, g0) - 1) < 1e-8 and abs(expectation(state, g1) - 1) < 1e-8)

    pair_ok = True
    for k in (1, 2, 3):
        l = k + 4
        lhs = expectation(state, string_order_geq(k, n) * string_order_geq(l, n))
        rhs = expectation(state, string_order_pair(k, l, n))
        pair_ok &= abs(lhs - rhs) < 1e-10
    check("<K_geq_k K_geq_l> equals <K_kl>", pair_ok)

    prof = profile(state, "odd")
    sched = RotationSchedule.auto_scaled("z", 2, 2, 3, 0.3, prof.bulk_value)
    channel = channel_matrix(state, sched, method="subset")
    channel_net = channel_matrix(state, sched, method="network")
    check(
        "subset and network channel paths agree",
        float(np.abs(channel.matrix - channel_net.matrix).max()) < 1e-10,
    )
    check("d_m equals 2|G_m|", abs(channel.d_m - 2 * abs(channel.gm)) < 1e-12)

    plan = MeasurementPlan.from_schedule(sched, n)
    result = enumerate_channel(state, plan)
    check(
        "oracle channel matches product formula",
        float(np.abs(result.channel - channel.matrix).max()) < 1e-8,
        f"max diff {float(np.abs(result.channel - channel.matrix).max()):.2e}",
    )
    check("branch probabilities sum to one", result.max_prob_deviation < 1e-10)

    wire = enumerate_logical_expectations(state, MeasurementPlan.wire(n))
    check("wire transmits <X> = 1", abs(wire.expectations[0] - 1) < 1e-8)

    try:
        dm = solve_dmrg(ChainSpec(11, 0.3), SolverParams(chi_max=16))
    except ConvergenceError as exc:
        print(f"DMRG failed: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    ex = solve_exact(ChainSpec(11, 0.3))
    check("DMRG and exact paths agree", abs(dm.energy - ex.energy) < 1e-7)

    if failures:
        print(f"{len(failures)} invariant(s) violated", file=sys.stderr)
        return EXIT_INVARIANT
    print("all invariants hold")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mbqclab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_chain_args(p):
        p.add_argument("--alpha", type=float, default=0.3)
        p.add_argument("--n-sites", type=int, default=11)
        p.add_argument("--chi-max", type=int, default=0)
        p.add_argument("--cache", type=str, default="")

    p_solve = sub.add_parser("solve", help="compute and optionally store a ground state")
    add_chain_args(p_solve)
    p_solve.add_argument("--out", type=str, default="")
    p_solve.set_defaults(func=cmd_solve)

    p_prof = sub.add_parser("profile", help="string order profile of a ground state")
    add_chain_args(p_prof)
    p_prof.add_argument("--parity", choices=("odd", "even"), default="odd")
    p_prof.add_argument("--delta-max", type=int, default=0)
    p_prof.add_argument("--out", type=str, default="out")
    p_prof.set_defaults(func=cmd_profile)

    p_chan = sub.add_parser("channel", help="logical channel of a rotation schedule")
    add_chain_args(p_chan)
    p_chan.add_argument("--axis", choices=("z", "x"), default="z")
    p_chan.add_argument("--m", type=int, default=2)
    p_chan.add_argument("--delta", type=int, default=2)
    p_chan.add_argument("--beta-log", type=float, default=0.2)
    p_chan.add_argument("--buffer-d", type=int, default=None)
    p_chan.add_argument("--method", choices=("auto", "subset", "network"), default="auto")
    p_chan.add_argument("--out", type=str, default="")
    p_chan.set_defaults(func=cmd_channel)

    p_orc = sub.add_parser("oracle", help="exhaustive MBQC branch enumeration (N <= 14)")
    add_chain_args(p_orc)
    p_orc.add_argument("--axis", choices=("z", "x"), default="z")
    p_orc.add_argument("--m", type=int, default=1)
    p_orc.add_argument("--delta", type=int, default=2)
    p_orc.add_argument("--beta-log", type=float, default=0.2)
    p_orc.add_argument("--buffer-d", type=int, default=None)
    p_orc.add_argument("--out", type=str, default="")
    p_orc.set_defaults(func=cmd_oracle)

    p_run = sub.add_parser("run", help="run a sweep experiment")
    p_run.add_argument("experiment", choices=[e for e in EXPERIMENTS if e != "custom"])
    p_run.add_argument("--config", type=str, default="")
    p_run.add_argument("--desk", action="store_true")
    p_run.add_argument("--alpha", type=float, default=None)
    p_run.add_argument("--n-sites", type=int, default=0)
    p_run.add_argument("--delta", type=int, nargs="*", default=None)
    p_run.add_argument("--m", type=int, nargs="*", default=None)
    p_run.add_argument("--beta-log", type=float, default=None)
    p_run.add_argument("--chi-max", type=int, default=0)
    p_run.add_argument("--out", type=str, default="")
    p_run.add_argument("--cache", type=str, default="")
    p_run.set_defaults(func=cmd_run)

    p_ver = sub.add_parser("verify", help="run the fast invariant suite")
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ValueError as exc:
        print(f"bad configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
