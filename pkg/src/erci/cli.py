"""Command-line interface."""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time

from .game import GameError, game_from_dict, save_game, validate_game
from .monitor import load_monitor, save_monitor
from .preprocess import (HorizonZero, NotAcyclic, UnrealizableHard, core_from_dict, core_stats,
                         save_core, to_core)

log = logging.getLogger("erci")


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return f"{x:.12g}"
    return str(x)


def _round(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}") if math.isfinite(obj) else _fmt(obj)
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def _emit(obj) -> None:
    print(json.dumps(_round(obj), indent=1, sort_keys=True))


def load_core_arg(args):
    with open(args.game) as fh:
        d = json.load(fh)
    if "provenance" in d:
        return core_from_dict(d)
    game = game_from_dict(d)
    soft = load_monitor(args.soft) if getattr(args, "soft", None) else None
    hard = load_monitor(args.hard) if getattr(args, "hard", None) else None
    return to_core(game, soft, hard, getattr(args, "horizon", None))


def _target_args(args):
    if args.epsilon is not None or args.delta is not None:
        if args.epsilon is None or args.delta is None:
            raise SystemExit("error: --epsilon and --delta go together")
        return None, (args.epsilon, args.delta)
    if args.p is None or args.h is None:
        raise SystemExit("error: give --p and --h, or --epsilon and --delta")
    return (args.p, args.h), None


def _solve(core, args):
    from .mdp import pareto_explore_mdp
    from .sg import sg_pareto_explore
    target, regret = _target_args(args)
    solver = args.solver
    if solver == "auto":
        solver = "mdp" if core.is_mdp else "sg"
    if solver == "mdp":
        return pareto_explore_mdp(core, target, regret, delta=args.resolution, lam_max=args.lam_max)
    return sg_pareto_explore(core, target, regret, kappa0=args.kappa, lam_max=args.lam_max)


def cmd_validate(args) -> int:
    with open(args.game) as fh:
        game = game_from_dict(json.load(fh))
    rep = validate_game(game)
    _emit({"ok": rep.ok,
           "errors": [vars(e) for e in rep.errors],
           "warnings": [vars(w) for w in rep.warnings]})
    return 0 if rep.ok else 1


def cmd_preprocess(args) -> int:
    core = load_core_arg(args)
    if args.out:
        save_core(core, args.out)
    _emit(core_stats(core))
    return 0


def cmd_pareto(args) -> int:
    from .mdp import save_front_csv
    from .sg import build_front_tables
    core = load_core_arg(args)
    tables = build_front_tables(core, args.kappa, args.lam_max)
    root = tables.root
    front = [(float(l), float(p), float(h)) for l, p, h in zip(root.lam, root.p, root.h)]
    if args.out:
        save_front_csv(front, args.out)
    else:
        print("lambda,p,h")
        for l, p, h in front:
            print(f"{_fmt(l)},{_fmt(p)},{_fmt(h)}")
    if args.tables:
        tables.save(args.tables)
    return 0


def cmd_synthesize(args) -> int:
    core = load_core_arg(args)
    v = _solve(core, args)
    if args.verdict:
        v.save(args.verdict)
    if args.out and v.improviser is not None:
        v.improviser.save(args.out)
    _emit({"status": v.status, "target": {"p": v.target.p, "h": v.target.h}, "witness": v.to_dict()["witness"],
           "info": v.to_dict()["info"]})
    return v.exit_code


def _improviser_from_verdict(core, path):
    from .oracle import _rebuild_improviser
    from .verdict import REALIZABLE, load_verdict
    v = load_verdict(path)
    if v.status != REALIZABLE:
        raise SystemExit("error: the verdict carries no improviser")
    return _rebuild_improviser(core, v)


def cmd_sample(args) -> int:
    from .improviser import Episode, simulate
    core = load_core_arg(args)
    imp = _improviser_from_verdict(core, args.verdict)
    env = {"worst-p": "worst_case_performance", "worst-h": "worst_case_entropy",
           "uniform": "uniform_random"}.get(args.env)
    if args.env == "scripted":
        if not args.script:
            raise SystemExit("error: --env scripted needs --script")
        with open(args.script) as fh:
            env = {k: v for k, v in json.load(fh).items()}
    rep = simulate(core, imp, env, args.n, args.seed)
    if args.log:
        _write_logs(core, imp, env, args)
    _emit(rep.to_dict())
    return 0


def _write_logs(core, imp, env, args) -> None:
    from .improviser import Episode, WorstCaseEnv, _env_callable
    import numpy as np
    worst = None
    if isinstance(env, str) and env.startswith("worst"):
        worst = WorstCaseEnv(imp, "p" if env.endswith("performance") else "h")
    sel = None if worst else _env_callable(core, "uniform" if env == "uniform_random" else env)
    with open(args.log, "w") as fh:
        for i in range(min(args.n, args.log_episodes)):
            ep = Episode(imp, args.seed, i)
            while not ep.done:
                if core.owner[ep.node] == 0:
                    _, act = ep.step()
                else:
                    lo = core.node_ptr[ep.node]
                    if worst is not None:
                        j = worst.slot_index(ep.ci, ep.node, ep.state)
                    else:
                        j = int(np.argmax(sel(ep.node, ep.state)))
                    act = core.slot_action[lo + j]
                ep.observe(act, ep.chance(act))
            fh.write(ep.log_jsonl())


def cmd_verify(args) -> int:
    from .oracle import check_witness
    from .verdict import load_verdict
    core = load_core_arg(args)
    v = load_verdict(args.verdict)
    ok = check_witness(core, v)
    _emit({"status": v.status, "confirmed": bool(ok)})
    return 0 if ok else 1


def cmd_bench_drone(args) -> int:
    from .drone import BenchmarkSpec, gen_drone_benchmark
    from .sg import sg_pareto_explore
    spec = BenchmarkSpec(args.k, args.horizon)
    t0 = time.perf_counter()
    b = gen_drone_benchmark(spec, args.mode)
    if args.out:
        save_game(b.game, args.out)
        save_monitor(b.soft, args.out + ".soft.json")
    t1 = time.perf_counter()
    core = to_core(b.game, b.soft, b.hard, spec.horizon)
    t2 = time.perf_counter()
    out = {"k": spec.k, "horizon": spec.horizon, "mode": args.mode, "game_states": len(b.game.states),
           "core": core_stats(core), "generate_s": t1 - t0, "preprocess_s": t2 - t1}
    code = 0
    if args.epsilon is not None:
        v = sg_pareto_explore(core, regret=(args.epsilon, args.delta), kappa0=args.kappa)
        out.update({"status": v.status, "target": [v.target.p, v.target.h], "synthesize_s": time.perf_counter() - t2,
                    "kappa": v.info["kappa"]})
        code = v.exit_code
    _emit(out)
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="erci", description="Synthesize randomized ego strategies with performance and entropy guarantees")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1, help="worker count (solvers currently run single-threaded)")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def game_args(p, monitors=True):
        p.add_argument("--game", required=True, help="game JSON or preprocessed core JSON")
        if monitors:
            p.add_argument("--soft", help="soft-constraint monitor JSON (default: reach 'top')")
            p.add_argument("--hard", help="hard-constraint monitor JSON (default: accept all)")
            p.add_argument("--horizon", type=int, help="logical steps (default: number of states)")

    def solver_args(p):
        p.add_argument("--kappa", type=float, default=0.1)
        p.add_argument("--lam-max", type=float, default=100.0)

    p = sub.add_parser("validate", help="check a game file")
    p.add_argument("--game", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("preprocess", help="unroll and prune into a core game")
    game_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("pareto", help="front at the initial node as CSV")
    game_args(p)
    solver_args(p)
    p.add_argument("--out")
    p.add_argument("--tables", help="also dump every node's table as JSON")
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("synthesize", help="decide a target and emit an improviser")
    game_args(p)
    solver_args(p)
    p.add_argument("--p", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--resolution", type=float, default=1e-6, help="rationality bracket resolution")
    p.add_argument("--solver", choices=["auto", "mdp", "sg"], default="auto")
    p.add_argument("--out", help="improviser JSON")
    p.add_argument("--verdict", help="verdict JSON")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("sample", help="simulate the improviser of a verdict")
    game_args(p)
    p.add_argument("--verdict", required=True)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--env", choices=["worst-p", "worst-h", "uniform", "scripted"], default="worst-p")
    p.add_argument("--script", help="JSON {node: action} for --env scripted")
    p.add_argument("--log", help="write episode logs as JSON lines")
    p.add_argument("--log-episodes", type=int, default=10)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", help="confirm a verdict with the brute-force oracle")
    game_args(p)
    p.add_argument("--verdict", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="benchmarks")
    bsub = p.add_subparsers(dest="bench", required=True)
    d = bsub.add_parser("drone", help="patrol grid world")
    d.add_argument("--k", type=int, default=4)
    d.add_argument("--horizon", type=int, default=6)
    d.add_argument("--mode", choices=["point", "interval"], default="point")
    d.add_argument("--epsilon", type=float)
    d.add_argument("--delta", type=float, default=0.5)
    d.add_argument("--kappa", type=float, default=0.1)
    d.add_argument("--out", help="write the generated game JSON")
    d.set_defaults(func=cmd_bench_drone)
    return ap


def run_cli(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("ERCI_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 1
    if args.jobs > 1:
        log.info("--jobs %d requested; solvers run single-threaded", args.jobs)
    try:
        return args.func(args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return 1
        return int(exc.code or 0)
    except (GameError, HorizonZero, NotAcyclic, UnrealizableHard, ValueError, KeyError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, UnrealizableHard) else 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
