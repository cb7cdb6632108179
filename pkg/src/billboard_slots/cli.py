"""Batch command line: ``generate``, ``solve-common``, ``solve-disjoint``, ``baseline``, ``sweep``.

Exit status: 0 on success, 2 when every result is infeasible, 1 on error.
Settings come from ``--config`` (``key=value`` lines) and are overridden by flags.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

from . import bench
from .baselines import random_allocation, topk_allocation
from .continuous_greedy import theory_step
from .cover import BicriteriaConfig, solve_common
from .disjoint import solve_disjoint
from .influence import build_influence_matrix
from .instance import Instance
from .model import (InfeasibleError, ParseError, SlotUniverse, ValidationError, load_billboards, load_costs,
                    load_products, load_trajectories, save_billboards, save_costs, save_products,
                    save_trajectories)

log = logging.getLogger("billboard_slots")

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2

# flag name -> ExperimentConfig field
FLAG_FIELDS = {"alpha": "alpha", "beta": "beta", "products": "product_count", "epsilon": "epsilon",
               "lambda_m": "lambda_m", "seed": "seeds", "algo": "algorithms"}


def read_config(path) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(path, lineno, "expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _coerce(name, text):
    kinds = {f.name: f.type for f in fields(bench.ExperimentConfig)}
    kind = str(kinds[name])
    parts = [p for p in str(text).replace(";", ",").split(",") if p.strip()]
    if name in ("seeds", "algorithms"):
        return tuple(int(p) for p in parts) if name == "seeds" else tuple(p.strip() for p in parts)
    if name == "origin":
        return tuple(float(p) for p in parts)
    if "int" in kind and "float" not in kind:
        return int(text)
    if "None" in kind and str(text).lower() in ("", "none"):
        return None
    return float(text)


def experiment_config(args) -> bench.ExperimentConfig:
    values = {}
    if args.config:
        for k, v in read_config(args.config).items():
            name = FLAG_FIELDS.get(k, k)
            if name not in {f.name for f in fields(bench.ExperimentConfig)}:
                raise ValidationError(f"unknown config key {k!r}")
            values[name] = _coerce(name, v)
    for flag, name in FLAG_FIELDS.items():
        v = getattr(args, flag, None)
        if v is None or isinstance(v, list) and not v:
            continue
        if name == "seeds":
            v = tuple(v)
        elif name == "algorithms":
            v = tuple(v)
        elif isinstance(v, list):
            v = v[0]
        values[name] = v
    return bench.ExperimentConfig(**values)


# ---------------------------------------------------------------------------
# instance directories


def write_instance(out: Path, gen: bench.GeneratedInstance, cfg: bench.ExperimentConfig) -> None:
    out.mkdir(parents=True, exist_ok=True)
    save_trajectories(out / "trajectories.csv", gen.records)
    save_billboards(out / "billboards.csv", gen.universe.billboards)
    save_costs(out / "costs.csv", gen.costs)
    save_products(out / "products.csv", gen.products)
    t1, t2 = gen.universe.horizon
    (out / "instance.cfg").write_text(
        f"lambda_m={cfg.lambda_m!r}\nslot_duration={gen.universe.slot_duration}\nt1={t1}\nt2={t2}\n",
        encoding="utf-8")


def read_instance(path: Path) -> Instance:
    meta = read_config(path / "instance.cfg")
    products = load_products(path / "products.csv")
    ids = [p.product_id for p in products]
    records = load_trajectories(path / "trajectories.csv", ids)
    universe = SlotUniverse(load_billboards(path / "billboards.csv"), (int(meta["t1"]), int(meta["t2"])),
                            int(meta["slot_duration"]))
    matrix = build_influence_matrix(records, universe, float(meta["lambda_m"]), ids)
    costs = load_costs(path / "costs.csv", len(universe))
    inst = Instance(matrix, costs, products, universe)
    for finding in inst.findings():
        log.warning("%s", finding)
    return inst


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args) -> int:
    cfg = experiment_config(args)
    gen = bench.generate_instance(cfg, cfg.seeds[0])
    write_instance(Path(args.out), gen, cfg)
    print(f"wrote {len(gen.records)} trajectory records, {len(gen.universe)} slots, "
          f"{len(gen.products)} products to {args.out} (alpha achieved {gen.achieved_alpha:.3f})")
    return EXIT_OK


def cmd_solve_common(args) -> int:
    inst = read_instance(Path(args.instance))
    step = theory_step(inst.matrix.n_slots) if args.theory_step else None
    sol = solve_common(inst, BicriteriaConfig(epsilon=args.epsilon, seed=args.seed[0], polytope=args.polytope,
                                              step=step))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sol.dump(out / "solution.csv", out / "slots.csv")
    print(f"{len(sol.slots)} slots, cost {sol.cost:g}, {sol.n_satisfied}/{len(inst.products)} products satisfied, "
          f"{sol.rounds_used} rounding rounds, repaired {sorted(sol.repaired_products)}")
    return EXIT_OK if all(sol.satisfied.values()) else EXIT_INFEASIBLE


def cmd_solve_disjoint(args) -> int:
    inst = read_instance(Path(args.instance))
    outcome, stats = solve_disjoint(inst, args.delta_conf, args.epsilon, pilot=args.pilot,
                                    max_samples=args.max_samples, seed=args.seed[0], samples=args.samples,
                                    exhaustive=args.exhaustive, ratio=args.ratio)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stats.dump(out / "samples.csv")
    outcome.dump_sets(out / "allocation.csv")
    print(f"{stats.samples_run} samples ({stats.requested_samples} requested), {stats.feasible_count} feasible; "
          f"best cost {outcome.cost:g}, feasible={outcome.feasible}")
    return EXIT_OK if outcome.feasible else EXIT_INFEASIBLE


def cmd_baseline(args) -> int:
    inst = read_instance(Path(args.instance))
    algo = (args.algo or ["topk-baseline"])[0]
    if algo == "random-baseline":
        outcome = random_allocation(inst.matrix, inst.costs, inst.products, args.seed[0])
    elif algo == "topk-baseline":
        outcome = topk_allocation(inst.matrix, inst.costs, inst.products)
    else:
        raise ValidationError(f"baseline must be random-baseline or topk-baseline, got {algo!r}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outcome.dump_sets(out / "allocation.csv")
    print(f"{algo}: {outcome.n_satisfied}/{len(inst.products)} satisfied, cost {outcome.cost:g}")
    return EXIT_OK if outcome.feasible else EXIT_INFEASIBLE


def cmd_sweep(args) -> int:
    base = experiment_config(argparse.Namespace(**{**vars(args), "alpha": None, "beta": None,
                                                   "products": None, "epsilon": None, "lambda_m": None}))
    configs = bench.expand_grid(base, args.alpha or [base.alpha], args.beta, args.products, args.epsilon,
                                args.lambda_m)
    rows = bench.run_sweep(configs, workers=args.workers)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    bench.write_metrics(out, rows)
    bench.write_gnuplot(out.with_suffix(".gp"), out.name)
    print(f"wrote {len(rows)} rows to {out}")
    if rows and all(r["satisfied"] < r["products"] for r in rows):
        return EXIT_INFEASIBLE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="billboard-slots", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, grid=False):
        nargs = "+" if grid else None
        p.add_argument("--config")
        p.add_argument("--alpha", type=float, nargs=nargs)
        p.add_argument("--beta", type=float, nargs=nargs)
        p.add_argument("--products", type=int, nargs=nargs)
        p.add_argument("--epsilon", type=float, nargs=nargs)
        p.add_argument("--lambda-m", dest="lambda_m", type=float, nargs=nargs)
        p.add_argument("--seed", type=int, nargs="+", default=None)
        p.add_argument("--algo", nargs="+", choices=bench.ALGORITHMS)
        p.add_argument("--out", required=True)

    p = sub.add_parser("generate", help="write a synthetic instance directory")
    common(p)
    p.set_defaults(func=cmd_generate)

    def solver(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--instance", required=True, help="directory written by 'generate'")
        p.add_argument("--epsilon", type=float, default=0.1)
        p.add_argument("--seed", type=int, nargs="+", default=[0])
        p.add_argument("--out", required=True)
        p.set_defaults(func=func)
        return p

    p = solver("solve-common", cmd_solve_common, "common slot set via the bi-criteria cover")
    p.add_argument("--polytope", choices=("knapsack", "cardinality"), default="knapsack")
    p.add_argument("--theory-step", action="store_true",
                   help="continuous-greedy step T/ceil(n^5 T); only practical for a handful of slots")

    p = solver("solve-disjoint", cmd_solve_disjoint, "disjoint allocation via permutation sampling")
    p.add_argument("--delta-conf", type=float, default=0.1)
    p.add_argument("--pilot", type=int, default=64)
    p.add_argument("--max-samples", type=int, default=1000)
    p.add_argument("--samples", type=int)
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--ratio", action="store_true", help="greedy on gain per unit cost")

    p = solver("baseline", cmd_baseline, "random or top-k allocation")
    p.add_argument("--algo", nargs=1, choices=("random-baseline", "topk-baseline"))

    p = sub.add_parser("sweep", help="run a parameter grid and write a metrics table")
    common(p, grid=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, ParseError, InfeasibleError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
