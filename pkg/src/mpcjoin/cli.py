"""Command-line harness: gen, run, check-bounds, subgraph, scaling-report."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import random
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .datagen import DistributionError, generate_data, parse_distribution
from .hypergraph import agm_bound, build_hypergraph, edge_cover_lp
from .joinalg import JoinAlgorithmError, solve_join
from .joinalg.bounds import bound_suite
from .mpcsim import LoadReport
from .relcore import JoinQuery, Relation, RelationError, join_oracle, read_query, write_query, write_relation
from .shapes import SHAPES, UnknownShape
from .subgraph import MODES, PatternError, enumerate_embeddings, read_edge_list, read_pattern
from .taxonomy import TaxonomyError

log = logging.getLogger("mpcjoin")

ORACLE_LIMIT = 10 ** 5
SPOT_CHECKS = 1000


class UsageError(Exception):
    pass


def _int_list(text: str) -> list:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _write_manifest(path: Path, items: dict) -> None:
    path.write_text("".join(f"{k}={v}\n" for k, v in items.items()))


def read_manifest(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k] = v
    return out


def _load_query(args) -> JoinQuery:
    if args.query_dir:
        return read_query(args.query_dir)
    if not args.shape:
        raise UsageError("give --query-dir or --shape")
    return generate_data(args.shape, args.m, args.dist, args.seed[0] if isinstance(args.seed, list) else args.seed)


def spot_check(q: JoinQuery, result: Relation, seed: int, n: int = SPOT_CHECKS) -> tuple:
    """Sampled membership check plus the AGM size bound, for inputs too big for the oracle."""
    g = build_hypergraph(q)
    sizes = {frozenset(r.scheme): len(r) for r in q.relations}
    bound = agm_bound(g, edge_cover_lp(g).weights, sizes)
    problems = []
    if len(result) > bound:
        problems.append(f"result size {len(result)} exceeds AGM bound {float(bound):.6g}")
    rows = result.sorted_rows()
    rng = random.Random(seed)
    sample = rows if len(rows) <= n else rng.sample(rows, n)
    pos = {a: i for i, a in enumerate(result.scheme)}
    for row in sample:
        for r in q.relations:
            if tuple(row[pos[a]] for a in r.scheme) not in r.rows:
                problems.append(f"output {row} has no witness in {r.name or r.scheme}")
                break
    return not problems, problems


# ---------------------------------------------------------------- scaling

@dataclass
class ScalingReport:
    rows: list          # (p, mean total load, reference m/p^(1/rho), ratio)
    drift: float
    band: float

    @property
    def within_band(self) -> bool:
        return self.drift <= self.band

    def table(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["p", "total_load", "reference", "ratio"])
        for p, load, ref, ratio in self.rows:
            w.writerow([p, f"{load:.6g}", f"{ref:.6g}", f"{ratio:.6g}"])
        w.writerow(["drift", f"{self.drift:.6g}", "band", f"{self.band:g}"])
        return out.getvalue()


def scaling_report(loads: dict, m: int, rho, band: float = 4.0) -> ScalingReport:
    """``loads`` maps p to a list of total loads (one per seed)."""
    if len(loads) < 2:
        raise UsageError("need >= 2 p values")
    rho = float(Fraction(rho))
    rows = []
    for p in sorted(loads):
        vals = loads[p]
        if not vals:
            raise UsageError(f"no loads for p={p}")
        mean = sum(vals) / len(vals)
        ref = m / p ** (1 / rho)
        rows.append((p, mean, ref, mean / ref))
    ratios = [r[3] for r in rows]
    drift = max(ratios) / min(ratios) if min(ratios) > 0 else float("inf")
    return ScalingReport(rows, drift, band)


# ---------------------------------------------------------------- commands

def cmd_gen(args) -> int:
    q = generate_data(args.shape, args.m, args.dist, args.seed)
    out = Path(args.out)
    write_query(out, q)
    _write_manifest(out / "manifest.txt", {"shape": args.shape, "m": q.m, "dist": args.dist,
                                            "seed": args.seed, "relations": len(q.relations)})
    print(f"wrote {len(q.relations)} relations, m={q.m}, to {out}")
    return 0


def _bounds(q: JoinQuery, lams, oracle: bool, fh) -> int:
    bad = 0
    for lam in lams:
        for chk in bound_suite(q, lam, oracle=oracle):
            rec = json.loads(chk.as_json())
            rec["lambda"] = lam
            fh.write(json.dumps(rec) + "\n")
            bad += not chk.holds
    return bad


def cmd_run(args) -> int:
    q = _load_query(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rho = edge_cover_lp(build_hypergraph(q)).optimum
    use_oracle = q.m <= ORACLE_LIMIT and not args.no_oracle
    expected = join_oracle(q) if use_oracle else None
    failures = 0
    manifest = {"m": q.m, "relations": len(q.relations), "rho": rho,
                "oracle": "exact" if use_oracle else "spot-check", "p": ",".join(map(str, args.p)),
                "seeds": ",".join(map(str, args.seed))}
    for p in args.p:
        for seed in args.seed:
            res = solve_join(q, p, seed=seed, lam=args.lam)
            stem = f"p{p}_s{seed}"
            write_relation(out / f"result_{stem}.tsv", res.relation)
            (out / f"load_{stem}.csv").write_text(res.report.to_csv())
            if use_oracle:
                ok = res.relation.rows == expected.rows
                note = "" if ok else f"{len(res.relation)} rows vs oracle {len(expected)}"
            else:
                ok, probs = spot_check(q, res.relation, seed)
                note = "; ".join(probs[:3])
            failures += not ok
            manifest[f"load.{stem}"] = res.report.total_load
            manifest[f"lambda.{stem}"] = res.info.lam
            manifest[f"check.{stem}"] = "pass" if ok else "FAIL"
            print(f"p={p} seed={seed} lambda={res.info.lam} rows={len(res.relation)} "
                  f"load={res.report.total_load} {'ok' if ok else 'FAIL ' + note}")
    if use_oracle:
        write_relation(out / "oracle.tsv", expected)
    if args.bounds:
        lams = sorted({r for r in (int(v) for k, v in manifest.items() if k.startswith("lambda."))})
        with (out / "bounds.jsonl").open("w") as fh:
            bad = _bounds(q, lams, use_oracle, fh)
        manifest["bound_failures"] = bad
        failures += bad
        print(f"bounds: {bad} failures, see {out / 'bounds.jsonl'}")
    manifest["failures"] = failures
    _write_manifest(out / "manifest.txt", manifest)
    return 0 if failures == 0 else 1


def cmd_check_bounds(args) -> int:
    q = _load_query(args)
    lams = [args.lam] if args.lam else [2, 4]
    use_oracle = q.m <= ORACLE_LIMIT
    if args.out:
        with Path(args.out).open("w") as fh:
            bad = _bounds(q, lams, use_oracle, fh)
    else:
        bad = _bounds(q, lams, use_oracle, sys.stdout)
    print(f"{bad} bound failures", file=sys.stderr)
    return 0 if bad == 0 else 1


def cmd_subgraph(args) -> int:
    pattern = read_pattern(args.pattern)
    data = read_edge_list(args.graph)
    res = enumerate_embeddings(pattern, data, args.p[0], args.seed[0], args.mode, args.dedup, args.lam)
    text = "\t".join(map(str, res.attrs)) + "\n" + "".join("\t".join(map(str, r)) + "\n"
                                                            for r in res.sorted_rows())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "embeddings.tsv").write_text(text)
        (out / "load.csv").write_text(res.report.to_csv())
    print(f"pattern={args.pattern} mode={args.mode} dedup={args.dedup} "
          f"embeddings={len(res)} homomorphisms={res.homomorphisms} load={res.report.total_load}")
    return 0


def cmd_scaling_report(args) -> int:
    loads: dict = {}
    m = args.m
    rho = args.rho
    for d in args.inputs:
        d = Path(d)
        man = read_manifest(d / "manifest.txt") if (d / "manifest.txt").exists() else {}
        m = m or int(man.get("m", 0))
        rho = rho or man.get("rho")
        for f in sorted(d.glob("load_p*_s*.csv")):
            p = int(f.stem.split("_")[1][1:])
            loads.setdefault(p, []).append(LoadReport.from_csv(f.read_text()).total_load)
    if not m or rho is None:
        raise UsageError("cannot tell m and rho: pass --m and --rho or a run directory with a manifest")
    rep = scaling_report(loads, m, rho, args.band)
    sys.stdout.write(rep.table())
    if not rep.within_band:
        print(f"drift {rep.drift:.3g} exceeds band {args.band:g}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mpcjoin", description="Simulated MPC joins, bound checks and reports.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def data_flags(sp, seed_list=True):
        sp.add_argument("--query-dir", help="directory of R_*.tsv relation files")
        sp.add_argument("--shape", help=f"generate a query: {', '.join(sorted(SHAPES))}")
        sp.add_argument("--m", type=int, default=1000, help="total input size for --shape")
        sp.add_argument("--dist", default="uniform", help="uniform | zipf(s) | planted-heavy(f)")
        if seed_list:
            sp.add_argument("--seed", type=_int_list, default=[0], help="comma-separated seeds")

    sp = sub.add_parser("gen", help="write generated relation files")
    sp.add_argument("--shape", required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--dist", default="uniform")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_gen)

    sp = sub.add_parser("run", help="solve, compare to the oracle, record loads")
    data_flags(sp)
    sp.add_argument("--p", type=_int_list, default=[8], help="comma-separated machine counts")
    sp.add_argument("--lambda", dest="lam", type=int, default=None)
    sp.add_argument("--bounds", action="store_true", help="also run the bound suite")
    sp.add_argument("--no-oracle", action="store_true")
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("check-bounds", help="bound suite as JSON lines")
    data_flags(sp)
    sp.add_argument("--lambda", dest="lam", type=int, default=None)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_check_bounds)

    sp = sub.add_parser("subgraph", help="enumerate pattern occurrences in an edge-list graph")
    sp.add_argument("--pattern", required=True, help="built-in name or edge-list file")
    sp.add_argument("--graph", required=True, help="edge list, one 'u v' per line")
    sp.add_argument("--p", type=_int_list, default=[8])
    sp.add_argument("--seed", type=_int_list, default=[0])
    sp.add_argument("--lambda", dest="lam", type=int, default=None)
    sp.add_argument("--mode", choices=MODES, default="homomorphism")
    sp.add_argument("--dedup", action="store_true", help="one representative per automorphism orbit")
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_subgraph)

    sp = sub.add_parser("scaling-report", help="load vs m/p^(1/rho) from run directories")
    sp.add_argument("inputs", nargs="+", help="run output directories")
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--rho", type=Fraction, default=None)
    sp.add_argument("--band", type=float, default=4.0)
    sp.set_defaults(fn=cmd_scaling_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "lam", None) is not None and args.lam < 1:
        ap.print_usage(sys.stderr)
        print(f"{ap.prog}: error: --lambda must be >= 1", file=sys.stderr)
        return 2
    if any(p < 1 for p in getattr(args, "p", None) or []):
        ap.print_usage(sys.stderr)
        print(f"{ap.prog}: error: --p values must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        print(f"{ap.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (UnknownShape, DistributionError, RelationError, PatternError, TaxonomyError,
            JoinAlgorithmError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
