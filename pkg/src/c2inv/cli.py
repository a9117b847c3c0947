"""``c2inv`` command line.

Exit codes: 0 success, 2 bad input or precondition, 3 resource ceiling,
4 verification failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field

from . import __version__, kernels
from .errors import C2Error, OracleRangeError, PreconditionError, VerificationError
from .graph import read_graph
from .periods import PeriodConfig, certify, detect_c2_period, detect_vector_period, empirical_report, prefix_frequencies
from .poly import OracleConfig, c2_cw, c2_direct, c2_lemma3
from .transfer import Checkpoint, TransferSystem, build_system, cached_system, get_family, run
from .verify import TIERS, family_graph, run_tier

log = logging.getLogger("c2inv")


@dataclass
class RunRecord:
    command: str
    config: dict
    family: str | None = None
    p: int | None = None
    values: list = field(default_factory=list)
    period: dict | None = None
    started: float = 0.0
    finished: float = 0.0
    version: str = __version__

    @property
    def config_hash(self) -> str:
        blob = json.dumps({"command": self.command, **self.config}, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_json(self) -> str:
        d = asdict(self)
        d["config_hash"] = self.config_hash
        return json.dumps(d, sort_keys=True)


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    return int(raw) if raw else default


def _oracle_config(args) -> OracleConfig:
    return OracleConfig(max_points=args.max_points)


def _load_system(args) -> TransferSystem:
    fam = get_family(args.family).name
    if getattr(args, "system", None) and os.path.exists(args.system):
        S = TransferSystem.load(args.system)
        if (S.family, S.p) != (fam, args.p):
            raise PreconditionError(f"{args.system} holds {S.family} p={S.p}, not {fam} p={args.p}")
        return S
    S = cached_system(fam, args.p) if getattr(args, "system", None) is None else build_system(fam, args.p)
    if getattr(args, "system", None):
        S.save(args.system)
    return S


def cmd_oracle(args) -> int:
    if args.graph:
        g = read_graph(args.graph)
        label = args.graph
    else:
        if args.family is None or args.n is None:
            raise PreconditionError("give --graph FILE or --family with --n")
        fam = get_family(args.family).name
        g = family_graph(fam, args.n)
        label = f"{fam} n={args.n} (decompleted)"
    print(f"graph: {label}, {g.n} vertices, {g.num_edges} edges, p={args.p}")
    cfg = _oracle_config(args)
    triple = tuple(args.edges) if args.edges else (None, None, None)
    methods = ["direct", "lemma3", "cw"] if args.all_methods else [args.method]
    values = {}
    for m in methods:
        if m == "direct":
            v, count = c2_direct(g, args.p, cfg, return_count=True)
            print(f"direct: [Psi]_{args.p} = {count}, c2 = {v}")
        elif m == "lemma3":
            v, count = c2_lemma3(g, args.p, *triple, config=cfg, return_count=True)
            print(f"lemma3: [Psi^(ik,jk) Psi^(i,j)_k]_{args.p} = {count}, c2 = {v}")
        else:
            v, coef = c2_cw(g, args.p, *triple, config=cfg, return_count=True)
            print(f"cw: top coefficient = {coef}, c2 = {v}")
        values[m] = v
    if args.all_methods:
        if len(set(values.values())) != 1:
            print("DISAGREE")
            raise VerificationError(f"oracle methods disagree: {values}")
        print(f"AGREE c2 = {values['direct']}")
    else:
        print(f"c2 = {values[methods[0]]}")
    return 0


def cmd_family(args) -> int:
    fam = get_family(args.family).name
    S = _load_system(args)
    print(f"N={S.N}", flush=True)
    if args.export_matrix:
        with open(args.export_matrix, "w") as fh:
            S.export_triplets(fh)
    resume = None
    if args.resume:
        if not args.checkpoint or not os.path.exists(args.checkpoint):
            raise PreconditionError("--resume needs an existing --checkpoint file")
        resume = Checkpoint.load(args.checkpoint)
    rec = RunRecord("family", {"family": fam, "p": args.p, "steps": args.steps}, fam, args.p, started=time.time())
    out = open(args.out, "a" if resume else "w") if args.out else None
    try:
        for n, val in run(S, args.steps, checkpoint_path=args.checkpoint, checkpoint_every=args.checkpoint_every,
                          resume=resume):
            print(f"{n} {val}", flush=args.flush)
            rec.values.append(val)
            if out:
                out.write(json.dumps({"family": fam, "p": args.p, "n": n, "value": val}) + "\n")
    finally:
        if out:
            out.close()
    rec.finished = time.time()
    if args.record:
        with open(args.record, "w") as fh:
            fh.write(rec.to_json() + "\n")
    return 0


def cmd_period(args) -> int:
    fam = get_family(args.family).name
    S = _load_system(args)
    seq = S.sequence(args.observe)
    d, _ = detect_c2_period(seq)
    found = detect_vector_period(S, args.strategy, budget=args.budget, c2_period=d)
    if found.period is not None:
        rep = certify(S, found.period, d, transient=found.transient or 0)
    else:
        rep = empirical_report(seq, PeriodConfig(min_repeats=args.min_repeats), lower=found.lower_bound, p=args.p)
    out = {"family": fam, "p": args.p, "strategy": args.strategy, **rep.to_dict()}
    print(json.dumps(out, sort_keys=True))
    if args.record:
        rec = RunRecord("period", vars_subset(args, "family", "p", "strategy", "budget", "observe"), fam, args.p,
                        period=rep.to_dict())
        with open(args.record, "w") as fh:
            fh.write(rec.to_json() + "\n")
    return 0


def vars_subset(args, *names) -> dict:
    return {k: getattr(args, k) for k in names}


def cmd_prefix(args) -> int:
    if args.config:
        with open(args.config) as fh:
            conf = json.load(fh)
        blocks = [(int(p), list(b)) for p, b in conf["blocks"].items()]
    else:
        fam = get_family(args.family).name
        primes = [int(x) for x in args.primes.split(",")]
        blocks = []
        for p in primes:
            S = cached_system(fam, p)
            seq = S.sequence(args.observe)
            d, _ = detect_c2_period(seq)
            if d is None:
                raise PreconditionError(f"no c2 period visible for p={p} within {args.observe} values")
            blocks.append((p, seq[:d]))
    tab = prefix_frequencies(blocks, args.length)
    if args.format == "csv":
        sys.stdout.write(tab.to_csv())
    elif args.format == "plot":
        sys.stdout.write(tab.plot_csv())
    else:
        print(tab.to_json())
    return 0


def cmd_verify(args) -> int:
    results = run_tier(args.tier, echo=lambda s: print(s, flush=True))
    failed = [r for r in results if not r.ok]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 4 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="c2inv", description="c2 invariants of graphs at small primes")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    o = sub.add_parser("oracle", help="brute-force c2 of one graph")
    o.add_argument("--graph", help="graph file: 'n m' then one 'tail head' line per edge")
    o.add_argument("--family", choices=["c13", "c23", "C13", "C23"])
    o.add_argument("--n", type=int)
    o.add_argument("--p", type=int, required=True)
    o.add_argument("--method", choices=["direct", "lemma3", "cw"], default="lemma3")
    o.add_argument("--all-methods", action="store_true", help="run every method and cross-check")
    o.add_argument("--edges", type=int, nargs=3, metavar=("I", "J", "K"), help="edge triple for lemma3/cw")
    o.add_argument("--max-points", type=int, default=_env_int("C2INV_MAX_POINTS", OracleConfig.max_points))
    o.set_defaults(func=cmd_oracle)

    def system_args(sp):
        sp.add_argument("--family", required=True, choices=["c13", "c23", "C13", "C23"])
        sp.add_argument("--p", type=int, required=True)
        sp.add_argument("--system", help="load the built system from this .npz, or save it there")

    f = sub.add_parser("family", help="iterate the recurrence and stream c2 values")
    system_args(f)
    f.add_argument("--steps", type=int, default=100)
    f.add_argument("--checkpoint")
    f.add_argument("--checkpoint-every", type=int, default=_env_int("C2INV_CHECKPOINT_EVERY", 0))
    f.add_argument("--resume", action="store_true")
    f.add_argument("--out", help="JSONL output file")
    f.add_argument("--record", help="write a RunRecord JSON here")
    f.add_argument("--export-matrix", help="write the matrix as 'row col value' triplets")
    f.add_argument("--flush", action="store_true", help="flush stdout after every value")
    f.set_defaults(func=cmd_family)

    pe = sub.add_parser("period", help="c2 and vector periods as JSON")
    system_args(pe)
    pe.add_argument("--strategy", choices=["naive", "blockwise"], default="naive")
    pe.add_argument("--budget", type=int, default=1 << 20, help="maximum iteration steps")
    pe.add_argument("--observe", type=int, default=4096, help="c2 values used to find the c2 period")
    pe.add_argument("--min-repeats", type=int, default=5)
    pe.add_argument("--record")
    pe.set_defaults(func=cmd_period)

    px = sub.add_parser("prefix", help="prefix frequency table")
    px.add_argument("--config", help='JSON {"blocks": {"2": [...], "3": [...]}}')
    px.add_argument("--family", choices=["c13", "c23", "C13", "C23"])
    px.add_argument("--primes", default="2,3")
    px.add_argument("--length", type=int)
    px.add_argument("--observe", type=int, default=4096)
    px.add_argument("--format", choices=["csv", "json", "plot"], default="csv")
    px.set_defaults(func=cmd_prefix)

    v = sub.add_parser("verify", help="run a reproduction tier")
    v.add_argument("--tier", choices=TIERS, default="fast")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    log.debug("kernel backend: %s", kernels.BACKEND)
    if args.command == "prefix" and not args.config and not args.family:
        ap.error("prefix needs --config or --family")
    try:
        return args.func(args)
    except OracleRangeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except VerificationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except C2Error as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
