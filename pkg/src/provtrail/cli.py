"""``provtrail`` command line.

Exit codes: 0 success, 1 usage error, 2 domain error. Data goes to stdout
or ``--out``; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from fractions import Fraction
from pathlib import Path

from provtrail.corpus import (
    Corpus,
    load_corpus,
    read_dir,
    read_test,
    serialize_test,
    trace_to_seed,
)
from provtrail.engine import GenConfig, campaign
from provtrail.errors import ProvtrailError
from provtrail.postprocess import (
    PreservesCoverage,
    PreservesFailure,
    ddmin_reduce,
    normalize,
)
from provtrail.pseudoprov import MatchMode, oracle_min_segmentation, reconstruct
from provtrail.report import contribution_table, render
from provtrail.sut import detect_sut, get_sut, run_test, sut_ids

_GEN_RE = re.compile(r"^gen\d{6}\.test$")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _nonneg(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def _alpha(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="provtrail", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="run a seeded generation campaign")
    g.add_argument("--sut", required=True, choices=sut_ids())
    g.add_argument("--seeds", required=True, type=Path)
    g.add_argument("--out", required=True, type=Path)
    g.add_argument("--k", type=_positive, default=3)
    g.add_argument("--budget-tests", type=_nonneg, default=100)
    g.add_argument("--max-length", type=_positive, default=50)
    g.add_argument("--rng-seed", required=True, type=_u64)
    g.add_argument("--mode", choices=["subsequence", "weighted"], default="subsequence")
    g.add_argument("--alpha", type=_alpha, default=Fraction(2))
    g.add_argument("--inject-bug", action="store_true")

    for name, helptext in (("reduce", "delta-debug a test"), ("normalize", "rewrite a test to normal form")):
        r = sub.add_parser(name, help=helptext)
        r.add_argument("--sut", required=True, choices=sut_ids())
        r.add_argument("--test", required=True, type=Path)
        r.add_argument("--preserve", required=True, choices=["failure", "coverage"])
        r.add_argument("--inject-bug", action="store_true")
        r.add_argument("--out")

    pp = sub.add_parser("pseudoprov", help="reconstruct pseudo-provenance")
    pp.add_argument("--seeds", required=True, type=Path)
    pp.add_argument("--test", required=True, type=Path)
    pp.add_argument("--abstract", action="store_true")
    pp.add_argument("--include-generated", type=Path)
    pp.add_argument("--sut", choices=sut_ids())
    pp.add_argument("--check", action="store_true")
    pp.add_argument("--out")

    rp = sub.add_parser("report", help="tabulate seed contributions")
    rp.add_argument("--tests", required=True, type=Path)
    rp.add_argument("--seeds", required=True, type=Path)
    rp.add_argument("--transitive", action="store_true")
    rp.add_argument("--learned-only", action="store_true")
    rp.add_argument("--abstract", action="store_true")
    rp.add_argument("--format", choices=["text", "json"], default="text")
    rp.add_argument("--out")

    tr = sub.add_parser("trace", help="follow a component back to its seed")
    tr.add_argument("--corpus", required=True, type=Path)
    tr.add_argument("--seeds", type=Path)
    tr.add_argument("--test", required=True)
    tr.add_argument("--step", required=True, type=_nonneg)

    si = sub.add_parser("sut-info", help="dump coverage points and actions")
    si.add_argument("--sut", required=True, choices=sut_ids())
    return p


def cmd_generate(args) -> int:
    try:
        cfg = GenConfig(
            k=args.k,
            max_test_length=args.max_length,
            budget_tests=args.budget_tests,
            rng_seed=args.rng_seed,
            mode=args.mode,
            weight_exponent=args.alpha,
            fault_injection=args.inject_bug,
        )
    except ValueError as exc:
        raise UsageError(f"generate: {exc}") from None
    seeds = load_corpus(args.seeds)
    seeds_dir = Path(os.path.relpath(args.seeds.resolve(), args.out.resolve())).as_posix()
    result = campaign(seeds, args.sut, cfg, args.out, extra_manifest={"seeds_dir": seeds_dir})
    if result.best is None:
        print("no tests generated", file=sys.stderr)
    else:
        print(
            f"generated {result.generated} tests, learned {len(result.tests)}, "
            f"best {result.best.name} covers {len(result.best_result.coverage)} points "
            f"({result.best_result.branch_count()} branches)",
            file=sys.stderr,
        )
    return 0


def _predicate(args, t):
    if args.preserve == "failure":
        return PreservesFailure(fault_injection=args.inject_bug)
    try:
        r = run_test(args.sut, t, skip_disabled=False, fault_injection=args.inject_bug)
    except ProvtrailError as exc:
        raise ProvtrailError(f"predicate does not hold on original: {exc}") from None
    return PreservesCoverage(r.coverage, fault_injection=args.inject_bug)


def cmd_reduce(args) -> int:
    t = read_test(args.test)
    out = ddmin_reduce(t, _predicate(args, t), args.sut)
    _emit(serialize_test(out), args.out)
    print(f"reduced {len(t)} -> {len(out)} components", file=sys.stderr)
    return 0


def cmd_normalize(args) -> int:
    t = read_test(args.test)
    out = normalize(t, _predicate(args, t), args.sut)
    _emit(serialize_test(out), args.out)
    changed = sum(1 for a, b in zip(t.actions, out.actions) if a != b)
    print(f"normalized: {changed} components rewritten", file=sys.stderr)
    return 0


def cmd_pseudoprov(args) -> int:
    t = read_test(args.test)
    seeds = read_dir(args.seeds)
    generated = []
    if args.include_generated is not None:
        # never align a test against itself
        generated = [g for g in read_dir(args.include_generated) if g.name != t.name]
    corpus = Corpus.build(seeds, generated)
    if not corpus.seed_names:
        raise ProvtrailError(f"no seeds in {args.seeds}")
    mode = MatchMode.ABSTRACT if args.abstract else MatchMode.EXACT
    sut = args.sut
    if sut is None and mode is MatchMode.ABSTRACT:
        sut = detect_sut(a for s in seeds for a in s.actions).name
    include = args.include_generated is not None
    annotated, runs = reconstruct(t, corpus, mode, sut, include)
    _emit(serialize_test(annotated), args.out)
    if args.check:
        optimal = oracle_min_segmentation(t, corpus, mode, sut, include)
        print(f"greedy_runs {len(runs)}")
        print(f"optimal_runs {optimal}")
    return 0


def _learned_names(tests_dir: Path, names) -> set[str]:
    manifest = tests_dir / "campaign.json"
    if manifest.is_file():
        return set(json.loads(manifest.read_text(encoding="utf-8"))["learned"])
    return {n for n in names if _GEN_RE.match(n)}


def cmd_report(args) -> int:
    corpus = load_corpus(args.seeds, args.tests)
    tests = corpus.generated()
    if args.learned_only:
        keep = _learned_names(args.tests, [t.name for t in tests])
        tests = [t for t in tests if t.name in keep]
    sut = detect_sut(a for s in corpus.seeds() for a in s.actions)
    table = contribution_table(
        tests, corpus, sut, resolve_transitive=args.transitive, include_abstract=args.abstract
    )
    _emit(render(table, args.format), args.out)
    return 0


def cmd_trace(args) -> int:
    seeds_dir = args.seeds
    if seeds_dir is None:
        manifest = args.corpus / "campaign.json"
        if not manifest.is_file():
            raise UsageError("trace: --seeds is required when the corpus has no campaign.json")
        seeds_dir = Path(json.loads(manifest.read_text(encoding="utf-8"))["seeds_dir"])
        if not seeds_dir.is_absolute():
            seeds_dir = (args.corpus / seeds_dir).resolve()
    if args.corpus.resolve() == seeds_dir.resolve():
        corpus = load_corpus(seeds_dir)
    else:
        corpus = load_corpus(seeds_dir, args.corpus)
    chain = trace_to_seed(corpus, args.test, args.step)
    if not chain:
        print("(seed)")
    for origin in chain:
        print(origin)
    return 0


def cmd_sut_info(args) -> int:
    s = get_sut(args.sut)
    info = {"points": s.coverage_points(), "actions": s.list_actions(s.reset())}
    sys.stdout.write(json.dumps(info, indent=2, sort_keys=True) + "\n")
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "reduce": cmd_reduce,
    "normalize": cmd_normalize,
    "pseudoprov": cmd_pseudoprov,
    "report": cmd_report,
    "trace": cmd_trace,
    "sut-info": cmd_sut_info,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (ProvtrailError, OSError) as exc:
        print(f"provtrail: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
