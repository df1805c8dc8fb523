"""Command-line front end.

Every engine in the library is reachable from here; outputs are canonical
JSON (sorted keys, two-space indent, trailing newline), DOT graphs, or —
for the word-level helpers — the word string itself.  Exit codes: 0 for
success, 1 when a verification fails, 2 for usage or schema errors, 3 when
an enumeration cap is exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import example1, example2, quotients, separation, words
from .errors import CapExceededError, SchemaError, WordSyntaxError


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def load_certificate(path, enumeration_cap=None):
    """Read a certificate file, dispatching on its ``type`` tag."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(obj, dict) or "type" not in obj:
        raise SchemaError(f"{path}: certificate objects carry a 'type' field")
    kind = obj["type"]
    if kind == "separation":
        return separation.separation_from_obj(obj, enumeration_cap=enumeration_cap)
    if kind == "ex1_tail":
        return example1.ex1_tail_from_obj(obj, enumeration_cap=enumeration_cap)
    if kind == "ex1_not_closed":
        return example1.ex1_witness_from_obj(obj, enumeration_cap=enumeration_cap)
    if kind == "ex2":
        return example2.ex2_from_obj(obj, enumeration_cap=enumeration_cap)
    raise SchemaError(f"{path}.type: unknown certificate type {kind!r}")


def emit_certificate(cert) -> str:
    """Canonical JSON text for any certificate or witness object."""
    if isinstance(cert, separation.SeparationCertificate):
        return canonical_json(separation.separation_to_obj(cert))
    if isinstance(cert, example1.Ex1TailCertificate):
        return canonical_json(example1.ex1_tail_to_obj(cert))
    if isinstance(cert, example1.Ex1NotClosedWitness):
        return canonical_json(example1.ex1_witness_to_obj(cert))
    if isinstance(cert, example2.Ex2Certificate):
        return canonical_json(example2.ex2_to_obj(cert))
    raise TypeError(f"cannot serialize {type(cert).__name__}")


def report_to_obj(report: example2.Ex2Report) -> list:
    return [{"clause": c.clause, "m": c.m, "k": c.k, "pass": c.ok, "detail": c.detail}
            for c in report.clauses]


def check_to_obj(result) -> dict:
    return {"ok": result.ok, "reasons": list(result.reasons)}


def _partition(args) -> words.FactorPartition:
    return words.FactorPartition(args.k_size, args.l_size)


def _parse(text: str, partition: words.FactorPartition) -> words.Word:
    return words.parse_word(text, partition)


def _load_quotient(args, partition) -> quotients.FiniteQuotient:
    cap_kwargs = {} if args.cap is None else {"enumeration_cap": args.cap}
    if getattr(args, "abelian", None) is not None:
        return quotients.make_abelian_quotient(partition, args.abelian, **cap_kwargs)
    if getattr(args, "quotient", None) is not None:
        try:
            obj = json.loads(Path(args.quotient).read_text())
        except OSError as exc:
            raise SchemaError(f"{args.quotient}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{args.quotient}: not valid JSON: {exc}") from exc
        return quotients.quotient_from_obj(obj, partition, path="quotient", **cap_kwargs)
    raise SchemaError("a quotient is required: pass --quotient FILE or --abelian N")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proficert",
        description="Finite-quotient certificates for profinite-topology claims "
                    "about free groups.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    def add_partition_flags(p, k_default=1, l_default=1):
        p.add_argument("--k-size", type=int, default=k_default,
                       help=f"generators in the K free factor (default {k_default})")
        p.add_argument("--l-size", type=int, default=l_default,
                       help=f"generators in the L free factor (default {l_default})")

    def add_cap_flag(p):
        p.add_argument("--cap", type=int, default=None,
                       help="enumeration cap (default 10^6 image elements)")

    p = sub.add_parser("reduce", help="reduce a word and print its normal form")
    p.add_argument("word")
    add_partition_flags(p)

    p = sub.add_parser("image", help="image of a word in a finite quotient")
    p.add_argument("--word", required=True)
    p.add_argument("--quotient", help="quotient JSON file")
    p.add_argument("--abelian", type=int, help="use the abelian quotient mod N")
    add_partition_flags(p)
    add_cap_flag(p)

    p = sub.add_parser("distance", help="Cayley distance from the identity")
    p.add_argument("--word", required=True)
    p.add_argument("--quotient", help="quotient JSON file")
    p.add_argument("--abelian", type=int, help="use the abelian quotient mod N")
    p.add_argument("--max-radius", type=int, default=None,
                   help="search only the ball of this radius")
    add_partition_flags(p)
    add_cap_flag(p)

    p = sub.add_parser("stallings", help="folded subgroup graph for generators")
    p.add_argument("--gen", action="append", default=[],
                   help="subgroup generator word (repeatable)")
    p.add_argument("--dot", action="store_true", help="emit DOT instead of JSON")
    add_partition_flags(p)

    p = sub.add_parser("separate",
                       help="certificate separating a word from a subgroup "
                            "(or from the identity)")
    p.add_argument("--word", required=True, help="the word to exclude")
    p.add_argument("--gen", action="append", default=[],
                   help="subgroup generator word (repeatable)")
    add_partition_flags(p)
    add_cap_flag(p)

    p = sub.add_parser("ex1-elem", help="family elements a^(j!) b^(m_j)")
    p.add_argument("index", type=int)
    p.add_argument("--kind", choices=["a", "s", "m"], default="s",
                   help="a: a^(j!); s: the family member; m: the integer m_j")

    p = sub.add_parser("ex1-separate",
                       help="tail certificate separating a word from the family")
    p.add_argument("--word", required=True)
    p.add_argument("--head-margin", type=int, default=0)
    add_cap_flag(p)

    p = sub.add_parser("ex1-verify", help="recheck a stored certificate file")
    p.add_argument("certificate")
    add_cap_flag(p)

    p = sub.add_parser("ex1-witness",
                       help="kernel element of the given quotient witnessing "
                            "non-closedness of the extended family")
    p.add_argument("--quotient", help="quotient JSON file (rank-2 split 1+1)")
    p.add_argument("--abelian", type=int, help="use the abelian quotient mod N")
    add_cap_flag(p)

    p = sub.add_parser("ex2-construct", help="build a chain certificate")
    p.add_argument("--steps", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--f", default=None,
                   help="comma-separated distance requirements, e.g. 2,3,4,5")
    p.add_argument("--draws", type=int, default=example2.DEFAULT_MAX_SOURCE_DRAWS,
                   help="maximum quotient-source draws")
    add_partition_flags(p, k_default=2, l_default=2)
    add_cap_flag(p)

    p = sub.add_parser("ex2-verify", help="recheck a chain certificate file")
    p.add_argument("certificate")
    add_cap_flag(p)

    p = sub.add_parser("ex2-witness",
                       help="discreteness / intersection / non-closedness "
                            "witnesses from a chain certificate")
    p.add_argument("certificate")
    p.add_argument("--step", type=int, required=True)
    p.add_argument("--kind", choices=["discreteness", "intersection", "not-closed"],
                   default="discreteness")
    p.add_argument("--word", help="the word x for --kind intersection")
    p.add_argument("--dot", action="store_true",
                   help="emit the Cayley ball of the step's quotient as DOT")
    add_cap_flag(p)
    return parser


def _cmd_reduce(args) -> int:
    w = _parse(args.word, _partition(args))
    sys.stdout.write(words.format_word(w, _partition(args)) + "\n")
    return 0


def _cmd_image(args) -> int:
    partition = _partition(args)
    q = _load_quotient(args, partition)
    element = q.image(_parse(args.word, partition))
    sys.stdout.write(canonical_json(quotients.element_to_obj(q, element)))
    return 0


def _cmd_distance(args) -> int:
    partition = _partition(args)
    q = _load_quotient(args, partition)
    d = q.cayley_distance(_parse(args.word, partition), max_radius=args.max_radius)
    sys.stdout.write(canonical_json({"distance": d}))
    return 0


def _cmd_stallings(args) -> int:
    partition = _partition(args)
    gens = [_parse(g, partition) for g in args.gen]
    graph = separation.build_stallings(partition, gens)
    if args.dot:
        sys.stdout.write(separation.graph_to_dot(graph))
    else:
        sys.stdout.write(canonical_json(separation.graph_to_obj(graph)))
    return 0


def _cmd_separate(args) -> int:
    partition = _partition(args)
    w = _parse(args.word, partition)
    gens = [_parse(g, partition) for g in args.gen]
    if gens:
        cert = separation.separate_from_subgroup(partition, gens, w,
                                                 enumeration_cap=args.cap)
    else:
        cert = separation.separate_from_identity(partition, w,
                                                 enumeration_cap=args.cap)
    sys.stdout.write(emit_certificate(cert))
    return 0


def _cmd_ex1_elem(args) -> int:
    if args.kind == "m":
        sys.stdout.write(str(example1.m_sequence(args.index)) + "\n")
        return 0
    w = example1.a_element(args.index) if args.kind == "a" else example1.s_element(args.index)
    sys.stdout.write(words.format_word(w, example1.EX1_PARTITION) + "\n")
    return 0


def _cmd_ex1_separate(args) -> int:
    w = _parse(args.word, example1.EX1_PARTITION)
    cert = example1.separate_from_S(w, head_margin=args.head_margin,
                                    enumeration_cap=args.cap)
    sys.stdout.write(emit_certificate(cert))
    return 0


def _cmd_ex1_verify(args) -> int:
    cert = load_certificate(args.certificate, enumeration_cap=args.cap)
    if isinstance(cert, example1.Ex1TailCertificate):
        result = example1.verify_ex1(cert)
    elif isinstance(cert, example1.Ex1NotClosedWitness):
        result = example1.verify_ex1_witness(cert)
    elif isinstance(cert, separation.SeparationCertificate):
        result = separation.verify_separation(cert)
    else:
        raise SchemaError("ex1-verify expects a separation, ex1_tail, or "
                          "ex1_not_closed certificate")
    sys.stdout.write(canonical_json(check_to_obj(result)))
    return 0 if result.ok else 1


def _cmd_ex1_witness(args) -> int:
    args.k_size, args.l_size = 1, 1
    q = _load_quotient(args, example1.EX1_PARTITION)
    witness = example1.not_closed_witness(q)
    sys.stdout.write(emit_certificate(witness))
    return 0


def _cmd_ex2_construct(args) -> int:
    partition = _partition(args)
    f = None
    if args.f is not None:
        try:
            f = [int(part) for part in args.f.split(",")]
        except ValueError:
            raise SchemaError(f"--f: expected comma-separated integers, got {args.f!r}")
    cap = quotients.DEFAULT_ENUMERATION_CAP if args.cap is None else args.cap
    cert = example2.construct_ex2(partition, steps=args.steps, f=f, seed=args.seed,
                                  enumeration_cap=cap, max_source_draws=args.draws)
    sys.stdout.write(emit_certificate(cert))
    return 0


def _cmd_ex2_verify(args) -> int:
    cert = load_certificate(args.certificate, enumeration_cap=args.cap)
    if not isinstance(cert, example2.Ex2Certificate):
        raise SchemaError("ex2-verify expects an ex2 certificate")
    report = example2.verify_ex2(cert)
    sys.stdout.write(canonical_json(report_to_obj(report)))
    return 0 if report.ok else 1


def _cmd_ex2_witness(args) -> int:
    cert = load_certificate(args.certificate, enumeration_cap=args.cap)
    if not isinstance(cert, example2.Ex2Certificate):
        raise SchemaError("ex2-witness expects an ex2 certificate")
    p = cert.params.partition
    if args.dot:
        sys.stdout.write(example2.ex2_ball_dot(cert, args.step))
        return 0
    if args.kind == "discreteness":
        members = example2.discreteness_witness(cert, args.step)
        sys.stdout.write(canonical_json({"step": args.step,
                                         "members": sorted(members)}))
        return 0
    if args.kind == "intersection":
        if args.word is None:
            raise SchemaError("--kind intersection requires --word")
        x = _parse(args.word, p)
        witness = example2.finite_intersection_witness(cert, x, args.step)
        sys.stdout.write(canonical_json({
            "step": witness.n,
            "word": words.format_word(witness.x, p),
            "members": sorted(witness.members),
            "distance": witness.distance,
            "length": witness.length,
            "records": list(witness.records),
        }))
        return 0
    u, v = example2.not_closed_witness2(cert, args.step)
    sys.stdout.write(canonical_json({
        "step": args.step,
        "u": words.format_word(u, p),
        "v": words.format_word(v, p),
    }))
    return 0


_COMMANDS = {
    "reduce": _cmd_reduce,
    "image": _cmd_image,
    "distance": _cmd_distance,
    "stallings": _cmd_stallings,
    "separate": _cmd_separate,
    "ex1-elem": _cmd_ex1_elem,
    "ex1-separate": _cmd_ex1_separate,
    "ex1-verify": _cmd_ex1_verify,
    "ex1-witness": _cmd_ex1_witness,
    "ex2-construct": _cmd_ex2_construct,
    "ex2-verify": _cmd_ex2_verify,
    "ex2-witness": _cmd_ex2_witness,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return _COMMANDS[args.command](args)
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except example2.NoAdmissibleElementError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SchemaError, WordSyntaxError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
