"""The ptower command line.

Subcommands: omega (print an omega element), layers (tabulate tower
layers), fukuda (stabilization checks, single or batch), infer
(inference from observed class-group data), oracle (brute force vs
closed form on descent instances), lemma-aug (the augmentation-ideal
generation check).

Exit codes: 0 success or consistent; 1 usage or schema error;
2 mathematical inconsistency; 3 enumeration or precision budget
exceeded. All seeded commands are byte-reproducible for a fixed seed.
"""

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass

from .descent import (
    DeltaGroup,
    DescentInstance,
    augmentation_check,
    build_group,
    canonical_h_exponents,
    compare_oracle,
    compile_to_tower,
    delta_preset,
    random_descent_instance,
)
from .errors import (
    ActionNotHomomorphism,
    BudgetExceeded,
    GenerationFailed,
    InfiniteQuotientError,
    InvalidGroupTable,
    LevelOutOfRange,
    MissingLevels,
    NoStableFit,
    NotAutomorphism,
    OrderNotPPower,
    ParameterMismatch,
    PrecisionExhausted,
    RamHypNotAsserted,
    SchemaError,
    TheoremViolation,
    ValidationError,
    WellDefinednessViolation,
)
from .hmodule import AbelianType, make_module
from .instances import instance_to_json, load_instance_file
from .iwasawa import mu_lambda, omega
from .padic import RingParams
from .tower import (
    ElementaryModule,
    TowerInstance,
    check_stabilization,
    elementary_growth,
    fit_growth,
    layer_sequence,
    random_instance,
    rank_stabilization,
)

_USAGE_ERRORS = (
    SchemaError,
    ValidationError,
    RamHypNotAsserted,
    MissingLevels,
    WellDefinednessViolation,
    NotAutomorphism,
    OrderNotPPower,
    InvalidGroupTable,
    ActionNotHomomorphism,
    ParameterMismatch,
    LevelOutOfRange,
    GenerationFailed,
    ValueError,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _fmt_type(t: AbelianType) -> str:
    return "[" + ",".join(str(e) for e in t.exponents) + "]"


def _fmt_group(t: AbelianType, p: int) -> str:
    if t.is_trivial:
        return "0"
    return " ⊕ ".join(
        f"Z/{p}" if e == 1 else f"Z/{p}^{e}" for e in t.exponents)


def _parse_k(text):
    if text == "full":
        return "full"
    try:
        k = int(text)
    except ValueError:
        raise _UsageError(f'--k must be an integer >= 1 or "full", '
                          f'got {text!r}')
    if k < 1:
        raise _UsageError('--k must be an integer >= 1 or "full"')
    return k


def _parse_type(text) -> AbelianType:
    text = text.strip()
    if text in ("", "-", "0", "[]"):
        return AbelianType(())
    text = text.strip("[]")
    try:
        exps = sorted((int(x) for x in text.split(",")), reverse=True)
    except ValueError:
        raise _UsageError(f"cannot parse abelian type {text!r}")
    return AbelianType(tuple(exps))


# -- omega -----------------------------------------------------------------

def _cmd_omega(args) -> int:
    params = RingParams(args.p, args.precision)
    w = omega(params, args.n)
    print(" ".join(str(c) for c in w.coeffs))
    mu, lam = mu_lambda(w)
    print(f"mu={mu} lambda={lam}")
    return 0


# -- layers ----------------------------------------------------------------

def _layer_table(obj, n_max):
    if isinstance(obj, DescentInstance):
        obj = compile_to_tower(obj)
    if isinstance(obj, TowerInstance):
        if n_max is None:
            n_max = obj.d if obj.d is not None else 8
        report = layer_sequence(obj, n_max)
        exps = report.exponent_sequence
        fit = None
        if len(exps) >= 4:
            try:
                fit = fit_growth(exps, obj.module.p)
            except NoStableFit:
                fit = None
        return obj.module.p, report, fit
    if isinstance(obj, ElementaryModule):
        if n_max is None:
            n_max = 6
        report, fit = elementary_growth(obj, n_max)
        return obj.params.p, report, fit
    raise SchemaError(f"cannot tabulate layers of {type(obj)}")


def _cmd_layers(args) -> int:
    obj = load_instance_file(args.file)
    p, report, fit = _layer_table(obj, args.n_max)
    stab = report.stabilization_index
    if args.format == "json":
        payload = {
            "layers": [
                {"n": rec.n, "type": list(rec.abelian_type.exponents),
                 "e": rec.e}
                for rec in report.records
            ],
            "stabilization_index": stab,
            "fit": None if fit is None else {
                "mu": fit.mu, "lambda": fit.lam, "nu": fit.nu,
                "from": fit.n0,
            },
        }
        print(json.dumps(payload, sort_keys=True))
        return 0
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["n", "type", "e"])
        for rec in report.records:
            writer.writerow([rec.n, _fmt_type(rec.abelian_type), rec.e])
        if stab is not None:
            writer.writerow(["stable_from", stab, ""])
        if fit is not None:
            writer.writerow(
                ["fit", f"mu={fit.mu} lambda={fit.lam} nu={fit.nu}",
                 fit.n0])
        sys.stdout.write(buf.getvalue())
        return 0
    print("n type e_n")
    for rec in report.records:
        print(f"{rec.n} {_fmt_type(rec.abelian_type)} {rec.e}")
    if stab is not None:
        print(f"stable from n={stab}")
    if fit is not None:
        note = " (nu < 0: abstract-module quotient)" if fit.nu < 0 else ""
        print(f"fit: mu={fit.mu} lambda={fit.lam} nu={fit.nu} "
              f"from n={fit.n0}{note}")
    return 0


# -- fukuda ----------------------------------------------------------------

def _fukuda_one(inst: TowerInstance, k, n_max) -> tuple:
    if n_max is None:
        n_max = inst.d if inst.d is not None else 8
    n_max = min(n_max, inst.d) if inst.d is not None else n_max
    v1 = check_stabilization(inst, k, n_max)
    v2 = rank_stabilization(inst, k, n_max)
    if (v1.hypothesis_holds, v1.conclusion_verified, v1.c_in_pk_x) != \
            (v2.hypothesis_holds, v2.conclusion_verified, v2.c_in_pk_x):
        raise TheoremViolation(
            "isomorphism and rank formulations disagree: "
            f"{v1} vs {v2}")
    return v1, n_max


def _cmd_fukuda(args) -> int:
    if args.random is not None:
        if args.p is None:
            raise _UsageError("--random needs --p")
        ks = [1, 2, "full"] if args.k is None else [_parse_k(args.k)]
        count = args.random
        for i in range(count):
            inst = random_instance(args.p, args.seed + i)
            for kk in ks:
                _fukuda_one(inst, kk, args.n_max)
        print(f"{count}/{count} consistent")
        return 0
    k = _parse_k(args.k) if args.k is not None else "full"
    if args.file is None:
        raise _UsageError("fukuda needs an instance file or --random")
    obj = load_instance_file(args.file)
    if isinstance(obj, DescentInstance):
        obj = compile_to_tower(obj)
    if not isinstance(obj, TowerInstance):
        raise SchemaError("fukuda needs a tower or descent instance")
    verdict, n_max = _fukuda_one(obj, k, args.n_max)
    kname = "full" if k == "full" else f"p^{k}"
    if not verdict.hypothesis_holds:
        print(f"hypothesis fails (no claim): layers 0 and 1 differ "
              f"at {kname}")
        return 0
    print(f"hypothesis holds at {kname}: layers 0 and 1 agree")
    print(f"conclusion verified: layers 0..{n_max} agree at {kname}")
    witness = ("C-bar = 0" if k == "full" else f"C-bar in {kname} X-bar")
    print(f"{witness}: {'verified' if verdict.c_in_pk_x else 'FAILED'}")
    print("rank formulation: agrees")
    return 0 if verdict.c_in_pk_x else 2


# -- infer -----------------------------------------------------------------

@dataclass(frozen=True)
class ObservedTower:
    """User-supplied class-group observations at the bottom levels."""

    p: int
    a0: AbelianType
    a1: AbelianType
    ramhyp_asserted: bool


def _cmd_infer(args) -> int:
    if not args.ramhyp:
        raise RamHypNotAsserted(
            "refusing to infer: pass --ramhyp to assert that the tower "
            "satisfies the ramification hypothesis (totally ramified "
            "prime with H |x Delta_v inertia); this tool never verifies "
            "it")
    if args.a0 is None or args.a1 is None:
        raise MissingLevels("need observed types at levels 0 and 1 "
                            "(--a0 and --a1)")
    observed = ObservedTower(args.p, _parse_type(args.a0),
                             _parse_type(args.a1), True)
    k = _parse_k(args.k)
    RingParams(observed.p, 1)
    print("ramification hypothesis: asserted by user (not verified)")
    print(f"observed: A_0 = {_fmt_group(observed.a0, observed.p)}, "
          f"A_1 = {_fmt_group(observed.a1, observed.p)}")
    r0 = observed.a0 if k == "full" else observed.a0.mod_pk(k)
    r1 = observed.a1 if k == "full" else observed.a1.mod_pk(k)
    if r0 != r1:
        suffix = "" if k == "full" else f" mod p^{k}"
        print(f"theorem not applicable: A_1 and A_0 differ{suffix}")
        return 0
    if k == "full":
        if observed.a0.is_trivial:
            print("A_n trivial for all n")
        else:
            print(f"A_n ≅ {_fmt_group(observed.a0, observed.p)} "
                  f"for all n ≥ 1")
    else:
        print(f"A_n/p^{k} A_n ≅ "
              f"{_fmt_group(r0, observed.p)} for all n ≥ 1")
    if args.n_target is not None:
        shown = observed.a0 if k == "full" else r0
        for n in range(1, args.n_target + 1):
            print(f"  n={n}: {_fmt_group(shown, observed.p)}")
    return 0


# -- oracle ----------------------------------------------------------------

def _print_oracle_report(report) -> int:
    for rec in report.records:
        if rec.equal:
            print(f"n={rec.n}: equal {_fmt_type(rec.bruteforce)}")
        else:
            print(f"n={rec.n}: MISMATCH bruteforce="
                  f"{_fmt_type(rec.bruteforce)} closed_form="
                  f"{_fmt_type(rec.closed_form)}")
    if report.all_equal:
        print("oracle: all levels equal")
        return 0
    w = report.witness
    print(f"oracle: MISMATCH first at n={w.n}")
    return 2


def _cmd_oracle(args) -> int:
    if args.random is not None:
        if args.p is None or args.d is None:
            raise _UsageError("--random needs --p and --d")
        count = args.random
        for i in range(count):
            inst = random_descent_instance(
                args.p, args.d, args.delta, args.seed + i,
                budget=args.budget)
            if args.emit:
                with open(f"{args.emit}/descent_{args.seed + i}.json",
                          "w", encoding="utf-8") as fh:
                    fh.write(instance_to_json(inst))
            report = compare_oracle(inst, budget=args.budget)
            if not report.all_equal:
                w = report.witness
                print(f"seed {args.seed + i}: MISMATCH at n={w.n}: "
                      f"bruteforce={_fmt_type(w.bruteforce)} "
                      f"closed_form={_fmt_type(w.closed_form)}")
                print(instance_to_json(inst), end="")
                return 2
        print(f"{count}/{count} equal")
        return 0
    if args.file is None:
        raise _UsageError("oracle needs an instance file or --random")
    obj = load_instance_file(args.file)
    if not isinstance(obj, DescentInstance):
        raise SchemaError("oracle needs a descent instance")
    report = compare_oracle(obj, budget=args.budget)
    return _print_oracle_report(report)


# -- lemma-aug -------------------------------------------------------------

def _cmd_lemma_aug(args) -> int:
    if args.table is not None:
        delta = DeltaGroup(json.loads(args.table))
    else:
        delta = delta_preset(args.preset)
    module = make_module(args.p, (), ())
    h_exps = canonical_h_exponents(delta, args.p, args.d)
    group = build_group(args.p, args.d, delta, module, h_exps,
                        [[] for _ in range(delta.order)],
                        budget=args.budget)
    ok = augmentation_check(group, args.n, args.precision)
    print("verified" if ok else "FAILED")
    return 0 if ok else 2


# -- parser ----------------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(prog="ptower", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    q = sub.add_parser(
        "omega",
        help="print omega_n = (h^(p^n) - 1)/(h - 1) as coefficients, "
             "low degree first (note: some texts call T * omega_n by "
             "this name; this tool does not)")
    q.add_argument("--p", type=int, required=True)
    q.add_argument("--precision", type=int, required=True,
                   help="coefficients are reduced mod p^precision")
    q.add_argument("--n", type=int, required=True)
    q.set_defaults(func=_cmd_omega)

    q = sub.add_parser("layers", help="tabulate tower layers from an "
                                      "instance file")
    q.add_argument("file")
    q.add_argument("--n-max", type=int, default=None)
    q.add_argument("--format", choices=("text", "csv", "json"),
                   default="text")
    q.set_defaults(func=_cmd_layers)

    q = sub.add_parser("fukuda", help="stabilization check (file or "
                                      "seeded batch)")
    q.add_argument("file", nargs="?")
    q.add_argument("--k", default=None,
                   help='integer >= 1 or "full" (batch default: all of '
                        '1, 2, full)')
    q.add_argument("--n-max", type=int, default=None)
    q.add_argument("--random", type=int, default=None, metavar="COUNT")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--p", type=int, default=None)
    q.set_defaults(func=_cmd_fukuda)

    q = sub.add_parser("infer", help="apply the stabilization theorem to "
                                     "observed class-group data")
    q.add_argument("--p", type=int, required=True)
    q.add_argument("--a0", default=None,
                   help='exponent list like "2,1"; "-" for trivial')
    q.add_argument("--a1", default=None)
    q.add_argument("--k", default="full")
    q.add_argument("--ramhyp", action="store_true",
                   help="assert the ramification hypothesis holds")
    q.add_argument("--n-target", type=int, default=None)
    q.set_defaults(func=_cmd_infer)

    q = sub.add_parser("oracle", help="brute force vs closed form on "
                                      "descent instances")
    q.add_argument("file", nargs="?")
    q.add_argument("--random", type=int, default=None, metavar="COUNT")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--p", type=int, default=None)
    q.add_argument("--d", type=int, default=None)
    q.add_argument("--delta", choices=("trivial", "z2"), default="trivial")
    q.add_argument("--budget", type=int, default=1 << 20, metavar="ELEMS")
    q.add_argument("--emit", default=None, metavar="DIR",
                   help="write generated instances as JSON files")
    q.set_defaults(func=_cmd_oracle)

    q = sub.add_parser("lemma-aug", help="augmentation-ideal generation "
                                         "check in the group ring")
    q.add_argument("--preset", choices=("trivial", "z2", "z3", "s3"),
                   default="trivial")
    q.add_argument("--table", default=None,
                   help="inline JSON multiplication table")
    q.add_argument("--p", type=int, required=True)
    q.add_argument("--d", type=int, required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--precision", type=int, required=True)
    q.add_argument("--budget", type=int, default=1 << 20, metavar="ELEMS")
    q.set_defaults(func=_cmd_lemma_aug)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (TheoremViolation, InfiniteQuotientError) as exc:
        print(f"inconsistency: {exc}", file=sys.stderr)
        return 2
    except (BudgetExceeded, PrecisionExhausted) as exc:
        print(f"budget: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
