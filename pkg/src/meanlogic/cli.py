"""Command-line workbench.

Subcommands: validate, eval, mean, powermean, check {los,diagonal,compose,
preserved}, types {realized,extremes,realize}, equiv, game, approx fit.
Exit codes: 0 the property holds / success, 1 the property fails with a
counterexample in the report, 2 invalid input.  --json switches every
subcommand to machine output.  Rationals render as "p/q"; p-th roots render
with 12 significant digits labeled approx.
"""

import argparse
import json
import os
import sys
from fractions import Fraction

from . import kernel
from .approx import chebyshev_fit, check_preserved
from .charge import load_charge
from .errors import DomainError, FormatError, MeanLogicError
from .formula import FragmentSpec, enumerate_fragment, free_variables, parse, unparse
from .mean import (
    compose_check,
    convex_combination,
    diagonal_check,
    los_pointmass_check,
    mean_to_json,
    powermean,
    ultramean,
    verify_mean_theorem,
)
from .rationals import format_rational, parse_rational
from .structure import as_pnorm, load_structure, save_structure, structure_to_json, validate_structure
from .typespace import (
    Fragment,
    back_and_forth,
    equiv_check,
    extreme_types,
    realize_convex_type,
    realized_types,
)


def _fr(value):
    return format_rational(Fraction(value))


def _cell(value):
    # report rows mix rationals with counts, floats, and status strings
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return str(value)
    if isinstance(value, int):
        return str(value)
    return "%.12g" % value


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError("%s: %s" % (path, exc)) from exc
    except OSError as exc:
        raise FormatError("%s: %s" % (path, exc)) from exc


def _load_structure(path):
    try:
        return load_structure(path)
    except OSError as exc:
        raise FormatError("%s: %s" % (path, exc)) from exc


def _load_charge(path):
    try:
        return load_charge(path)
    except OSError as exc:
        raise FormatError("%s: %s" % (path, exc)) from exc


def _load_fragment(path, signature, pn):
    """Fragment file: either a spec to enumerate or explicit formula texts.

    Explicit form: {"formulas": ["R(x)", ...], "free_vars": ["x"]}.
    """
    data = _load_json(path)
    if isinstance(data, dict) and "formulas" in data:
        formulas = [parse(text, signature) for text in data["formulas"]]
        free_vars = tuple(data.get("free_vars", ()))
        return formulas, free_vars
    spec = FragmentSpec.from_json(data)
    return list(enumerate_fragment(spec, signature, pn)), spec.free_vars


def _parse_at(entries):
    out = {}
    for entry in entries or ():
        for piece in entry.split(","):
            piece = piece.strip()
            if not piece:
                continue
            if "=" not in piece:
                raise FormatError("--at expects var=element, got %r" % piece)
            name, _, element = piece.partition("=")
            out[name.strip()] = element.strip()
    return out


def _check_report_json(report):
    return {
        "name": report.name,
        "ok": report.ok,
        "rows": [
            {"label": r.label, "lhs": _cell(r.lhs), "rhs": _cell(r.rhs), "ok": r.ok}
            for r in report.rows
        ],
    }


def _emit_check(report, as_json, quiet_rows=False):
    if as_json:
        print(json.dumps(_check_report_json(report), indent=2))
    else:
        print(report.name)
        for row in report.rows:
            if quiet_rows and row.ok:
                continue
            mark = "ok" if row.ok else "MISMATCH"
            print(
                "  %-24s lhs=%s rhs=%s  %s"
                % (row.label, _cell(row.lhs), _cell(row.rhs), mark)
            )
        print("result: %s" % ("pass" if report.ok else "FAIL"))
    return 0 if report.ok else 1


def _mean_summary(mean, verify=None):
    out = {
        "p": mean.pnorm.p,
        "classes": mean.size,
        "raw_tuples": len(mean.class_map),
        "universe": list(mean.base.universe),
    }
    if verify is not None:
        out["verify"] = verify
    return out


def _write_mean(mean, args):
    if getattr(args, "out", None):
        save_structure(mean.base, args.out)
    if getattr(args, "sidecar", None):
        with open(args.sidecar, "w") as fh:
            json.dump(mean_to_json(mean), fh, indent=2)


def _verify_fragment(mean, formulas, max_cases, seed):
    rows = []
    ok = True
    for formula in formulas:
        report = verify_mean_theorem(mean, formula, max_cases=max_cases, seed=seed)
        bad = report.counterexample()
        rows.append(
            {
                "formula": unparse(formula),
                "ok": report.ok,
                "counterexample": None
                if bad is None
                else {"case": bad.label, "lhs": _cell(bad.lhs), "rhs": _cell(bad.rhs)},
            }
        )
        ok = ok and report.ok
    return ok, rows


def _emit_mean(mean, args, verify_pack=None):
    verify_rows = None
    code = 0
    if verify_pack is not None:
        ok, verify_rows = verify_pack
        code = 0 if ok else 1
    _write_mean(mean, args)
    if args.json:
        payload = _mean_summary(mean, verify_rows)
        if not getattr(args, "out", None):
            payload["structure"] = structure_to_json(mean.base)
            payload["sidecar"] = mean_to_json(mean)
        print(json.dumps(payload, indent=2))
        return code
    print("classes: %d (from %d raw tuples), p=%d" % (mean.size, len(mean.class_map), mean.pnorm.p))
    for idx, name in enumerate(mean.base.universe):
        rep = mean.raw_label(mean.representatives[idx])
        print("  %s <- %s" % (name, rep))
    if verify_rows is not None:
        for row in verify_rows:
            if row["ok"]:
                print("  verified: %s" % row["formula"])
            else:
                bad = row["counterexample"]
                print(
                    "  MISMATCH: %s at %s: %s vs %s"
                    % (row["formula"], bad["case"], bad["lhs"], bad["rhs"])
                )
        print("verify: %s" % ("pass" if code == 0 else "FAIL"))
    return code


def _cmd_validate(args):
    structure = _load_structure(args.structure)
    report = validate_structure(structure, args.p)
    if args.json:
        print(
            json.dumps(
                {
                    "valid": report.ok,
                    "violations": [v.describe() for v in report.violations],
                },
                indent=2,
            )
        )
    elif report.ok:
        print("valid")
    else:
        print(report.describe())
    return 0 if report.ok else 1


def _cmd_eval(args):
    structure = _load_structure(args.structure)
    formula = parse(args.formula, structure.signature)
    assignment = _parse_at(args.at)
    names = free_variables(formula)
    missing = [n for n in names if n not in assignment]
    if missing:
        raise DomainError("free variable %r needs --at %s=<element>" % (missing[0], missing[0]))
    env = {n: assignment[n] for n in names}
    value = kernel.evaluate_batch(formula, structure, [env], args.p)[0]
    if args.json:
        print(json.dumps({"value": _fr(value)}))
    else:
        print(_fr(value))
    return 0


def _cmd_mean(args):
    charge = _load_charge(args.charge)
    factors = [_load_structure(path) for path in args.structures]
    mean = ultramean(factors, charge, args.p, args.cap)
    verify_pack = None
    if args.verify:
        formulas, _ = _load_fragment(args.verify, factors[0].signature, as_pnorm(args.p))
        verify_pack = _verify_fragment(mean, formulas, args.max_cases, args.seed)
    return _emit_mean(mean, args, verify_pack)


def _cmd_powermean(args):
    structure = _load_structure(args.structure)
    charge = _load_charge(args.charge)
    mean = powermean(structure, charge, args.p, args.cap)
    verify_pack = None
    if args.verify:
        formulas, _ = _load_fragment(args.verify, structure.signature, as_pnorm(args.p))
        verify_pack = _verify_fragment(mean, formulas, args.max_cases, args.seed)
    return _emit_mean(mean, args, verify_pack)


def _cmd_check_los(args):
    factors = [_load_structure(path) for path in args.structures]
    formulas, _ = _load_fragment(args.fragment, factors[0].signature, as_pnorm(args.p))
    report = los_pointmass_check(factors, args.pointmass, formulas, args.p, args.cap)
    return _emit_check(report, args.json, quiet_rows=True)


def _cmd_check_diagonal(args):
    structure = _load_structure(args.structure)
    charge = _load_charge(args.charge)
    formulas, _ = _load_fragment(args.fragment, structure.signature, as_pnorm(args.p))
    report = diagonal_check(structure, charge, formulas, args.p, args.cap)
    return _emit_check(report, args.json, quiet_rows=True)


def _cmd_check_compose(args):
    structure = _load_structure(args.structure)
    mu = _load_charge(args.mu)
    nu = _load_charge(args.nu)
    formulas, _ = _load_fragment(args.fragment, structure.signature, as_pnorm(args.p))
    report = compose_check(
        structure, mu, nu, formulas, args.p, args.cap, args.max_cases, args.seed
    )
    return _emit_check(report, args.json, quiet_rows=True)


def _cmd_check_preserved(args):
    data = _load_json(args.pairs)
    base = os.path.dirname(os.path.abspath(args.pairs))
    combos = []
    for entry in data:
        if isinstance(entry, dict):
            eps, lpath, rpath = entry["eps"], entry["left"], entry["right"]
        else:
            eps, lpath, rpath = entry
        left = _load_structure(os.path.join(base, lpath))
        right = _load_structure(os.path.join(base, rpath))
        combos.append((parse_rational(eps), left, right))
    if not combos:
        raise FormatError("pairs file lists no combinations")
    formula = parse(args.formula, combos[0][1].signature)
    report = check_preserved(formula, combos, args.p)
    return _emit_check(report, args.json)


def _types_fragment(args, structure):
    formulas, free_vars = _load_fragment(args.fragment, structure.signature, as_pnorm(args.p))
    return Fragment(tuple(formulas), free_vars, args.p)


def _cmd_types_realized(args):
    structure = _load_structure(args.structure)
    fragment = _types_fragment(args, structure)
    entries = realized_types(structure, fragment)
    if args.json:
        print(
            json.dumps(
                {
                    "formulas": [unparse(f) for f in fragment.formulas],
                    "types": [
                        {
                            "tuple": [structure.universe[i] for i in combo],
                            "values": [_fr(v) for v in tv.values],
                        }
                        for combo, tv in entries
                    ],
                },
                indent=2,
            )
        )
        return 0
    print("fragment: %s" % ", ".join(unparse(f) for f in fragment.formulas))
    for combo, tv in entries:
        names = ", ".join(structure.universe[i] for i in combo)
        values = ", ".join(_fr(v) for v in tv.values)
        print("  (%s) -> (%s)" % (names, values))
    return 0


def _cmd_types_extremes(args):
    structure = _load_structure(args.structure)
    fragment = _types_fragment(args, structure)
    entries = realized_types(structure, fragment)
    verdicts = extreme_types([tv for _, tv in entries])
    if args.json:
        print(
            json.dumps(
                {
                    "formulas": [unparse(f) for f in fragment.formulas],
                    "types": [
                        {
                            "tuple": [structure.universe[i] for i in entries[v.position][0]],
                            "values": [_fr(x) for x in entries[v.position][1].values],
                            "extreme": v.extreme,
                            "certificate": None
                            if v.certificate is None
                            else [[pos, _fr(w)] for pos, w in v.certificate],
                        }
                        for v in verdicts
                    ],
                },
                indent=2,
            )
        )
        return 0
    for v in verdicts:
        combo, tv = entries[v.position]
        names = ", ".join(structure.universe[i] for i in combo)
        values = ", ".join(_fr(x) for x in tv.values)
        if v.extreme:
            print("  #%d (%s) -> (%s)  extreme" % (v.position, names, values))
        else:
            cert = " + ".join("%s * #%d" % (_fr(w), pos) for pos, w in v.certificate)
            print("  #%d (%s) -> (%s)  convex: %s" % (v.position, names, values, cert))
    return 0


def _parse_weights(data, arity):
    if isinstance(data, dict):
        out = {}
        for key, value in data.items():
            parts = tuple(piece.strip() for piece in key.split(","))
            if len(parts) != arity:
                raise FormatError("weight key %r is not a %d-tuple" % (key, arity))
            out[parts] = parse_rational(value)
        return out
    return [parse_rational(v) for v in data]


def _cmd_types_realize(args):
    structure = _load_structure(args.structure)
    fragment = _types_fragment(args, structure)
    weights = _parse_weights(_load_json(args.weights), fragment.arity)
    mean, realizers, vector = realize_convex_type(structure, weights, fragment, args.cap)
    _write_mean(mean, args)
    if args.json:
        payload = {
            "formulas": [unparse(f) for f in fragment.formulas],
            "realizers": [mean.base.universe[i] for i in realizers],
            "values": [_fr(v) for v in vector.values],
            "classes": mean.size,
        }
        if not getattr(args, "out", None):
            payload["structure"] = structure_to_json(mean.base)
            payload["sidecar"] = mean_to_json(mean)
        print(json.dumps(payload, indent=2))
        return 0
    print("realizers: (%s) in a powermean with %d classes" % (
        ", ".join(mean.base.universe[i] for i in realizers), mean.size))
    for formula, value in zip(fragment.formulas, vector.values):
        print("  %s = %s" % (unparse(formula), _fr(value)))
    return 0


def _cmd_equiv(args):
    left = _load_structure(args.left)
    right = _load_structure(args.right)
    data = _load_json(args.fragment)
    if isinstance(data, dict) and "formulas" in data:
        spec = [parse(text, left.signature) for text in data["formulas"]]
    else:
        spec = FragmentSpec.from_json(data)
    verdict = equiv_check(left, right, spec, args.p)
    if args.json:
        payload = {
            "agree": verdict.agree,
            "sentences_checked": verdict.sentences_checked,
            "conclusive": verdict.conclusive,
        }
        if verdict.counterexample is not None:
            sentence, lv, rv = verdict.counterexample
            payload["counterexample"] = {
                "sentence": unparse(sentence),
                "left": _fr(lv),
                "right": _fr(rv),
            }
        print(json.dumps(payload, indent=2))
    elif verdict.agree:
        print(
            "indistinguishable over %d sentences (not a proof of equivalence)"
            % verdict.sentences_checked
        )
    else:
        sentence, lv, rv = verdict.counterexample
        print("counterexample: %s = %s vs %s" % (unparse(sentence), _fr(lv), _fr(rv)))
    return 0 if verdict.agree else 1


def _cmd_game(args):
    left = _load_structure(args.left)
    right = _load_structure(args.right)
    formulas, free_vars = _load_fragment(args.fragment, left.signature, as_pnorm(args.p))
    fragment = Fragment(tuple(formulas), free_vars, args.p)
    verdict = back_and_forth(left, right, fragment, args.depth)
    if args.json:
        payload = {"success": verdict.success, "depth": verdict.depth}
        if verdict.witness is not None:
            round_no, side, element = verdict.witness
            payload["witness"] = {"round": round_no, "side": side, "element": element}
        print(json.dumps(payload, indent=2))
    elif verdict.success:
        print("success to depth %d" % verdict.depth)
    else:
        round_no, side, element = verdict.witness
        print("failure at round %d: %s challenge %s has no partner" % (round_no, side, element))
    return 0 if verdict.success else 1


def _cmd_approx_fit(args):
    named = []
    for path in args.structures:
        name = os.path.splitext(os.path.basename(path))[0]
        named.append((name, _load_structure(path)))
    by_name = dict(named)
    if len(by_name) != len(named):
        raise FormatError("structure file basenames must be distinct")
    signature = named[0][1].signature
    target = parse(args.target, signature)
    basis = [parse(text, signature) for text in args.basis]
    corpus = list(named)
    for entry in _load_json(args.closures) if args.closures else ():
        if isinstance(entry, dict):
            eps, lname, rname = entry["eps"], entry["left"], entry["right"]
        else:
            eps, lname, rname = entry
        eps = parse_rational(eps)
        if lname not in by_name or rname not in by_name:
            raise FormatError("closure names must match structure file basenames")
        mixed = convex_combination(eps, by_name[lname], by_name[rname], args.p)
        corpus.append(("mix(%s,%s,%s)" % (_fr(eps), lname, rname), mixed.base))
    fit = chebyshev_fit(target, basis, corpus, args.p)
    if args.json:
        print(
            json.dumps(
                {
                    "epsilon": _fr(fit.epsilon),
                    "coefficients": {
                        unparse(b): _fr(c) for b, c in zip(basis, fit.coefficients)
                    },
                    "residuals": [_fr(r) for r in fit.residuals],
                    "combination": unparse(fit.combination(basis)),
                },
                indent=2,
            )
        )
        return 0
    print("epsilon = %s" % _fr(fit.epsilon))
    for b, c in zip(basis, fit.coefficients):
        print("  coef[%s] = %s" % (unparse(b), _fr(c)))
    print("combination: %s" % unparse(fit.combination(basis)))
    for (name, _), r in zip(corpus, fit.residuals):
        print("  residual[%s] = %s" % (name, _fr(r)))
    return 0


def _add_common(parser, cap=False, seed=False, out=False):
    parser.add_argument("-p", "--p", dest="p", type=int, default=1, help="metric exponent")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    if cap:
        parser.add_argument("--cap", type=int, default=None, help="raw tuple cap override")
    if seed:
        parser.add_argument("--max-cases", type=int, default=None, help="sample at most this many tuples")
        parser.add_argument("--seed", type=int, default=0, help="sampling seed")
    if out:
        parser.add_argument("-o", "--out", help="write the base structure JSON here")
        parser.add_argument("--sidecar", help="write the class/charge sidecar JSON here")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="meanlogic",
        description="workbench for linear continuous logic on finite metric structures",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("validate", help="check structure axioms and moduli")
    q.add_argument("--structure", required=True)
    _add_common(q)
    q.set_defaults(func=_cmd_validate)

    q = sub.add_parser("eval", help="evaluate a formula on a structure")
    q.add_argument("--structure", required=True)
    q.add_argument("--formula", required=True)
    q.add_argument("--at", action="append", help="var=element, repeatable or comma-joined")
    _add_common(q)
    q.set_defaults(func=_cmd_eval)

    q = sub.add_parser("mean", help="build an ultramean of several structures")
    q.add_argument("--charge", required=True)
    q.add_argument("--structures", nargs="+", required=True)
    q.add_argument("--verify", help="fragment file: verify the mean identity per formula")
    _add_common(q, cap=True, seed=True, out=True)
    q.set_defaults(func=_cmd_mean)

    q = sub.add_parser("powermean", help="build a powermean of one structure")
    q.add_argument("--structure", required=True)
    q.add_argument("--charge", required=True)
    q.add_argument("--verify", help="fragment file: verify the mean identity per formula")
    _add_common(q, cap=True, seed=True, out=True)
    q.set_defaults(func=_cmd_powermean)

    chk = sub.add_parser("check", help="verify a structural property").add_subparsers(
        dest="check", required=True
    )

    q = chk.add_parser("los", help="point-mass charges collapse to a factor")
    q.add_argument("--structures", nargs="+", required=True)
    q.add_argument("--pointmass", type=int, required=True, help="factor position carrying the mass")
    q.add_argument("--fragment", required=True)
    _add_common(q, cap=True)
    q.set_defaults(func=_cmd_check_los)

    q = chk.add_parser("diagonal", help="the diagonal embeds into the powermean")
    q.add_argument("--structure", required=True)
    q.add_argument("--charge", required=True)
    q.add_argument("--fragment", required=True)
    _add_common(q, cap=True)
    q.set_defaults(func=_cmd_check_diagonal)

    q = chk.add_parser("compose", help="iterated powermeans match the product charge")
    q.add_argument("--structure", required=True)
    q.add_argument("--mu", required=True)
    q.add_argument("--nu", required=True)
    q.add_argument("--fragment", required=True)
    _add_common(q, cap=True, seed=True)
    q.set_defaults(func=_cmd_check_compose)

    q = chk.add_parser("preserved", help="sentence interpolates under convex combination")
    q.add_argument("--formula", required=True)
    q.add_argument("--pairs", required=True, help="JSON list of {eps,left,right} file triples")
    _add_common(q, cap=True)
    q.set_defaults(func=_cmd_check_preserved)

    typ = sub.add_parser("types", help="fragment type vectors").add_subparsers(
        dest="types", required=True
    )

    q = typ.add_parser("realized", help="type vector of every point tuple")
    q.add_argument("--structure", required=True)
    q.add_argument("--fragment", required=True)
    _add_common(q)
    q.set_defaults(func=_cmd_types_realized)

    q = typ.add_parser("extremes", help="extreme points of the realized type set")
    q.add_argument("--structure", required=True)
    q.add_argument("--fragment", required=True)
    _add_common(q)
    q.set_defaults(func=_cmd_types_extremes)

    q = typ.add_parser("realize", help="realize a convex combination of types")
    q.add_argument("--structure", required=True)
    q.add_argument("--fragment", required=True)
    q.add_argument("--weights", required=True, help="JSON weights per point tuple")
    _add_common(q, cap=True, out=True)
    q.set_defaults(func=_cmd_types_realize)

    q = sub.add_parser("equiv", help="compare two structures over a sentence fragment")
    q.add_argument("--left", required=True)
    q.add_argument("--right", required=True)
    q.add_argument("--fragment", required=True)
    _add_common(q)
    q.set_defaults(func=_cmd_equiv)

    q = sub.add_parser("game", help="back-and-forth type-equality game")
    q.add_argument("--left", required=True)
    q.add_argument("--right", required=True)
    q.add_argument("--fragment", required=True)
    q.add_argument("--depth", type=int, required=True)
    _add_common(q)
    q.set_defaults(func=_cmd_game)

    apx = sub.add_parser("approx", help="affine approximation over a corpus").add_subparsers(
        dest="approx", required=True
    )

    q = apx.add_parser("fit", help="best sup-norm affine fit of a sentence")
    q.add_argument("--target", required=True)
    q.add_argument("--basis", nargs="+", required=True)
    q.add_argument("--structures", nargs="+", required=True)
    q.add_argument("--closures", help="JSON list of (eps, left name, right name)")
    _add_common(q)
    q.set_defaults(func=_cmd_approx_fit)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MeanLogicError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except (KeyError, TypeError, ValueError) as exc:
        # malformed report/pairs files surface here
        print("error: invalid input (%s)" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
