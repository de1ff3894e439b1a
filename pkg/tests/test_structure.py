import itertools
import json
import random
from fractions import Fraction

import pytest

from instances import random_signature, random_structure, structure_a, unary_signature
from meanlogic.errors import DomainError, FormatError
from meanlogic.signature import FunctionSymbol, Modulus, RelationSymbol, Signature
from meanlogic.structure import (
    FiniteStructure,
    PNorm,
    product_distance_p,
    structure_from_json,
    structure_to_json,
    validate_structure,
)


def naive_violations(s, p=1):
    """Independent full validity scan: metric axioms, bounds, continuity."""
    out = []
    n = s.size
    for i in range(n):
        if s.metric[i][i] != 0:
            out.append("diag")
        for j in range(n):
            if s.metric[i][j] != s.metric[j][i]:
                out.append("sym")
            if i != j and s.metric[i][j] <= 0:
                out.append("pos")
            if s.metric[i][j] > 1:
                out.append("diam")
            for k in range(n):
                if p == 1 and s.metric[i][j] > s.metric[i][k] + s.metric[k][j]:
                    out.append("tri")

    def tuple_dist(xs, ys):
        if p == 1:
            return sum(s.metric[a][b] for a, b in zip(xs, ys))
        total = sum(Fraction(s.metric[a][b]) ** p for a, b in zip(xs, ys))
        return Fraction(float(total) ** (1.0 / p))

    for rsym in s.signature.relations:
        table = s.relations[rsym.name]
        combos = list(itertools.product(range(n), repeat=rsym.arity))
        for idx, combo in enumerate(combos):
            if not 0 <= table[idx] <= rsym.bound:
                out.append("bound")
        for xi, xs in enumerate(combos):
            for yi, ys in enumerate(combos):
                gap = abs(table[xi] - table[yi])
                cap = rsym.modulus.value(tuple_dist(xs, ys))
                if p == 1 and gap > cap:
                    out.append("cont")
                if p > 1 and float(gap) > float(cap) + 1e-9:
                    out.append("cont")
    for fsym in s.signature.functions:
        table = s.functions[fsym.name]
        combos = list(itertools.product(range(n), repeat=fsym.arity))
        for xi, xs in enumerate(combos):
            for yi, ys in enumerate(combos):
                gap = s.metric[table[xi]][table[yi]]
                cap = fsym.modulus.value(tuple_dist(xs, ys))
                if p == 1 and gap > cap:
                    out.append("fcont")
                if p > 1 and float(gap) > float(cap) + 1e-9:
                    out.append("fcont")
    return out


def test_structure_a_valid():
    a = structure_a()
    report = validate_structure(a, 1)
    assert report.ok
    assert report.violations == ()


def _patched(s, **kw):
    fields = dict(
        signature=s.signature,
        universe=s.universe,
        metric=s.metric,
        constants=s.constants,
        functions=s.functions,
        relations=s.relations,
    )
    fields.update(kw)
    return FiniteStructure(**fields)


def test_validate_catches_symmetry():
    a = structure_a()
    bad = _patched(a, metric=((Fraction(0), Fraction(1)), (Fraction(1, 2), Fraction(0))))
    report = validate_structure(bad, 1)
    assert not report.ok
    assert any("symmetry" in v.describe() for v in report.violations)


def test_validate_catches_diagonal_and_positivity():
    sig = unary_signature()
    bad = FiniteStructure(
        signature=sig,
        universe=("x", "y"),
        metric=((Fraction(1, 8), Fraction(1)), (Fraction(1), Fraction(0))),
        constants={"c": 0},
        functions={},
        relations={"R": (Fraction(0), Fraction(0))},
    )
    report = validate_structure(bad, 1)
    assert any("diagonal" in v.describe() for v in report.violations)


def test_validate_catches_triangle():
    sig = unary_signature()
    bad = FiniteStructure(
        signature=sig,
        universe=("x", "y", "z"),
        metric=(
            (Fraction(0), Fraction(1, 8), Fraction(1)),
            (Fraction(1, 8), Fraction(0), Fraction(1, 8)),
            (Fraction(1), Fraction(1, 8), Fraction(0)),
        ),
        constants={"c": 0},
        functions={},
        relations={"R": (Fraction(0),) * 3},
    )
    report = validate_structure(bad, 1)
    assert not report.ok
    assert any("triangle" in v.describe() for v in report.violations)


def test_validate_catches_diameter():
    sig = unary_signature()
    wide = FiniteStructure(
        signature=sig,
        universe=("x", "y"),
        metric=((Fraction(0), Fraction(3, 2)), (Fraction(3, 2), Fraction(0))),
        constants={"c": 0},
        functions={},
        relations={"R": (Fraction(0), Fraction(0))},
    )
    report = validate_structure(wide, 1)
    assert not report.ok
    assert any("diameter" in v.describe() for v in report.violations)


def test_validate_catches_relation_bound():
    a = structure_a()
    bad = _patched(a, relations={"R": (Fraction(0), Fraction(3, 2))})
    report = validate_structure(bad, 1)
    assert any("bound" in v.describe() for v in report.violations)


def test_validate_catches_relation_continuity():
    sig = unary_signature()
    bad = FiniteStructure(
        signature=sig,
        universe=("x", "y"),
        metric=((Fraction(0), Fraction(1, 4)), (Fraction(1, 4), Fraction(0))),
        constants={"c": 0},
        functions={},
        relations={"R": (Fraction(0), Fraction(1))},  # jump 1 over distance 1/4
    )
    report = validate_structure(bad, 1)
    assert not report.ok
    assert any("R" in v.describe() for v in report.violations)


def test_validate_catches_function_continuity():
    sig = Signature(
        constants=(),
        functions=(FunctionSymbol("f", 1, Modulus(((Fraction(1, 2), Fraction(0)),))),),
        relations=(),
    )
    bad = FiniteStructure(
        signature=sig,
        universe=("x", "y"),
        metric=((Fraction(0), Fraction(1)), (Fraction(1), Fraction(0))),
        constants={},
        functions={"f": (0, 1)},  # identity moves full distance, cap is 1/2
        relations={},
    )
    report = validate_structure(bad, 1)
    assert not report.ok


def test_validation_matches_naive_scan():
    rng = random.Random(3)
    for _ in range(40):
        sig = random_signature(rng)
        s = random_structure(rng, sig, rng.randint(2, 4))
        assert validate_structure(s, 1).ok
        assert naive_violations(s, 1) == []
        # corrupt one relation entry; both scanners must notice when the
        # perturbation breaks continuity
        name = sig.relations[0].name
        table = list(s.relations[name])
        k = rng.randrange(len(table))
        table[k] = sig.relations[0].bound
        bad = _patched(s, relations=dict(s.relations, **{name: tuple(table)}))
        assert (validate_structure(bad, 1).ok) == (naive_violations(bad, 1) == [])


def test_validation_p2_on_random():
    rng = random.Random(9)
    for _ in range(20):
        sig = random_signature(rng)
        s = random_structure(rng, sig, rng.randint(2, 4))
        assert validate_structure(s, 2).ok
        assert naive_violations(s, 2) == []


def test_dist_power():
    a = structure_a()
    assert a.dist(0, 1) == 1
    assert a.dist_power(0, 1, 3) == 1
    sig = unary_signature()
    s = FiniteStructure(
        signature=sig,
        universe=("x", "y"),
        metric=((Fraction(0), Fraction(1, 2)), (Fraction(1, 2), Fraction(0))),
        constants={"c": 0},
        functions={},
        relations={"R": (Fraction(0), Fraction(0))},
    )
    assert s.dist_power(0, 1, 2) == Fraction(1, 4)
    assert s.dist_power(1, 1, 5) == 0


def test_product_distance():
    a = structure_a()
    power, root = product_distance_p(a, (0, 0, 1), (1, 0, 1), 1)
    assert power == 1 and root == 1
    power, root = product_distance_p(a, (0, 1), (1, 0), 2)
    assert power == 2
    assert abs(root - 2 ** 0.5) < 1e-12


def test_json_round_trip_random():
    rng = random.Random(17)
    for _ in range(25):
        sig = random_signature(rng)
        s = random_structure(rng, sig, rng.randint(2, 4))
        data = json.loads(json.dumps(structure_to_json(s)))
        again = structure_from_json(data)
        assert again == s


def test_json_rejects_zero_off_diagonal():
    a = structure_a()
    data = structure_to_json(a)
    data["metric"][0][1] = "0"
    data["metric"][1][0] = "0"
    with pytest.raises(FormatError):
        structure_from_json(data)


def test_json_rejects_unknown_element():
    a = structure_a()
    data = structure_to_json(a)
    data["constants"]["c"] = "zz"
    with pytest.raises(FormatError):
        structure_from_json(data)


def test_json_rejects_bad_table_width():
    a = structure_a()
    data = structure_to_json(a)
    data["relations"]["R"] = ["0"]
    with pytest.raises(FormatError):
        structure_from_json(data)


def test_constructor_validation():
    sig = unary_signature()
    with pytest.raises(FormatError):
        FiniteStructure(
            signature=sig,
            universe=("x", "x"),
            metric=((Fraction(0), Fraction(1)), (Fraction(1), Fraction(0))),
            constants={"c": 0},
            functions={},
            relations={"R": (Fraction(0), Fraction(0))},
        )
    with pytest.raises(FormatError):
        FiniteStructure(
            signature=sig,
            universe=("x",),
            metric=((Fraction(0),),),
            constants={},  # constant missing
            functions={},
            relations={"R": (Fraction(0),)},
        )


def test_pnorm():
    assert PNorm(1).p == 1
    assert PNorm(2).root(Fraction(1, 4)) == 0.5
    with pytest.raises(DomainError):
        PNorm(0)


def test_resolve():
    a = structure_a()
    assert a.resolve("a1") == 1
    assert a.resolve(0) == 0
    with pytest.raises(DomainError):
        a.resolve("nope")
    with pytest.raises(DomainError):
        a.resolve(7)
