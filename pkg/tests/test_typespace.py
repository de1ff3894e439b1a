"""Type spaces, extremality LPs, convex realization, games."""

import itertools
import random
from fractions import Fraction

import pytest

from instances import (
    one_point,
    random_signature,
    random_structure,
    structure_a,
    unary_signature,
)
from meanlogic import (
    DomainError,
    FiniteStructure,
    Fragment,
    FragmentSpec,
    NotLinearError,
    TypeVector,
    back_and_forth,
    equiv_check,
    extreme_types,
    parse,
    realize_convex_type,
    realized_types,
)
from meanlogic.kernel import evaluate_batch


def _unary_fragment(texts=("R(x)", "sup y. d(x,y)")):
    sig = unary_signature()
    return Fragment(tuple(parse(t, sig) for t in texts), ("x",))


def relabeled_a():
    """Structure A with elements renamed and stored in the opposite order."""
    sig = unary_signature()
    return FiniteStructure(
        signature=sig,
        universe=("z1", "z0"),
        metric=((Fraction(0), Fraction(1)), (Fraction(1), Fraction(0))),
        constants={"c": 1},
        functions={},
        relations={"R": (Fraction(1), Fraction(0))},
    )


def test_realized_types_on_a():
    frag = _unary_fragment(("R(x)", "d(x,c)"))
    out = realized_types(structure_a(), frag)
    assert [combo for combo, _ in out] == [(0,), (1,)]
    assert out[0][1].values == (Fraction(0), Fraction(0))
    assert out[1][1].values == (Fraction(1), Fraction(1))


def test_realized_types_pairs_and_degenerate_atom():
    sig = unary_signature()
    frag = Fragment(
        (parse("d(x,x)", sig), parse("d(x,y)", sig)), ("x", "y")
    )
    out = realized_types(structure_a(), frag)
    assert len(out) == 4
    for combo, vec in out:
        assert vec.values[0] == 0
        assert vec.values[1] == (0 if combo[0] == combo[1] else 1)


def test_fragment_validation():
    sig = unary_signature()
    with pytest.raises(DomainError):
        Fragment((), ("x",))
    with pytest.raises(DomainError):
        Fragment((parse("R(x)", sig),), ())  # x not in the tuple
    with pytest.raises(DomainError):
        Fragment((parse("R(x)", sig),), ("x", "x"))
    frag = Fragment.from_spec(FragmentSpec(1, 1, (Fraction(1),)), sig, 1)
    assert frag.arity == 0 and frag.linear
    with pytest.raises(DomainError):
        TypeVector(frag, (Fraction(0),) * (len(frag.formulas) + 1))


def test_extreme_midpoint_line():
    frag = _unary_fragment(("R(x)",))
    vecs = [
        TypeVector(frag, (Fraction(0),)),
        TypeVector(frag, (Fraction(1),)),
        TypeVector(frag, (Fraction(1, 2),)),
    ]
    verdicts = extreme_types(vecs)
    assert [v.extreme for v in verdicts] == [True, True, False]
    cert = dict(verdicts[2].certificate)
    assert cert == {0: Fraction(1, 2), 1: Fraction(1, 2)}


def test_extreme_planar_square():
    vecs = [
        (Fraction(0), Fraction(0)),
        (Fraction(1), Fraction(0)),
        (Fraction(0), Fraction(1)),
        (Fraction(1, 2), Fraction(1, 2)),
    ]
    verdicts = extreme_types(vecs)
    assert [v.extreme for v in verdicts] == [True, True, True, False]
    # certificate is a convex combination reproducing the vector exactly
    cert = verdicts[3].certificate
    total = sum(w for _, w in cert)
    assert total == 1 and all(w > 0 for _, w in cert)
    mixed = [
        sum((w * vecs[i][k] for i, w in cert), Fraction(0)) for k in range(2)
    ]
    assert tuple(mixed) == vecs[3]


def test_extreme_singleton_and_duplicates():
    only = extreme_types([(Fraction(1, 3),)])
    assert len(only) == 1 and only[0].extreme
    # a duplicated point is a combination of its twin
    twins = extreme_types([(Fraction(1, 3),), (Fraction(1, 3),)])
    assert [v.extreme for v in twins] == [False, False]


def test_extreme_matches_minmax_oracle_on_lines():
    # in one dimension with distinct values, extreme iff strictly min or max
    rng = random.Random(404)
    for _ in range(30):
        count = rng.randint(2, 6)
        values = rng.sample([Fraction(k, 16) for k in range(17)], count)
        verdicts = extreme_types([(v,) for v in values])
        lo, hi = min(values), max(values)
        for value, verdict in zip(values, verdicts):
            assert verdict.extreme == (value in (lo, hi))
            if not verdict.extreme:
                cert = verdict.certificate
                assert sum(w for _, w in cert) == 1
                assert sum((w * values[i] for i, w in cert), Fraction(0)) == value


def test_realize_convex_type_example():
    frag = _unary_fragment()
    mean, realizers, vector = realize_convex_type(
        structure_a(), (Fraction(1, 4), Fraction(3, 4)), frag
    )
    assert vector.values == (Fraction(3, 4), Fraction(1))
    assert len(realizers) == 1
    # the realized vector is the weighted average of the pointwise types
    base = realized_types(structure_a(), frag)
    want = tuple(
        Fraction(1, 4) * base[0][1].values[k] + Fraction(3, 4) * base[1][1].values[k]
        for k in range(2)
    )
    assert vector.values == want


def test_realize_accepts_weight_dicts_and_point_mass():
    frag = _unary_fragment()
    mean, realizers, vector = realize_convex_type(
        structure_a(), {("a1",): Fraction(1)}, frag
    )
    base = realized_types(structure_a(), frag)
    assert vector.values == base[1][1].values
    with pytest.raises(DomainError):
        realize_convex_type(structure_a(), {("a0", "a1"): Fraction(1)}, frag)
    with pytest.raises(DomainError):
        realize_convex_type(structure_a(), (Fraction(1),), frag)


def test_realize_requires_linear_fragment_and_arity():
    sig = unary_signature()
    bad = Fragment((parse("min(R(x), d(x,c))", sig),), ("x",))
    with pytest.raises(NotLinearError):
        realize_convex_type(structure_a(), (Fraction(1), Fraction(0)), bad)
    sentences = Fragment((parse("R(c)", sig),))
    with pytest.raises(DomainError):
        realize_convex_type(structure_a(), (), sentences)


def test_realize_average_identity_random():
    # weighted average of realized vectors is realized, exactly, every time
    rng = random.Random(88)
    for _ in range(12):
        sig = random_signature(rng, allow_binary=False, max_relations=1)
        s = random_structure(rng, sig, rng.randint(2, 3))
        rel = sig.relations[0].name
        texts = ["%s(x)" % rel, "d(x,%s)" % sig.constants[0]]
        frag = Fragment(tuple(parse(t, sig) for t in texts), ("x",))
        raw = [rng.randint(0, 4) for _ in range(s.size)]
        if sum(raw) == 0:
            raw[0] = 1
        weights = [Fraction(r, sum(raw)) for r in raw]
        _, _, vector = realize_convex_type(s, weights, frag)
        base = realized_types(s, frag)
        for k in range(len(frag.formulas)):
            want = sum(
                (w * vec.values[k] for w, (_, vec) in zip(weights, base)),
                Fraction(0),
            )
            assert vector.values[k] == want


def test_equiv_relabeled_copies_agree():
    spec = FragmentSpec(2, 2, (Fraction(-1), Fraction(1)))
    verdict = equiv_check(structure_a(), relabeled_a(), spec)
    assert verdict.agree
    assert not verdict.conclusive
    assert verdict.sentences_checked > 50


def test_equiv_separates_a_from_point():
    spec = FragmentSpec(1, 1, (Fraction(1),))
    verdict = equiv_check(structure_a(), one_point(Fraction(0)), spec)
    assert not verdict.agree and verdict.conclusive
    sentence, lv, rv = verdict.counterexample
    assert evaluate_batch(sentence, structure_a(), [()])[0] == lv
    assert evaluate_batch(sentence, one_point(Fraction(0)), [()])[0] == rv
    assert lv != rv


def test_equiv_accepts_explicit_sentences_and_validates():
    sig = unary_signature()
    sentences = [parse("sup x. R(x)", sig), parse("R(c)", sig)]
    verdict = equiv_check(structure_a(), relabeled_a(), sentences)
    assert verdict.agree and verdict.sentences_checked == 2
    with pytest.raises(DomainError):
        equiv_check(structure_a(), relabeled_a(), [parse("R(x)", sig)])
    with pytest.raises(DomainError):
        equiv_check(
            structure_a(), relabeled_a(), FragmentSpec(1, 1, (Fraction(1),), ("x",))
        )


def test_game_full_depth_on_relabeling():
    frag = _unary_fragment(("R(x)",))
    verdict = back_and_forth(structure_a(), relabeled_a(), frag, 2)
    assert verdict.success and verdict.depth == 2 and verdict.witness is None


def test_game_fails_with_witness():
    frag = _unary_fragment(("R(x)",))
    verdict = back_and_forth(structure_a(), one_point(Fraction(0)), frag, 1)
    assert not verdict.success
    assert verdict.witness == (1, "left", "a1")


def test_game_validation():
    frag = _unary_fragment(("R(x)",))
    with pytest.raises(DomainError):
        back_and_forth(structure_a(), structure_a(), frag, 0)
    with pytest.raises(DomainError):
        back_and_forth(structure_a(), one_point(Fraction(0)), frag, 2)
    sig = unary_signature()
    wide = Fragment((parse("d(x,y)", sig),), ("x", "y"))
    with pytest.raises(DomainError):
        back_and_forth(structure_a(), structure_a(), wide, 1)


def test_game_agrees_with_equiv_on_random_pairs():
    # a full-depth game win must not coexist with a sentence counterexample
    rng = random.Random(3131)
    spec = FragmentSpec(1, 1, (Fraction(1),))
    for _ in range(12):
        sig = random_signature(rng, allow_binary=False, max_relations=1)
        left = random_structure(rng, sig, 2)
        right = random_structure(rng, sig, 2)
        rel = sig.relations[0].name
        frag = Fragment(
            (
                parse("%s(x)" % rel, sig),
                parse("d(x,%s)" % sig.constants[0], sig),
            ),
            ("x",),
        )
        game = back_and_forth(left, right, frag, 2)
        if game.success:
            verdict = equiv_check(left, right, spec)
            assert verdict.agree, unparse_counterexample(verdict)


def unparse_counterexample(verdict):
    from meanlogic import unparse

    sentence, lv, rv = verdict.counterexample
    return (unparse(sentence), lv, rv)
