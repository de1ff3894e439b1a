from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from meanlogic.errors import DomainError, FormatError
from meanlogic.signature import (
    FunctionSymbol,
    Modulus,
    RelationSymbol,
    Signature,
    modulus_combine,
)

grids = st.lists(
    st.fractions(min_value=0, max_value=3, max_denominator=32), min_size=1, max_size=12
)

pieces = st.lists(
    st.tuples(
        st.fractions(min_value=0, max_value=4, max_denominator=8),
        st.fractions(min_value=0, max_value=2, max_denominator=8),
    ),
    min_size=1,
    max_size=4,
).map(lambda ps: tuple(ps) + ((ps[0][0], Fraction(0)),))  # force a zero intercept


def moduli():
    return pieces.map(Modulus)


def test_validation():
    with pytest.raises(DomainError):
        Modulus(())
    with pytest.raises(DomainError):
        Modulus(((Fraction(-1), Fraction(0)),))
    with pytest.raises(DomainError):
        Modulus(((Fraction(1), Fraction(-1)),))
    with pytest.raises(DomainError):
        # no piece with zero intercept means lambda(0) > 0
        Modulus(((Fraction(1), Fraction(1, 2)),))


def test_value_is_min_of_pieces():
    m = Modulus(((Fraction(2), Fraction(0)), (Fraction(0), Fraction(1))))
    assert m.value(Fraction(0)) == 0
    assert m.value(Fraction(1, 4)) == Fraction(1, 2)
    assert m.value(Fraction(1, 2)) == 1
    assert m.value(Fraction(3)) == 1  # capped by the intercept piece


@given(moduli(), grids)
def test_value_matches_unpruned_min(m, ts):
    for t in ts:
        expected = min(s * t + c for s, c in m.pieces)
        assert m.value(t) == expected


@given(moduli(), grids)
def test_concave_nondecreasing(m, ts):
    ts = sorted(ts)
    for a, b in zip(ts, ts[1:]):
        assert m.value(a) <= m.value(b)
    # midpoint concavity on the sample grid
    for a, b in zip(ts, ts[1:]):
        mid = (a + b) / 2
        assert 2 * m.value(mid) >= m.value(a) + m.value(b)


@given(moduli(), moduli(), grids)
def test_compose_pointwise(outer, inner, ts):
    composed = outer.compose(inner)
    for t in ts:
        assert composed.value(t) == outer.value(inner.value(t))


@given(moduli(), moduli(), grids)
def test_plus_pointwise(a, b, ts):
    s = a.plus(b)
    for t in ts:
        assert s.value(t) == a.value(t) + b.value(t)


@given(moduli(), st.fractions(min_value=0, max_value=4, max_denominator=8), grids)
def test_scaled_pointwise(m, k, ts):
    s = m.scaled(k)
    for t in ts:
        assert s.value(t) == k * m.value(t)


def test_identity_zero():
    ident = Modulus.identity()
    assert ident.value(Fraction(5, 7)) == Fraction(5, 7)
    z = Modulus.zero()
    assert z.value(Fraction(99)) == 0


@given(moduli(), moduli(), grids)
def test_combine_max_dominates(a, b, ts):
    m = modulus_combine("max", a, b)
    for t in ts:
        assert m.value(t) >= a.value(t)
        assert m.value(t) >= b.value(t)


def test_combine_kinds():
    a = Modulus.identity()
    assert modulus_combine("sum", a, a).value(Fraction(1)) == 2
    assert modulus_combine("scale", Fraction(3), a).value(Fraction(2)) == 6
    with pytest.raises(DomainError):
        modulus_combine("nope", a)


def test_modulus_json_round_trip():
    m = Modulus(((Fraction(1, 2), Fraction(0)), (Fraction(0), Fraction(2, 3))))
    again = Modulus.from_json(m.to_json())
    for k in range(9):
        t = Fraction(k, 4)
        assert again.value(t) == m.value(t)


def _sig():
    return Signature(
        constants=("c", "e"),
        functions=(FunctionSymbol("f", 2, Modulus.identity()),),
        relations=(RelationSymbol("R", 1, Fraction(1), Modulus.identity()),),
    )


def test_signature_lookups():
    sig = _sig()
    assert sig.is_constant("c")
    assert not sig.is_constant("f")
    assert sig.function("f").arity == 2
    assert sig.relation("R").bound == 1
    with pytest.raises(DomainError):
        sig.function("R")
    with pytest.raises(DomainError):
        sig.relation("f")


def test_signature_name_clashes():
    with pytest.raises(DomainError):
        Signature(constants=("c", "c"), functions=(), relations=())
    with pytest.raises(DomainError):
        Signature(
            constants=("f",),
            functions=(FunctionSymbol("f", 1, Modulus.identity()),),
            relations=(),
        )
    with pytest.raises(DomainError):
        # reserved word
        Signature(constants=("sup",), functions=(), relations=())
    with pytest.raises(DomainError):
        Signature(
            constants=(),
            functions=(),
            relations=(RelationSymbol("d", 1, Fraction(1), Modulus.identity()),),
        )


def test_relation_bound_positive():
    with pytest.raises(DomainError):
        RelationSymbol("R", 1, Fraction(0), Modulus.identity())
    with pytest.raises(DomainError):
        RelationSymbol("R", 0, Fraction(1), Modulus.identity())


def test_signature_json_round_trip():
    sig = _sig()
    assert Signature.from_json(sig.to_json()) == sig
    # omitted symbol groups default to empty
    bare = Signature.from_json({"constants": ["c"]})
    assert bare.functions == () and bare.relations == ()
    with pytest.raises(FormatError):
        Signature.from_json({"constants": "c"})
    with pytest.raises(FormatError):
        Signature.from_json([1, 2])
