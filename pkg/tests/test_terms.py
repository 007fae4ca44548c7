import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maskit.parsing import parse_term
from maskit.terms import (
    Atom,
    ListT,
    Literal,
    Number,
    Str,
    Structure,
    Var,
    format_term,
    is_ground,
    term_vars,
)


def test_atom_name_validation():
    Atom("count")
    Atom("joinWorkspace_2")
    with pytest.raises(ValueError):
        Atom("Count")
    with pytest.raises(ValueError):
        Atom("1abc")
    with pytest.raises(ValueError):
        Atom("")


def test_var_name_validation():
    Var("X")
    Var("_private")
    with pytest.raises(ValueError):
        Var("x")


def test_structure_invariants():
    Structure("f", (Atom("a"),))
    with pytest.raises(ValueError):
        Structure("f", ())
    with pytest.raises(ValueError):
        Structure("+", (Atom("a"),))  # binary operator needs two args
    Structure("-", (Var("X"),))  # unary minus is fine


def test_literal_must_be_atom_headed():
    Literal(False, Structure("p", (Number(1),)))
    with pytest.raises(ValueError):
        Literal(False, Number(1))


def test_canonical_printing():
    assert format_term(parse_term("count(5)")) == "count(5)"
    assert format_term(parse_term('foo(bar, [1,2], "s")')) == 'foo(bar,[1,2],"s")'
    assert format_term(Number(2.5)) == "2.5"
    assert format_term(Number(5.0)) == "5"
    assert format_term(Str('say "hi"\n')) == '"say \\"hi\\"\\n"'
    assert format_term(parse_term("N > 3")) == "(N > 3)"
    assert format_term(parse_term("2*3+4")) == "((2 * 3) + 4)"


def test_vars_and_groundness():
    t = parse_term("f(X, g(Y, a), [Z])")
    assert term_vars(t) == {"X", "Y", "Z"}
    assert not is_ground(t)
    assert is_ground(parse_term("f(a, [1], \"x\")"))


# --- random term generation shared with the acceptance round-trip ---

ATOM_NAMES = ("a", "b", "count", "foo", "ws1", "inc")
VAR_NAMES = ("X", "Y", "Count", "_G1")

atoms = st.sampled_from(ATOM_NAMES).map(Atom)
variables = st.sampled_from(VAR_NAMES).map(Var)
numbers = st.one_of(
    st.integers(min_value=-10_000, max_value=10_000).map(lambda n: Number(float(n))),
    st.floats(allow_nan=False, allow_infinity=False, width=32).map(Number),
)
strings = st.text(
    alphabet=st.sampled_from('abz019 _"\\\n\t'), max_size=12
).map(Str)

leaves = st.one_of(atoms, variables, numbers, strings)


def _extend(children):
    structures = st.builds(
        Structure,
        st.sampled_from(ATOM_NAMES),
        st.lists(children, min_size=1, max_size=3).map(tuple),
    )
    lists_ = st.builds(ListT, st.lists(children, max_size=3).map(tuple))
    operators = st.builds(
        Structure,
        st.sampled_from(["+", "-", "*", "/", "<", "<=", ">", ">=", "==", "\\=="]),
        st.tuples(children, children),
    )
    # Unary minus only over non-number operands: the printer folds -N into a
    # negative number literal, so -(Number) is not printable losslessly.
    unary = st.builds(
        lambda t: Structure("-", (t,)),
        st.one_of(atoms, variables, structures),
    )
    return st.one_of(structures, lists_, operators, unary)


terms = st.recursive(leaves, _extend, max_leaves=25)


@settings(max_examples=300, deadline=None)
@given(terms)
def test_roundtrip_property(t):
    assert parse_term(format_term(t)) == t
