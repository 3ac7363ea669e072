import filecmp
import itertools
import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gen import random_layered, random_sequence_model, random_state
from granulog import buchi, ftree, samples
from granulog.core import (
    AlmostKTree, FiniteKTree, FragmentError, LassoTreeSeq, LassoWord, SchemaError, all_lassos,
    all_trees, parse_model,
)
from granulog.logic import (
    Always, And, Exists, FormulaSyntaxError, Inner, LayeringError, Next, Not, Or,
    Prop, Semantics, SomePath, compile_formula, eval_formula, eval_tree,
    parse_formula, partition_formulas, pathctl_to_fta, pltl_to_buchi, render, sat_check,
)
from granulog.logic.syntax import FALSE, size
from granulog.temporalized import check_its_certificate, t_member

E, P, Q, PQ = frozenset(), frozenset({"p"}), frozenset({"q"}), frozenset({"p", "q"})
ROOT = Path(__file__).resolve().parent.parent
SEMANTICS = ["seq-of-seq", "layered:k=2,depth=2", "uuls:k=2"]


def leaf(letter=E, k=2):
    return FiniteKTree(k, letter)


def node(letter, *kids, k=2):
    return FiniteKTree(k, letter, list(kids))


# ----------------------------------------------------------------- parser


def test_parse_directed_inner():
    assert parse_formula("G [ EX0 p ]", 2) == Always(Inner(SomePath(Next(Prop("p"), 0))))


def test_parse_power_of_two():
    f = parse_formula("X G [ E X1 G ((X true -> X0 true) & (!X true -> p)) ]", 2)
    assert isinstance(f, Next) and isinstance(f.arg, Always)
    inner = f.arg.arg.arg
    assert isinstance(inner, SomePath) and inner.arg.direction == 1


def test_glued_operators_split():
    assert parse_formula("[EX1X0 p]", 2) == parse_formula("[E X1 X0 p]", 2)
    assert parse_formula("[EFEG p]", 2) == parse_formula("[E F E G p]", 2)


def test_precedence():
    f = parse_formula("[a] | [b] & [c] -> [d] -> [e]")
    assert render(f) == "[ a ] | [ b ] & [ c ] -> [ d ] -> [ e ]"
    assert f.right.left == Inner(Prop("d"))
    g = parse_formula("[ p U q U r ]")
    assert g.arg.right.left == Prop("q")


@pytest.mark.parametrize("text", [
    "[ G [ p ] U G [ q ] ]",      # outer formula nested in brackets
    "G p",                         # bare proposition in the outer layer
    "E X [ p ]",                   # path quantifier outside brackets
    "X0 [ p ]",                    # directed next outside brackets
    "EQ. ([Q] & EQ. Q)",           # quantifier shadows another
])
def test_layering_errors(text):
    with pytest.raises(LayeringError):
        parse_formula(text, 2)


@pytest.mark.parametrize("text, column", [
    ("[ p & ]", 7), ("G [ p", 6), ("[ p ] )", 7), ("[ p $ q ]", 5), ("", 1),
])
def test_syntax_error_location(text, column):
    with pytest.raises(FormulaSyntaxError) as e:
        parse_formula(text)
    assert f"column {column}" in str(e.value)


def test_syntax_error_line():
    with pytest.raises(FormulaSyntaxError) as e:
        parse_formula("G [ p ]\n  & & [ q ]")
    assert "line 2, column 5" in str(e.value)


def test_direction_bound():
    with pytest.raises(FormulaSyntaxError):
        parse_formula("[ EX2 p ]", 2)
    assert parse_formula("[ EX2 p ]", 3)


def test_quantified_names_stay_bound():
    f = parse_formula("(EQ. Q & [p]) | (EQ. X Q)")
    assert isinstance(f.left, Exists) and isinstance(f.right, Exists)
    with pytest.raises(LayeringError):
        parse_formula("[ Z ] & EZ. Z")


def test_comments_ignored():
    assert parse_formula("# header\nG [ p ] # trailing\n") == Always(Inner(Prop("p")))


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["word", "tree"]))
def test_render_parses_back(seed, inner):
    f = random_layered(random.Random(seed), 10, inner, k=3)
    assert parse_formula(render(f), 3) == f


# ------------------------------------------------------------- evaluation


def test_true_everywhere():
    m = LassoTreeSeq([leaf()], [leaf(P), node(E, leaf(), leaf())])
    assert eval_formula(parse_formula("G [true]"), m)


def test_directed_next_on_tree():
    t = node(E, leaf(P), leaf())
    m = LassoTreeSeq([t], [leaf()])
    assert eval_formula(parse_formula("[EX0 p]", 2), m)
    assert not eval_formula(parse_formula("[EX1 p]", 2), m)
    assert not eval_formula(parse_formula("[EX0 p]", 2), m, 1)


def test_eval_needs_a_sequence():
    with pytest.raises(SchemaError):
        eval_formula(parse_formula("[p]"), LassoWord([], [P]))


def test_directed_next_rejected_on_words():
    m = LassoTreeSeq([], [LassoWord([], [P])])
    with pytest.raises(FragmentError):
        eval_formula(parse_formula("[X0 p]", 2), m)


def test_hv_formulas_hold_on_model():
    m = samples.models("hv-station")["model"]
    for entry in samples.entries("hv-station"):
        f = parse_formula(entry.text, 3)
        assert eval_formula(f, m)
        # dropping the parallel-bay command breaks the sequence below the root
        broken = _relabel(m, (0,), E)
        if "change_b1_b2" in entry.text:
            assert not eval_formula(f, broken)


def _relabel(m, path, letter):
    def go(t, rest):
        if not rest:
            return FiniteKTree(t.k, letter, list(t.children))
        kids = list(t.children)
        kids[rest[0]] = go(kids[rest[0]], rest[1:])
        return FiniteKTree(t.k, t.letter, kids)
    return LassoTreeSeq([go(m.stem[0], path)] + list(m.stem[1:]), list(m.loop))


def test_path_semantics_at_leaves():
    t = node(P, leaf(P), leaf(E))
    assert not eval_tree(parse_formula("E X true", 2, inner=True), leaf(P))
    assert eval_tree(parse_formula("E G p", 2, inner=True), leaf(P))
    assert eval_tree(parse_formula("E G p", 2, inner=True), t)
    assert not eval_tree(parse_formula("A G p", 2, inner=True), t)
    assert eval_tree(parse_formula("A F X true -> A X true", 2, inner=True), t)


# ------------------------------------------------------------- LTL layer


def test_always_p():
    a = pltl_to_buchi(parse_formula("G p", inner=True), ["p"])
    assert buchi.buchi_member(a, LassoWord([], [P]))
    assert not buchi.buchi_member(a, LassoWord([P], [E]))


def test_until():
    a = pltl_to_buchi(parse_formula("p U q", inner=True), ["p", "q"])
    assert buchi.buchi_member(a, LassoWord([P, Q], [E]))
    assert not buchi.buchi_member(a, LassoWord([P, E], [Q]))


EVEN = "EQ. (Q & X !Q & G (Q <-> X X Q) & G (Q -> p))"


def _even_p(w):
    n = len(w.stem) + 2 * len(w.loop)
    letters = [w.stem[i] if i < len(w.stem) else w.loop[(i - len(w.stem)) % len(w.loop)]
               for i in range(n + 2)]
    return all("p" in letters[i] for i in range(0, n + 2, 2))


def test_even_positions():
    a = pltl_to_buchi(parse_formula(EVEN, inner=True), ["p"])
    lassos = list(all_lassos([E, P], 3, 3))
    assert sum(map(_even_p, lassos)) > 10
    for w in lassos:
        assert buchi.buchi_member(a, w) == _even_p(w), w


def test_outer_negated_quantifier_rejected():
    for text in ("!(EQ. Q & [p])", "G (EQ. Q)", "[q] <-> EQ. Q"):
        with pytest.raises(FragmentError):
            compile_formula(parse_formula(text), Semantics("seq-of-seq"))


# ------------------------------------------------------------ tree layer


def test_ef_p():
    a = pathctl_to_fta(parse_formula("E F p", 2, inner=True), 2)
    low = node(E, leaf(), leaf())
    assert ftree.fta_member(a, node(E, low, node(E, leaf(P), leaf())))
    assert not ftree.fta_member(a, node(E, low, low))


LEFT_FULL = node(P, node(P, leaf(P), leaf()), node(E, leaf(), leaf()))
LEFT_BROKEN = node(P, node(E, leaf(P), leaf()), node(P, leaf(P), leaf(P)))


def test_leftmost_path_finite_form():
    f = parse_formula("E (p & G (X true -> X0 p))", 2, inner=True)
    a = pathctl_to_fta(f, 2)
    assert ftree.fta_member(a, LEFT_FULL)
    assert not ftree.fta_member(a, LEFT_BROKEN)
    assert eval_tree(f, LEFT_FULL) and not eval_tree(f, LEFT_BROKEN)


def test_leftmost_path_literal_form_is_empty_on_finite_trees():
    a = pathctl_to_fta(parse_formula("E (p & G X0 p)", 2, inner=True), 2)
    assert ftree.fta_empty(a)[0]


def _sample_trees(k, mode, letters=(E, P, Q, PQ), heights=(0, 1, 2), limit=400):
    almost = mode == "almost"
    trees = [t for h in heights for t in all_trees(k, h, list(letters), almost=almost)]
    return random.Random(7).sample(trees, min(limit, len(trees)))


@pytest.mark.parametrize("mode", ["complete", "almost"])
def test_ag_is_not_ef_not(mode):
    ag = pathctl_to_fta(parse_formula("A G p", 2, inner=True), 2, mode)
    ef = pathctl_to_fta(parse_formula("!E F !p", 2, inner=True), 2, mode)
    for t in _sample_trees(2, mode):
        assert ftree.fta_member(ag, t) == ftree.fta_member(ef, t)


def test_direction_out_of_range():
    with pytest.raises(FragmentError):
        pathctl_to_fta(SomePath(Next(Prop("p"), 2)), 2)


def test_depth_constraint():
    a = pathctl_to_fta(parse_formula("E F p", 2, inner=True), 2, depth=1)
    assert ftree.fta_member(a, node(E, leaf(P), leaf()))
    assert not ftree.fta_member(a, leaf(P))


@pytest.mark.parametrize("mode,k", [("complete", 2), ("almost", 2), ("complete", 3)])
def test_tree_compiler_matches_evaluation(mode, k):
    rng = random.Random(11 + k)
    trees = _sample_trees(k, mode, letters=(E, P, Q, PQ), heights=(0, 1, 2) if k == 2 else (0, 1),
                          limit=120)
    for _ in range(60):
        f = random_state(rng, rng.randint(2, 7), ("p", "q"), k, quantify=True)
        a = pathctl_to_fta(f, k, mode)
        for t in trees:
            assert ftree.fta_member(a, t) == eval_tree(f, t), (render(f), t)


def test_nested_quantifiers():
    f = parse_formula("A G (p -> EZ. (!Z & E X Z))", 2, inner=True)
    a = pathctl_to_fta(f, 2)
    for t in _sample_trees(2, "complete"):
        assert ftree.fta_member(a, t) == eval_tree(f, t)


# --------------------------------------------------------------- partition


def test_single_atom_partition():
    part = partition_formulas(parse_formula("G [p]"), Semantics("seq-of-seq"))
    assert len(part.cells) == 1 and part.beta is not None
    assert part.formula == Always(Prop("#0"))


def test_unsatisfiable_atom_partition():
    part = partition_formulas(parse_formula("F [p & !p]"), Semantics("seq-of-seq"))
    assert part.cells == []
    assert part.formula.arg == FALSE


def test_two_independent_atoms():
    sem = Semantics.parse("layered:k=2,depth=1")
    part = partition_formulas(parse_formula("[E X0 p] U [A X q]", 2), sem)
    assert len(part.cells) == 3
    assert sorted(c.signs for c in part.cells) == [(False, True), (True, False), (True, True)]


@pytest.mark.parametrize("semantics", SEMANTICS)
def test_partition_is_disjoint_and_covering(semantics):
    sem = Semantics.parse(semantics)
    rng = random.Random(3)
    for _ in range(8):
        f = random_layered(rng, 8, "word" if sem.kind == "seq-of-seq" else "tree",
                           k=sem.k, quantify=False)
        part = partition_formulas(f, sem)
        cells = part.all_cells()
        for c, d in itertools.combinations(cells, 2):
            assert sem.is_empty(sem.intersect(c.automaton, d.automaton))
        for i, alpha in enumerate(part.atoms):
            inside = [c.formula for c in part.cells if c.signs[i]]
            gap = And(alpha, Not(_disj(inside)))
            assert sem.is_empty(sem.compile_inner(gap))


def _disj(fs):
    out = FALSE
    for g in fs:
        out = g if out == FALSE else Or(out, g)
    return out


# -------------------------------------------------- compilation and SAT


def test_universal_formula():
    a = compile_formula(parse_formula("G [true]"), Semantics("seq-of-seq"))
    assert sat_check(parse_formula("G [true]"), Semantics("seq-of-seq")).verdict == "SAT"
    assert t_member(a, LassoTreeSeq([], [LassoWord([], [E])]))


@pytest.mark.parametrize("semantics", SEMANTICS + ["layered:k=3,depth=0"])
def test_contradictions_unsat(semantics):
    sem = Semantics.parse(semantics)
    for text in ("[p] & ![p]", "G [p] & F [!p]"):
        assert sat_check(parse_formula(text, sem.k), sem).verdict == "UNSAT"


@pytest.mark.parametrize("semantics", SEMANTICS)
def test_excluded_middle(semantics):
    sem = Semantics.parse(semantics)
    rng = random.Random(5)
    for _ in range(10):
        f = random_layered(rng, 6, "word" if sem.kind == "seq-of-seq" else "tree",
                           k=sem.k, quantify=False)
        assert sat_check(Or(f, Not(f)), sem).verdict == "SAT"


@pytest.mark.parametrize("semantics", SEMANTICS + ["layered:k=3,depth=1"])
def test_compiler_soundness_sample(semantics):
    sem = Semantics.parse(semantics)
    rng = random.Random(99)
    inner = "word" if sem.kind == "seq-of-seq" else "tree"
    for _ in range(40):
        f = random_layered(rng, 8, inner, k=sem.k)
        assert size(f) <= 8
        m = random_sequence_model(rng, sem)
        assert t_member(compile_formula(f, sem), m) == eval_formula(f, m), render(f)


def test_sat_witnesses_satisfy():
    for text, semantics in [("F [p] & G ([p] -> X ![p])", "seq-of-seq"),
                            ("[E X1 p] U [A G q]", "layered:k=2,depth=2"),
                            ("EQ. (Q & X !Q & G (Q <-> X X Q) & G (Q -> [p]))", "seq-of-seq")]:
        sem = Semantics.parse(semantics)
        f = parse_formula(text, sem.k)
        r = sat_check(f, sem)
        assert r.verdict == "SAT"
        assert eval_formula(f, r.witness)


def test_uuls_certificate():
    sem = Semantics.parse("uuls:k=2")
    f = parse_formula("X G [ E X1 G ((X true -> X0 true) & (!X true -> p)) ]", 2)
    r = sat_check(f, sem)
    assert r.verdict == "SAT"
    assert check_its_certificate(r.automaton, r.witness)


def test_uuls_needs_height_zero_first():
    sem = Semantics.parse("uuls:k=2")
    assert sat_check(parse_formula("[ E X true ]", 2), sem).verdict == "UNSAT"
    assert sat_check(parse_formula("X G [ E X true ]", 2), sem).verdict == "SAT"


def test_semantics_parsing():
    assert str(Semantics.parse("layered:k=3,depth=3")) == "layered:k=3,depth=3"
    for bad in ("layered:k=3", "uuls:k=1", "seq-of-seq:k=2", "duls:k=2", "uuls:n=2"):
        with pytest.raises(SchemaError):
            Semantics.parse(bad)


# ------------------------------------------------------------------ corpus


def test_corpus_parses_and_ships_in_examples():
    for group in samples.groups():
        for entry in samples.entries(group):
            assert entry.description
            parse_formula(entry.text, 3)
            copy = ROOT / "examples" / group / f"{entry.name}.tl"
            assert filecmp.cmp(copy, samples.corpus_root() / group / f"{entry.name}.tl",
                               shallow=False)


def test_corpus_verdicts():
    for group in samples.groups():
        for entry in samples.entries(group):
            if not entry.executable:
                with pytest.raises(SchemaError):
                    Semantics.parse(entry.semantics)
                continue
            sem = Semantics.parse(entry.semantics)
            assert sat_check(parse_formula(entry.text, sem.k), sem).verdict == entry.expect


def test_hv_model_file_round_trip():
    text = (samples.corpus_root() / "hv-station" / "model.json").read_text()
    m = parse_model(text)
    assert isinstance(m.stem[0], FiniteKTree) and m.stem[0].height == 3
    assert not isinstance(m.stem[0], AlmostKTree)
