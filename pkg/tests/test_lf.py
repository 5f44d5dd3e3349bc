"""Parsing, serialization, normalization, and equality of logical forms."""

import itertools
import random

import pytest

import treegen
from lfrerank import lf

GEO_FORM = "answer(state(next_to_2(stateid(alabama))))"
ATIS_FORM = (
    "(_lambda $0 e (_and (_flight $0) (_from $0 st_petersburg:_ci)"
    " (_to $0 charlotte:_ci)))"
)
OVERNIGHT_FORM = "Type.Meeting ⊓ EndTime. != 10"


class TestParse:
    def test_funql_chain(self):
        tree = lf.parse(GEO_FORM, lf.FUNQL)
        assert tree.kind == lf.APP and tree.label == "answer"
        depth, node = 0, tree
        while node.children:
            node = node.children[0]
            depth += 1
        assert depth == 4
        assert node.kind == lf.ENTITY and node.label == "alabama"

    def test_lambda_binder(self):
        tree = lf.parse(ATIS_FORM, lf.LAMBDA)
        assert tree.kind == lf.BINDER and tree.label == "_lambda"
        assert tree.children[0].kind == lf.VAR and tree.children[0].label == "$0"
        body = tree.children[2]
        assert body.label == "_and" and len(body.children) == 3

    def test_overnight_infix(self):
        tree = lf.parse(OVERNIGHT_FORM, lf.OVERNIGHT)
        assert tree.label == "⊓"
        left, right = tree.children
        assert left.label == "Type.Meeting"
        assert right.label == "!=" and right.children[1].kind == lf.LITERAL

    def test_unbalanced_offset(self):
        with pytest.raises(lf.LfSyntaxError) as exc:
            lf.parse("answer(x", lf.FUNQL)
        assert exc.value.offset == 8

    def test_trailing_input(self):
        with pytest.raises(lf.LfSyntaxError):
            lf.parse("answer(x) junk", lf.FUNQL)

    def test_empty_input(self):
        with pytest.raises(lf.LfSyntaxError):
            lf.parse("   ", lf.FUNQL)

    def test_stray_close(self):
        with pytest.raises(lf.LfSyntaxError):
            lf.parse(")", lf.LAMBDA)

    def test_unknown_formalism(self):
        with pytest.raises(ValueError):
            lf.parse("x", "prolog")

    def test_quoted_funql_entity(self):
        tree = lf.parse("stateid('new york')", lf.FUNQL)
        assert tree.children[0].label == "'new york'"
        assert lf.parse(lf.serialize(tree), lf.FUNQL) == tree

    def test_multiword_call(self):
        tree = lf.parse("arg max(type.player, numRebounds)", lf.OVERNIGHT)
        assert tree.label == "arg max"
        assert [c.label for c in tree.children] == ["type.player", "numRebounds"]


class TestSerialize:
    def test_geo_round_trip_text(self):
        tree = lf.parse(GEO_FORM, lf.FUNQL)
        assert lf.serialize(tree) == "answer ( state ( next_to_2 ( stateid ( alabama ) ) ) )"

    def test_zero_arg_functor_is_bare_name(self):
        node = lf.LfTree(lf.APP, "answer", (), lf.FUNQL)
        assert lf.serialize(node) == "answer"

    def test_fuzz_round_trip(self):
        rng = random.Random(42)
        for i in range(300):
            formalism = lf.FORMALISMS[i % 3]
            tree = treegen.random_tree(rng, formalism)
            reparsed = lf.parse(lf.serialize(tree), formalism)
            assert reparsed == tree, lf.serialize(tree)


def _two_child_variants():
    """Every permutation and renaming of a two-conjunct form under one binder."""
    variants = []
    conjuncts = ["(_from {v} b)", "(_to {v} c)"]
    for perm in itertools.permutations(conjuncts):
        for var in ("$0", "$1", "$9"):
            body = " ".join(p.format(v=var) for p in perm)
            variants.append(lf.parse(f"(_lambda {var} e (_and {body}))", lf.LAMBDA))
    return variants


class TestNormalize:
    def test_all_variants_collapse(self):
        # brute-force oracle: permutations x renamings must share one normal form
        forms = {lf.normal_text(v) for v in _two_child_variants()}
        assert len(forms) == 1
        assert forms == {"( _lambda $0 e ( _and ( _from $0 b ) ( _to $0 c ) ) )"}

    def test_idempotence(self):
        tree = lf.parse(ATIS_FORM, lf.LAMBDA)
        normal = lf.normalize(tree)
        again = lf.normalize(lf.parse(normal.text, lf.LAMBDA))
        assert again == normal

    def test_atis_form_fixed_up_to_and_order(self):
        normal = lf.normalize(lf.parse(ATIS_FORM, lf.LAMBDA))
        # already canonically ordered: _flight < _from < _to
        assert normal.text == (
            "( _lambda $0 e ( _and ( _flight $0 ) ( _from $0 st_petersburg:_ci )"
            " ( _to $0 charlotte:_ci ) ) )"
        )

    def test_unbound_variable(self):
        with pytest.raises(lf.UnboundVariableError):
            lf.normalize(lf.parse("(_flight $3)", lf.LAMBDA))

    def test_shadowing(self):
        outer = lf.parse("(_lambda $0 e (_and (_p $0) (_exists $0 (_q $0))))", lf.LAMBDA)
        fresh = lf.parse("(_lambda $0 e (_and (_p $0) (_exists $1 (_q $1))))", lf.LAMBDA)
        assert lf.lf_equal(outer, fresh)

    def test_sibling_binders_canonical(self):
        a = lf.parse("(_and (_exists $0 (_p $0)) (_exists $1 (_q $1)))", lf.LAMBDA)
        b = lf.parse("(_and (_exists $0 (_q $0)) (_exists $1 (_p $1)))", lf.LAMBDA)
        assert lf.normal_text(a) == lf.normal_text(b)

    def test_funql_is_ordered(self):
        a = lf.parse("f(x,y)", lf.FUNQL)
        b = lf.parse("f(y,x)", lf.FUNQL)
        assert not lf.lf_equal(a, b)

    def test_custom_unordered_set(self):
        a = lf.parse("f(x,y)", lf.FUNQL)
        b = lf.parse("f(y,x)", lf.FUNQL)
        assert lf.lf_equal(a, b, unordered=frozenset({"f"}))

    def test_free_vars_keep_names(self):
        # free variables outside the lambda formalism stay put, so a bound
        # variable's canonical name can never collide with them
        bound_q = lf.parse("p ( $0 ) and lambda ( $5 , q ( $5 ) )", lf.OVERNIGHT)
        free_q = lf.parse("p ( $0 ) and lambda ( $5 , q ( $0 ) )", lf.OVERNIGHT)
        assert not lf.lf_equal(bound_q, free_q)
        assert "$0" in lf.normal_text(free_q).split()

    def test_idempotent_with_many_free_vars(self):
        children = tuple(
            lf.LfTree(lf.APP, "p", (lf.LfTree(lf.VAR, f"$v{i}", (), lf.OVERNIGHT),), lf.OVERNIGHT)
            for i in range(12)
        )
        tree = lf.LfTree(lf.APP, "and", children, lf.OVERNIGHT)
        normal = lf.normalize(tree)
        assert lf.normalize(lf.parse(normal.text, lf.OVERNIGHT)) == normal


class TestLfEqual:
    def test_identical(self):
        tree = lf.parse(GEO_FORM, lf.FUNQL)
        assert lf.lf_equal(tree, tree)

    def test_alpha_renamed_exhaustive(self):
        # oracle: enumerate all injective renamings over two variables
        base = lf.parse(
            "(_lambda $0 e (_exists $1 (_and (_p $0 $1) (_q $1))))", lf.LAMBDA
        )
        names = ["$0", "$1", "$7", "$8"]
        for pair in itertools.permutations(names, 2):
            renamed = treegen.rename_vars(base, {"$0": pair[0], "$1": pair[1]})
            assert lf.lf_equal(base, renamed), pair

    def test_differing_leaf(self):
        a = lf.parse("next_to_2(stateid(alabama))", lf.FUNQL)
        b = lf.parse("next_to_2(stateid(texas))", lf.FUNQL)
        assert not lf.lf_equal(a, b)

    def test_formalism_mismatch(self):
        a = lf.parse("x", lf.FUNQL)
        b = lf.parse("x", lf.LAMBDA)
        with pytest.raises(lf.FormalismMismatchError):
            lf.lf_equal(a, b)

    def test_equivalence_relation(self):
        rng = random.Random(7)
        trees = [treegen.random_tree(rng, lf.LAMBDA) for _ in range(12)]
        for t in trees:
            assert lf.lf_equal(t, t)
        for a, b in itertools.combinations(trees, 2):
            assert lf.lf_equal(a, b) == lf.lf_equal(b, a)
        # transitivity through shared normal forms
        keys = [lf.normal_text(t) for t in trees]
        for (i, a), (j, b) in itertools.combinations(enumerate(trees), 2):
            if keys[i] == keys[j]:
                assert lf.lf_equal(a, b)


class TestProperties:
    def test_permutation_invariance(self):
        rng = random.Random(11)
        for i in range(150):
            formalism = (lf.LAMBDA, lf.OVERNIGHT)[i % 2]
            tree = treegen.random_tree(rng, formalism)
            permuted = treegen.permute_unordered(tree, rng)
            assert lf.normalize(tree) == lf.normalize(permuted)

    def test_alpha_invariance(self):
        rng = random.Random(19)
        for _ in range(150):
            tree = treegen.random_tree(rng, lf.LAMBDA)
            names = treegen.collect_vars(tree)
            renamed = treegen.rename_vars(tree, treegen.injective_renaming(names, rng))
            assert lf.normalize(tree) == lf.normalize(renamed)

    def test_normalize_idempotent_fuzz(self):
        rng = random.Random(23)
        for i in range(150):
            formalism = lf.FORMALISMS[i % 3]
            tree = treegen.random_tree(rng, formalism)
            normal = lf.normalize(tree)
            assert lf.normalize(lf.parse(normal.text, formalism)) == normal
