from __future__ import annotations

import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plasmaug import dsl, graph
from plasmaug.dist import Bernoulli, Categorical, Constant, Uniform
from plasmaug.dsl import (AstCascade, AstChoice, AstIdentity, AstLeaf,
                          InvalidArgError, PipelineError, PipelineSyntaxError,
                          UnknownOpError, compile_pipeline, format_pipeline,
                          parse, parse_pipeline)
from plasmaug.presets import PRESET_NAMES, preset_source


# --- grammar ----------------------------------------------------------------------

def test_cascade_binds_tighter_than_choice():
    ast = parse("a() | b() ^ c()")
    assert isinstance(ast, AstChoice)
    assert len(ast.children) == 2
    assert ast.children[0] == AstCascade([AstLeaf("a", {}), AstLeaf("b", {})])
    assert ast.children[1] == AstLeaf("c", {})


def test_random_flip_pipeline_shape():
    ast = parse("vflip() ^ hflip() ^ (vflip() | hflip()) ^ identity")
    assert isinstance(ast, AstChoice)
    assert len(ast.children) == 4
    assert ast.children[2] == AstCascade([AstLeaf("vflip", {}), AstLeaf("hflip", {})])
    assert ast.children[3] == AstIdentity()


def test_plasma_cascade_pipeline_shape():
    ast = parse("plasma_brightness(strength=U(0,0.5)) | plasma_warp(strength=U(0,12))"
                " | linear_color(a=U(0.8,1.2), b=U(-0.1,0.1))")
    assert isinstance(ast, AstCascade)
    assert [c.name for c in ast.children] == [
        "plasma_brightness", "plasma_warp", "linear_color"]
    assert ast.children[0].args == {"strength": Uniform(0.0, 0.5)}
    assert ast.children[2].args == {"a": Uniform(0.8, 1.2), "b": Uniform(-0.1, 0.1)}


def test_operator_chains_flatten_left_associatively():
    assert parse("a() | b() | c()") == AstCascade(
        [AstLeaf("a", {}), AstLeaf("b", {}), AstLeaf("c", {})])
    assert parse("(a() | b()) | c()") == parse("a() | b() | c()")
    chain = parse("a() ^ b() ^ c()")
    assert isinstance(chain, AstChoice) and len(chain.children) == 3


def test_parenthesized_choice_stays_nested():
    ast = parse("(a() ^ b()) ^ c()")
    assert isinstance(ast, AstChoice)
    assert len(ast.children) == 2
    assert isinstance(ast.children[0], AstChoice)


def test_distribution_literals():
    ast = parse("x(a=U(0,1), b=B(0.5), c=C(1,2,3), d=0.25)")
    assert ast.args == {"a": Uniform(0, 1), "b": Bernoulli(0.5),
                        "c": Categorical((1, 2, 3)), "d": Constant(0.25)}


def test_comments_and_whitespace_ignored():
    ast = parse("# leading comment\n a() |  # inline\n   b()\n")
    assert ast == AstCascade([AstLeaf("a", {}), AstLeaf("b", {})])


# --- weights ----------------------------------------------------------------------

def test_branch_suffix_weights():
    ast = parse("a():3 ^ b():1")
    assert ast.weights == [3.0, 1.0]


def test_caret_weight_applies_to_following_branch():
    ast = parse("a() ^:3 b()")
    assert ast.weights == [None, 3.0]


def test_weights_normalize_in_compile():
    node = compile_pipeline(parse("a():3 ^ b():1".replace("a()", "hflip()")
                                  .replace("b()", "vflip()")), seed=1)
    assert node.weights == (0.75, 0.25)


def test_omitted_weights_compile_uniform():
    node = compile_pipeline(
        parse("hflip() ^ vflip() ^ identity ^ brightness()"), seed=1)
    assert node.weights == (0.25, 0.25, 0.25, 0.25)


def test_duplicate_weight_rejected():
    with pytest.raises(PipelineSyntaxError):
        parse("a() ^:2 b():3")
    with pytest.raises(PipelineSyntaxError):
        parse("a():3")


# --- errors -----------------------------------------------------------------------

def test_syntax_error_carries_position_and_expectations():
    with pytest.raises(PipelineSyntaxError) as err:
        parse("a() |")
    assert err.value.line == 1
    assert err.value.col == 6
    assert err.value.expected

    with pytest.raises(PipelineSyntaxError) as err:
        parse("a(\n  x=)")
    assert err.value.line == 2


def test_unknown_op_is_a_distinct_error_class():
    with pytest.raises(UnknownOpError) as err:
        compile_pipeline(parse("frobnicate()"), seed=1)
    assert err.value.line == 1 and err.value.col == 1


def test_unknown_and_out_of_bounds_args_are_distinct_errors():
    with pytest.raises(InvalidArgError):
        compile_pipeline(parse("brightness(gamma=0.5)"), seed=1)
    with pytest.raises(InvalidArgError):
        compile_pipeline(parse("brightness(delta=U(-3,0))"), seed=1)
    with pytest.raises(InvalidArgError):
        parse("x(a=U(2,1))")  # invalid distribution literal, caught at parse


def test_identity_with_call_parens_rejected():
    with pytest.raises(PipelineSyntaxError):
        parse("identity()")


@pytest.mark.parametrize("bad", ["", "|", "a(", "a() ^", "(a()", "a()b()",
                                 "a(x=)", "a(x=U(1))", "$", "a() @ b()",
                                 "((((((", "1,2", "a(x=1,x=2)"])
def test_malformed_inputs_raise_positioned_errors(bad):
    with pytest.raises(PipelineError) as err:
        parse(bad)
    assert err.value.line >= 1
    assert err.value.col >= 1


def test_fuzz_random_byte_strings_never_crash():
    rng = random.Random(20240)
    for _ in range(2000):
        length = rng.randrange(0, 60)
        text = bytes(rng.randrange(256) for _ in range(length)).decode(
            "latin-1")
        try:
            parse(text)
        except PipelineError:
            pass


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=80))
def test_fuzz_unicode_never_crashes(text):
    try:
        parse(text)
    except PipelineError:
        pass


def test_deep_nesting_reports_instead_of_overflowing():
    with pytest.raises(PipelineError):
        parse("(" * 5000 + "a()" + ")" * 5000)


# --- compile ----------------------------------------------------------------------

def test_compile_same_inputs_same_serialization():
    ast = parse(preset_source("plasma_branching"))
    a = graph.serialize(compile_pipeline(ast, 99))
    b = graph.serialize(compile_pipeline(ast, 99))
    assert a == b
    assert a != graph.serialize(compile_pipeline(ast, 100))


def test_compile_fills_schema_defaults():
    node = compile_pipeline(parse("plasma_warp(strength=U(0,4))"), seed=5)
    assert dict(node.params)["roughness"] == Uniform(0.2, 0.7)


def test_compiled_siblings_get_distinct_seeds():
    node = compile_pipeline(parse("hflip() | vflip() | hflip()"), seed=3)
    seeds = [c.seed for c in node.children]
    assert len(set(seeds)) == 3


# --- formatting --------------------------------------------------------------------

def test_identity_formats_bare():
    assert format_pipeline(AstIdentity()) == "identity"


def test_parentheses_only_where_precedence_requires():
    text = format_pipeline(parse("(a() ^ b()) | c()"))
    assert text == "(a() ^ b()) | c()"
    text = format_pipeline(parse("a() | b() ^ c()"))
    assert text == "a() | b() ^ c()"


def test_format_parse_round_trip_is_structural_identity():
    for src in ("a() | b() ^ c():2",
                "vflip() ^ hflip() ^ (vflip() | hflip()) ^ identity",
                "x(a=U(0,1), b=B(0.5), c=C(1,2,3), d=0.25)"):
        ast = parse(src)
        assert parse(format_pipeline(ast)) == ast


def test_format_is_a_canonical_fixed_point_on_presets():
    for name in PRESET_NAMES:
        ast = parse(preset_source(name))
        once = format_pipeline(ast)
        assert parse(once) == ast
        assert format_pipeline(parse(once)) == once


def test_formatted_args_follow_schema_order():
    ast = parse("linear_color(b=0.1, a=1.0)")
    assert format_pipeline(ast) == "linear_color(a=1, b=0.1)"


def test_parse_pipeline_convenience_end_to_end(card):
    node = parse_pipeline(preset_source("global"), seed=11)
    from plasmaug.field import SampleBundle
    out = graph.apply(node, SampleBundle(image=card))
    assert out.image.shape == card.shape
    assert np.isfinite(out.image).all()


def test_precedence_law_structural_identity():
    # "a|b^c" and "(a|b)^c" are the same tree, for any operand shapes.
    assert parse("a() | b() ^ c()") == parse("(a() | b()) ^ c()")
    assert parse("x() | identity ^ y() | z()") == parse(
        "(x() | identity) ^ (y() | z())")
    assert parse("a() ^ b() | c()") == parse("a() ^ (b() | c())")


# --- generative round-trip ----------------------------------------------------

_ident = st.from_regex(r"[a-z][a-z0-9_]{0,8}", fullmatch=True).filter(
    lambda s: s != "identity")
_num = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False).map(float)


def _dist_strategy():
    uniform = st.tuples(_num, _num).map(
        lambda ab: Uniform(min(ab), max(ab)))
    bern = st.floats(min_value=0, max_value=1, allow_nan=False).map(Bernoulli)
    cat = st.lists(st.floats(min_value=0.001, max_value=100, allow_nan=False),
                   min_size=1, max_size=4).map(lambda w: Categorical(tuple(w)))
    return st.one_of(_num.map(Constant), uniform, bern, cat)


def _leaf_strategy():
    args = st.dictionaries(_ident, _dist_strategy(), max_size=3)
    return st.builds(AstLeaf, _ident, args)


def _ast_strategy():
    # Cascades flatten at parse, so the generator never nests a cascade
    # directly inside another; choices may nest (the formatter adds parens).
    atom = st.one_of(_leaf_strategy(), st.just(AstIdentity()))

    def extend(children):
        cascade = st.lists(st.one_of(atom, _choice(children)),
                           min_size=2, max_size=4).map(AstCascade)
        return st.one_of(cascade, _choice(children))

    def _choice(children):
        weights = st.one_of(st.none(),
                            st.floats(min_value=0.001, max_value=10,
                                      allow_nan=False).map(float))
        branch = st.one_of(atom, children)
        return st.builds(
            lambda pairs: AstChoice([b for b, _ in pairs],
                                    [w for _, w in pairs]),
            st.lists(st.tuples(branch, weights), min_size=2, max_size=4))

    return st.recursive(atom, extend, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(_ast_strategy())
def test_generated_asts_round_trip_canonically(ast):
    text = format_pipeline(ast)
    reparsed = parse(text)
    assert reparsed == ast
    assert format_pipeline(reparsed) == text


def test_repo_presets_match_package_data():
    from pathlib import Path
    root = Path(__file__).resolve().parents[1] / "presets"
    for name in PRESET_NAMES:
        assert (root / f"{name}.aug").read_text() == preset_source(name), name
