from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from webskills.dsl import (
    ArityError,
    Call,
    DSLSyntaxError,
    Lit,
    Prim,
    Ref,
    SiteImplementation,
    SourceText,
    Stop,
    UnknownPrimitive,
    count_steps,
    format_skill_file,
    format_statement,
    parse_skill_file,
    parse_statement,
)


def test_search_method_has_three_statements():
    impl = parse_skill_file(
        'implementation A for Shop site a { skill search(query){ click(#q); type(#q, query); press("Enter") } }'
    )
    body = impl.methods["search"].body
    assert len(body) == 3
    assert body[1] == Prim("type", (Lit("q", "selector"), Ref("query")))


def test_empty_implementation_block():
    impl = parse_skill_file("implementation A for Shop site a {}")
    assert isinstance(impl, SiteImplementation)
    assert impl.methods == {}


def test_unknown_primitive_reports_position():
    src = "implementation A for Shop site a {\n  skill s() {\n    clik(#q)\n  }\n}"
    with pytest.raises(UnknownPrimitive) as info:
        parse_skill_file(SourceText.of(src, "shop.skill"))
    assert (info.value.line, info.value.col) == (3, 5)
    assert str(info.value).startswith("shop.skill:3:5:")


def test_arity_error():
    with pytest.raises(ArityError):
        parse_statement("type(#q)")
    with pytest.raises(ArityError):
        parse_statement('go_back("x")')


def test_syntax_error_names_expectation():
    with pytest.raises(DSLSyntaxError) as info:
        parse_skill_file("interface X category shop { abstract s( }")
    assert info.value.line == 1


def test_call_and_stop_statements():
    assert parse_statement('CALL search("mug")') == Call("search", (Lit("mug", "text"),))
    assert parse_statement("call Shop.buy(x)") == Call("Shop.buy", (Ref("x"),))
    assert parse_statement("stop") == Stop()


def test_count_steps():
    stmts = [parse_statement(s) for s in ("click(#q)", 'type(#q, "a")', 'press("Enter")')]
    assert count_steps(stmts) == 3
    assert count_steps([parse_statement('call search("mug")')]) == 1
    assert count_steps([]) == 0


def test_crlf_and_bom_are_normalised():
    raw = "﻿implementation A for S site a {\r\n  skill s() { noop\r\n noop }\r\n}\r\n".encode("utf-8")
    impl = parse_skill_file(SourceText.of(raw))
    assert len(impl.methods["s"].body) == 2


def test_string_escapes_round_trip():
    stmt = parse_statement('type(#q, "say \\"hi\\" \\\\ there")')
    assert parse_statement(format_statement(stmt)) == stmt


def test_every_primitive_formats_and_parses():
    for text in (
        "noop()", "click(#a)", "hover(#a)", 'type(#a, "x")', 'press("Enter")', 'scroll("down")',
        "tab_focus(2)", "new_tab()", "tab_close()", "go_back()", "go_forward()", 'goto("site/home")',
    ):
        stmt = parse_statement(text)
        assert parse_statement(format_statement(stmt)) == stmt


RESERVED = {"call", "stop", "skill", "default", "abstract", "interface", "implementation", "for", "site", "category", "text", "integer", "selector"}
names = st.text(alphabet="abcxyz_019", min_size=1, max_size=6).filter(lambda s: s[0].isalpha() and s not in RESERVED)
texts = st.text(alphabet=st.sampled_from(list('ab Zé"\\\n\r\t{};#@/')), max_size=10)
selectors = st.text(alphabet="abq-07", min_size=1, max_size=6).filter(lambda s: s[0] != "-")


@st.composite
def statements(draw, params):
    choice = draw(st.integers(0, 4))
    if choice == 0:
        return Prim("click", (Lit(draw(selectors), "selector"),))
    if choice == 1:
        arg = Ref(draw(st.sampled_from(params))) if params and draw(st.booleans()) else Lit(draw(texts), "text")
        return Prim("type", (Lit(draw(selectors), "selector"), arg))
    if choice == 2:
        return Prim("press", (Lit(draw(texts), "text"),))
    if choice == 3:
        return Prim("tab_focus", (Lit(draw(st.integers(0, 99)), "integer"),))
    return Call(draw(names), tuple(Lit(draw(texts), "text") for _ in range(draw(st.integers(0, 2)))))


@st.composite
def implementations(draw):
    from webskills.dsl import ParamSpec, SkillDef, SkillSignature

    methods = {}
    for name in draw(st.lists(names, max_size=4, unique=True)):
        params = draw(st.lists(names, max_size=2, unique=True))
        body = tuple(draw(st.lists(statements(params), min_size=1, max_size=5)))
        sig = SkillSignature(name, tuple(ParamSpec(p) for p in params))
        methods[name] = SkillDef(sig, body, draw(st.sampled_from(["induced", "hand-written"])), draw(st.integers(0, 50)))
    return SiteImplementation(draw(names), draw(names), draw(names), methods, draw(st.integers(0, 50)))


@settings(max_examples=150, deadline=None)
@given(implementations())
def test_print_parse_round_trip(impl):
    text = format_skill_file(impl)
    parsed = parse_skill_file(text)
    assert parsed == impl
    assert format_skill_file(parsed) == text
