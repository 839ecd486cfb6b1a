from __future__ import annotations

import dataclasses

import pytest

from webskills.dsl import Lit, Prim, SkillDef, UnboundParam, parse_skill_file, parse_statement
from webskills.library import (
    AmbiguousSkill,
    ConformanceViolation,
    CyclicDefaultMethods,
    CyclicReference,
    DuplicateCategory,
    DuplicateSite,
    DuplicateSkill,
    SizeBounds,
    SkillLibrary,
    UnimplementedAbstractCall,
    UnknownInterface,
    UnknownSkill,
    UnresolvedCall,
    empty_library,
    expand,
    extend_implementation,
    library_prefix,
    load_library,
    reference_graph,
    register_implementation,
    register_interface,
    resolve,
    save_library,
    site_signatures,
    validate_library,
)

from conftest import AMAZON, TOY_INTERFACE


def test_register_interface_logs_defaults():
    lib = register_interface(empty_library(), parse_skill_file(TOY_INTERFACE))
    assert len(lib.interfaces) == 1
    assert lib.creation_log == ("AbstractShopping.buy_item",)


def test_interface_without_defaults_logs_nothing():
    lib = register_interface(empty_library(), parse_skill_file("interface I category c { abstract s(); }"))
    assert lib.creation_log == ()


def test_default_calling_undeclared_name():
    src = "interface I category c { abstract s(); default skill d() { call pay() } }"
    with pytest.raises(UnresolvedCall):
        register_interface(empty_library(), parse_skill_file(src))


def test_cyclic_defaults_rejected():
    src = "interface I category c { abstract s(); default skill a() { call b() } default skill b() { call a() } }"
    with pytest.raises(CyclicDefaultMethods):
        register_interface(empty_library(), parse_skill_file(src))


def test_duplicate_category():
    lib = register_interface(empty_library(), parse_skill_file(TOY_INTERFACE))
    with pytest.raises(DuplicateCategory):
        register_interface(lib, parse_skill_file("interface Other category shopping { abstract s(); }"))


def test_register_implementation_accepts_conforming(toy_library):
    assert toy_library.creation_log[1:4] == (
        "AbstractShopping.search@amazon",
        "AbstractShopping.add_to_cart@amazon",
        "AbstractShopping.checkout@amazon",
    )
    assert validate_library(toy_library) == []


def test_arity_mismatch_is_conformance_violation():
    lib = register_interface(empty_library(), parse_skill_file(TOY_INTERFACE))
    bad = "implementation X for AbstractShopping site x { skill search(q, extra) { click(#a); type(#a, q) } }"
    with pytest.raises(ConformanceViolation):
        register_implementation(lib, parse_skill_file(bad))


def test_unknown_interface_and_duplicate_site(toy_library):
    with pytest.raises(UnknownInterface):
        register_implementation(empty_library(), parse_skill_file(AMAZON))
    with pytest.raises(DuplicateSite):
        register_implementation(toy_library, parse_skill_file(AMAZON))


def test_default_methods_cannot_be_overridden():
    lib = register_interface(empty_library(), parse_skill_file(TOY_INTERFACE))
    bad = "implementation X for AbstractShopping site x { skill buy_item(item) { click(#a); type(#a, item) } }"
    with pytest.raises(ConformanceViolation):
        register_implementation(lib, parse_skill_file(bad))


def test_resolve_concrete_and_default(toy_library):
    assert resolve(toy_library, "amazon", "search").skill_id == "AbstractShopping.search@amazon"
    r = resolve(toy_library, "amazon", "buy_item")
    assert r.skill_id == "AbstractShopping.buy_item"
    assert r.bindings == {
        "search": "AbstractShopping.search@amazon",
        "add_to_cart": "AbstractShopping.add_to_cart@amazon",
        "checkout": "AbstractShopping.checkout@amazon",
    }


def test_resolve_default_with_missing_method(toy_library):
    with pytest.raises(UnimplementedAbstractCall) as info:
        resolve(toy_library, "walmart", "buy_item")
    assert info.value.name == "checkout"
    with pytest.raises(UnknownSkill):
        resolve(toy_library, "walmart", "teleport")
    assert site_signatures(toy_library, "walmart") == ["search", "add_to_cart"]


def test_expand_default_hand_oracle(toy_library):
    prims = expand(toy_library, "amazon", parse_statement('call buy_item("mug")'))
    # hand expansion: 3 search + 2 add_to_cart + 2 checkout
    assert [p for p in prims] == [
        parse_statement(s)
        for s in ("click(#q)", 'type(#q, "mug")', 'press("Enter")', "click(#r0)", "click(#add)", "click(#cart)", "click(#pay)")
    ]


def test_expand_identity_and_unbound(toy_library):
    assert expand(toy_library, "amazon", Prim("noop")) == (Prim("noop"),)
    with pytest.raises(UnboundParam):
        expand(toy_library, "amazon", parse_statement("type(#q, missing)"))


def test_extend_implementation_and_sibling_calls(toy_library):
    sig = toy_library.interfaces["shopping"].signature("checkout")
    body = (Prim("click", (Lit("cart", "selector"),)), Prim("click", (Lit("pay", "selector"),)))
    lib = extend_implementation(toy_library, "walmart", "AbstractShopping", {"checkout": SkillDef(sig, body, "induced", 3)})
    assert resolve(lib, "walmart", "buy_item").bindings["checkout"] == "AbstractShopping.checkout@walmart"
    with pytest.raises(DuplicateSkill):
        extend_implementation(lib, "walmart", "AbstractShopping", {"checkout": SkillDef(sig, body)})


def test_sibling_cycle_rejected():
    lib = register_interface(empty_library(), parse_skill_file("interface I category c { abstract a(); abstract b(); }"))
    bad = "implementation X for I site x { skill a() { call b(); noop } skill b() { call a(); noop } }"
    with pytest.raises(CyclicReference):
        register_implementation(lib, parse_skill_file(bad))


def test_ambiguous_name_across_interfaces():
    lib = register_interface(empty_library(), parse_skill_file("interface Shop category shop { abstract search(q); }"))
    lib = register_interface(lib, parse_skill_file("interface Forum category forum { abstract search(q); }"))
    lib = register_implementation(lib, parse_skill_file("implementation A for Shop site hybrid { skill search(q) { click(#a); type(#a, q) } }"))
    lib = register_implementation(lib, parse_skill_file("implementation B for Forum site hybrid { skill search(q) { click(#b); type(#b, q) } }"))
    with pytest.raises(AmbiguousSkill):
        resolve(lib, "hybrid", "search")
    assert resolve(lib, "hybrid", "Forum.search").skill_id == "Forum.search@hybrid"


def test_validate_flags_later_created_reference():
    # move the callee after its caller in the creation log
    lib = register_interface(empty_library(), parse_skill_file("interface I category c { abstract a(); abstract b(); }"))
    lib = register_implementation(lib, parse_skill_file("implementation X for I site x { skill b() { noop; noop } skill a() { call b(); noop } }"))
    assert validate_library(lib) == []
    swapped = SkillLibrary(lib.interfaces, lib.implementations, tuple(reversed(lib.creation_log)))
    rules = {v.rule for v in validate_library(swapped)}
    assert rules == {"ordering"}


def test_validate_flags_size():
    lib = register_interface(empty_library(), parse_skill_file("interface I category c { abstract a(); }"))
    body = "; ".join(["noop"] * 7)
    lib = register_implementation(lib, parse_skill_file(f"implementation X for I site x {{ @origin(induced) skill a() {{ {body} }} }}"))
    violations = validate_library(lib, SizeBounds(2, 5))
    assert [(v.skill_id, v.rule) for v in violations] == [("I.a@x", "size")]
    assert validate_library(lib, SizeBounds(2, 7)) == []


def test_reference_graph_edges_point_backwards(toy_library):
    graph = reference_graph(toy_library)
    assert graph["AbstractShopping.buy_item"] == []
    pos = {sid: i for i, sid in enumerate(toy_library.creation_log)}
    for src, targets in graph.items():
        assert all(pos[t] < pos[src] for t in targets)


def test_save_load_round_trip(toy_library, tmp_path):
    save_library(toy_library, tmp_path / "lib")
    assert sorted(p.name for p in (tmp_path / "lib" / "shopping").iterdir()) == ["amazon.skill", "interface.skill", "walmart.skill"]
    again = load_library(tmp_path / "lib")
    assert again == toy_library
    for site in ("amazon", "walmart"):
        for name in ("search", "add_to_cart", "checkout", "buy_item"):
            try:
                expected = resolve(toy_library, site, name)
            except Exception as exc:
                with pytest.raises(type(exc)):
                    resolve(again, site, name)
            else:
                assert resolve(again, site, name) == expected


def test_library_prefix_matches_history():
    lib = register_interface(empty_library(), parse_skill_file(TOY_INTERFACE))
    lib1 = register_implementation(lib, parse_skill_file(AMAZON))
    assert library_prefix(lib1, 1) == lib
    assert library_prefix(lib1, len(lib1)) == lib1
    assert library_prefix(lib1, 0) == empty_library()


def test_library_values_are_snapshots(toy_library):
    before = dataclasses.replace(toy_library)
    sig = toy_library.interfaces["shopping"].signature("checkout")
    extend_implementation(toy_library, "walmart", "AbstractShopping", {"checkout": SkillDef(sig, (Prim("noop"), Prim("noop")))})
    assert toy_library == before
    assert isinstance(toy_library.skill("AbstractShopping.search@amazon").body[0], Prim)
