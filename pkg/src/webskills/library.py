"""Polymorphic skill library: category interfaces, per-site implementations, dispatch.

Libraries are immutable snapshots; every ``register_*`` call returns a new
library.  Skill ids are ``Interface.method@site`` for concrete methods and
``Interface.method`` for default (compositional) methods.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .dsl import (
    ArityError,
    Call,
    CategoryInterface,
    Lit,
    Prim,
    SiteImplementation,
    SkillDef,
    SourceText,
    Statement,
    Stop,
    UnboundParam,
    format_skill_file,
    free_variables,
    parse_skill_file,
    substitute,
)

DEFAULT_MIN_STEPS = 2
DEFAULT_MAX_STEPS = 5


class SkillLibraryError(Exception):
    pass


class DuplicateCategory(SkillLibraryError):
    pass


class CyclicDefaultMethods(SkillLibraryError):
    pass


class CyclicReference(SkillLibraryError):
    pass


class UnresolvedCall(SkillLibraryError):
    pass


class UnknownInterface(SkillLibraryError):
    pass


class ConformanceViolation(SkillLibraryError):
    def __init__(self, detail: str) -> None:
        self.detail = detail
        super().__init__(detail)


class DuplicateSite(SkillLibraryError):
    pass


class DuplicateSkill(SkillLibraryError):
    pass


class UnknownImplementation(SkillLibraryError):
    pass


class UnknownSkill(SkillLibraryError):
    pass


class AmbiguousSkill(SkillLibraryError):
    pass


class UnimplementedAbstractCall(SkillLibraryError):
    def __init__(self, site: str, name: str, via: str) -> None:
        self.site = site
        self.name = name
        self.via = via
        super().__init__(f"'{via}' needs '{name}', which site '{site}' does not implement")


@dataclass(frozen=True)
class SizeBounds:
    min_steps: int = DEFAULT_MIN_STEPS
    max_steps: int = DEFAULT_MAX_STEPS

    def admits(self, n: int) -> bool:
        return self.min_steps <= n <= self.max_steps


@dataclass(frozen=True)
class Violation:
    skill_id: str
    rule: str
    detail: str = ""


def default_id(iface_id: str, name: str) -> str:
    return f"{iface_id}.{name}"


def method_id(iface_id: str, name: str, site: str) -> str:
    return f"{iface_id}.{name}@{site}"


@dataclass(frozen=True)
class SkillLibrary:
    interfaces: dict[str, CategoryInterface] = field(default_factory=dict)
    implementations: dict[tuple[str, str], SiteImplementation] = field(default_factory=dict)
    creation_log: tuple[str, ...] = ()

    # -- lookups -----------------------------------------------------------
    def interface_by_id(self, iface_id: str) -> CategoryInterface | None:
        for iface in self.interfaces.values():
            if iface.id == iface_id:
                return iface
        return None

    def implementations_for(self, site: str) -> list[SiteImplementation]:
        return [impl for (s, _), impl in sorted(self.implementations.items()) if s == site]

    def implementation(self, site: str, iface_id: str) -> SiteImplementation | None:
        return self.implementations.get((site, iface_id))

    def sites(self) -> list[str]:
        return sorted({s for s, _ in self.implementations})

    def skills(self) -> Iterator[tuple[str, SkillDef, str | None]]:
        """Yield (skill id, definition, site or None) for every defined skill."""
        for iface in sorted(self.interfaces.values(), key=lambda i: i.id):
            for d in iface.default_methods:
                yield default_id(iface.id, d.name), d, None
        for (site, iface_id), impl in sorted(self.implementations.items()):
            for m in impl.methods.values():
                yield method_id(iface_id, m.name, site), m, site

    def skill(self, skill_id: str) -> SkillDef | None:
        for sid, d, _ in self.skills():
            if sid == skill_id:
                return d
        return None

    def __len__(self) -> int:
        return len(self.creation_log)


def empty_library() -> SkillLibrary:
    return SkillLibrary()


# ----------------------------------------------------------------- registration


def _default_order(iface: CategoryInterface) -> list[SkillDef]:
    """Defaults in dependency order (stable w.r.t. declaration); raises on cycles."""
    names = {d.name for d in iface.default_methods}
    deps = {d.name: [t for t in _call_names(d.body) if t in names] for d in iface.default_methods}
    order: list[str] = []
    state: dict[str, int] = {}

    def visit(n: str, path: list[str]) -> None:
        if state.get(n) == 2:
            return
        if state.get(n) == 1:
            raise CyclicDefaultMethods(" -> ".join(path + [n]))
        state[n] = 1
        for m in deps[n]:
            visit(m, path + [n])
        state[n] = 2
        order.append(n)

    for d in iface.default_methods:
        visit(d.name, [])
    by_name = {d.name: d for d in iface.default_methods}
    return [by_name[n] for n in order]


def _call_names(body: Iterable[Statement]) -> list[str]:
    return [s.target.split(".")[-1] for s in body if isinstance(s, Call)]


def register_interface(lib: SkillLibrary, iface: CategoryInterface) -> SkillLibrary:
    if iface.category in lib.interfaces:
        raise DuplicateCategory(f"category '{iface.category}' already has interface '{lib.interfaces[iface.category].id}'")
    if lib.interface_by_id(iface.id) is not None:
        raise DuplicateCategory(f"interface id '{iface.id}' already registered")
    seen: set[str] = set()
    for sig in list(iface.abstract_signatures) + [d.signature for d in iface.default_methods]:
        if sig.name in seen:
            raise ConformanceViolation(f"duplicate skill name '{sig.name}' in {iface.id}")
        seen.add(sig.name)
        if len({p.name for p in sig.params}) != len(sig.params):
            raise ConformanceViolation(f"duplicate parameter in {iface.id}.{sig.name}")
    for d in iface.default_methods:
        for stmt in d.body:
            if isinstance(stmt, (Prim, Stop)):
                raise ConformanceViolation(f"default method {iface.id}.{d.name} may only call interface skills")
            bare = stmt.target.split(".")[-1]
            if not iface.declares(bare):
                raise UnresolvedCall(f"{iface.id}.{d.name} calls undeclared '{stmt.target}'")
            target = iface.signature(bare) or iface.default(bare).signature  # type: ignore[union-attr]
            if len(stmt.args) != target.arity:
                raise ConformanceViolation(f"{iface.id}.{d.name}: call to '{stmt.target}' passes {len(stmt.args)} args, expected {target.arity}")
        _check_free_vars(d, f"{iface.id}.{d.name}")
    ordered = _default_order(iface)
    return SkillLibrary(
        interfaces={**lib.interfaces, iface.category: iface},
        implementations=dict(lib.implementations),
        creation_log=lib.creation_log + tuple(default_id(iface.id, d.name) for d in ordered),
    )


def _check_free_vars(skill: SkillDef, sid: str) -> None:
    declared = {p.name for p in skill.signature.params}
    free = free_variables(skill.body) - declared
    if free:
        raise ConformanceViolation(f"{sid}: undeclared variable(s) {sorted(free)}")


def _check_methods(iface: CategoryInterface, site: str, methods: dict[str, SkillDef], existing: dict[str, SkillDef]) -> list[str]:
    """Conformance checks; returns method names in reference order."""
    scope = {**existing, **methods}
    for name, m in methods.items():
        if name != m.name:
            raise ConformanceViolation(f"method key '{name}' does not match signature name '{m.name}'")
        if iface.default(name) is not None:
            raise ConformanceViolation(f"'{name}' is a default method of {iface.id} and may not be overridden")
        sig = iface.signature(name)
        if sig is None:
            raise ConformanceViolation(f"'{name}' is not a signature of {iface.id}")
        if m.signature.arity != sig.arity:
            raise ConformanceViolation(f"{name}: arity {m.signature.arity} does not match signature arity {sig.arity}")
        if m.signature.shape() != sig.shape():
            raise ConformanceViolation(f"{name}: parameter kinds {m.signature.shape()} do not match {sig.shape()}")
        if len({p.name for p in m.signature.params}) != len(m.signature.params):
            raise ConformanceViolation(f"{name}: duplicate parameter names")
        _check_free_vars(m, method_id(iface.id, name, site))
        for stmt in m.body:
            if isinstance(stmt, Stop):
                raise ConformanceViolation(f"{name}: 'stop' is not allowed in a skill body")
            if isinstance(stmt, Call):
                target = stmt.target.split(".")[-1]
                if not iface.declares(target) and target not in scope:
                    raise UnresolvedCall(f"{method_id(iface.id, name, site)} calls unknown '{stmt.target}'")
    # sibling references must form a DAG; new methods get ordered after their callees
    order: list[str] = []
    state: dict[str, int] = {}

    def visit(n: str, path: list[str]) -> None:
        if n not in methods or state.get(n) == 2:
            return
        if state.get(n) == 1:
            raise CyclicReference(" -> ".join(path + [n]))
        state[n] = 1
        for t in _call_names(methods[n].body):
            visit(t, path + [n])
        state[n] = 2
        order.append(n)

    for n in methods:
        visit(n, [])
    return order


def register_implementation(lib: SkillLibrary, impl: SiteImplementation) -> SkillLibrary:
    iface = lib.interface_by_id(impl.implements)
    if iface is None:
        raise UnknownInterface(f"no interface '{impl.implements}'")
    key = (impl.site, impl.implements)
    if key in lib.implementations:
        raise DuplicateSite(f"site '{impl.site}' already implements {impl.implements}")
    order = _check_methods(iface, impl.site, impl.methods, {})
    stored = dataclasses.replace(impl, methods={n: impl.methods[n] for n in order})
    return SkillLibrary(
        interfaces=dict(lib.interfaces),
        implementations={**lib.implementations, key: stored},
        creation_log=lib.creation_log + tuple(method_id(iface.id, n, impl.site) for n in order),
    )


def extend_implementation(lib: SkillLibrary, site: str, iface_id: str, methods: dict[str, SkillDef]) -> SkillLibrary:
    """Add new methods to an existing implementation; existing methods are never replaced."""
    impl = lib.implementations.get((site, iface_id))
    if impl is None:
        raise UnknownImplementation(f"site '{site}' has no implementation of {iface_id}")
    iface = lib.interface_by_id(iface_id)
    assert iface is not None
    clash = sorted(set(methods) & set(impl.methods))
    if clash:
        raise DuplicateSkill(f"{site} already implements {clash}")
    order = _check_methods(iface, site, methods, impl.methods)
    merged = {**impl.methods, **{n: methods[n] for n in order}}
    return SkillLibrary(
        interfaces=dict(lib.interfaces),
        implementations={**lib.implementations, (site, iface_id): dataclasses.replace(impl, methods=merged)},
        creation_log=lib.creation_log + tuple(method_id(iface_id, n, site) for n in order),
    )


# ---------------------------------------------------------------------- dispatch


@dataclass(frozen=True)
class ResolvedSkill:
    skill_id: str
    skill: SkillDef
    site: str
    interface_id: str
    # call target name -> skill id it dispatches to on this site
    bindings: dict[str, str] = field(default_factory=dict)

    def __hash__(self) -> int:
        return hash((self.skill_id, self.site))


def _candidates(lib: SkillLibrary, site: str, name: str) -> list[tuple[CategoryInterface, SiteImplementation, str]]:
    iface_filter = None
    if "." in name:
        iface_filter, name = name.split(".", 1)
    found = []
    for impl in lib.implementations_for(site):
        if iface_filter is not None and impl.implements != iface_filter:
            continue
        iface = lib.interface_by_id(impl.implements)
        if iface is not None and (iface.declares(name) or name in impl.methods):
            found.append((iface, impl, name))
    return found


def _lookup(lib: SkillLibrary, site: str, name: str) -> tuple[str, SkillDef, CategoryInterface, SiteImplementation]:
    found = _candidates(lib, site, name)
    if not found:
        raise UnknownSkill(f"no skill '{name}' for site '{site}'")
    if len(found) > 1:
        raise AmbiguousSkill(f"'{name}' is declared by {[f[0].id for f in found]} on '{site}'; qualify it")
    iface, impl, bare = found[0]
    if bare in impl.methods:
        return method_id(iface.id, bare, site), impl.methods[bare], iface, impl
    d = iface.default(bare)
    if d is not None:
        return default_id(iface.id, bare), d, iface, impl
    raise UnimplementedAbstractCall(site, bare, bare)


def resolve(lib: SkillLibrary, site: str, name: str) -> ResolvedSkill:
    """Dispatch ``name`` on ``site``: concrete method if present, else the interface default.

    The whole call closure is checked, so a default whose abstract calls are not
    all implemented by the site raises :class:`UnimplementedAbstractCall`.
    """
    sid, skill, iface, impl = _lookup(lib, site, name)
    bindings: dict[str, str] = {}
    seen: set[str] = set()

    def walk(current_id: str, body: Iterable[Statement]) -> None:
        if current_id in seen:
            return
        seen.add(current_id)
        for t in _call_names(body):
            try:
                tid, tdef, _, _ = _lookup(lib, site, f"{iface.id}.{t}")
            except (UnimplementedAbstractCall, UnknownSkill):
                raise UnimplementedAbstractCall(site, t, current_id) from None
            if current_id == sid:
                bindings[t] = tid
            walk(tid, tdef.body)

    walk(sid, skill.body)
    return ResolvedSkill(sid, skill, site, iface.id, bindings)


def site_signatures(lib: SkillLibrary, site: str) -> list[str]:
    """Names callable on ``site`` right now (implemented methods and resolvable defaults)."""
    names: list[str] = []
    for impl in lib.implementations_for(site):
        iface = lib.interface_by_id(impl.implements)
        if iface is None:
            continue
        for sig in iface.abstract_signatures:
            if sig.name in impl.methods:
                names.append(sig.name)
        for d in iface.default_methods:
            try:
                resolve(lib, site, f"{iface.id}.{d.name}")
            except SkillLibraryError:
                continue
            names.append(d.name)
    return names


# --------------------------------------------------------------------- expansion


def _bind(skill: SkillDef, args: tuple[Lit, ...]) -> dict[str, Lit]:
    params = skill.signature.params
    if len(args) != len(params):
        raise ArityError(f"'{skill.name}' takes {len(params)} argument(s), got {len(args)}")
    return {p.name: a for p, a in zip(params, args)}


def expand(
    lib: SkillLibrary,
    site: str,
    stmt: Statement,
    bindings: dict[str, Lit] | None = None,
    _depth: int = 0,
) -> tuple[Prim, ...]:
    """Flatten a statement into ground primitive actions for ``site``."""
    bindings = bindings or {}
    if _depth > 64:
        raise CyclicReference(f"expansion depth exceeded at {stmt}")
    if isinstance(stmt, Stop):
        return ()
    if isinstance(stmt, Prim):
        return (Prim(stmt.kind, tuple(substitute(a, bindings) for a in stmt.args)),)
    args = tuple(substitute(a, bindings) for a in stmt.args)
    resolved = resolve(lib, site, stmt.target) if _depth == 0 else _resolve_inner(lib, site, stmt.target)
    inner = _bind(resolved.skill, args)
    out: list[Prim] = []
    for s in resolved.skill.body:
        target_stmt = s
        if isinstance(s, Call) and "." not in s.target:
            target_stmt = Call(f"{resolved.interface_id}.{s.target}", s.args)
        out.extend(expand(lib, site, target_stmt, inner, _depth + 1))
    return tuple(out)


def _resolve_inner(lib: SkillLibrary, site: str, name: str) -> ResolvedSkill:
    sid, skill, iface, _ = _lookup(lib, site, name)
    return ResolvedSkill(sid, skill, site, iface.id)


def skill_call_id(lib: SkillLibrary, site: str, stmt: Statement) -> str | None:
    if not isinstance(stmt, Call):
        return None
    return resolve(lib, site, stmt.target).skill_id


# --------------------------------------------------------------------- validation


def _static_targets(lib: SkillLibrary, sid: str, skill: SkillDef, site: str | None, iface: CategoryInterface) -> list[str]:
    """Skill ids referenced by the body without runtime dispatch.

    Calls from a concrete method resolve on its own site; calls from a default
    method only name other defaults (abstract signatures are not skills).
    """
    out: list[str] = []
    for t in _call_names(skill.body):
        if site is not None:
            impl = lib.implementations.get((site, iface.id))
            if impl is not None and t in impl.methods:
                out.append(method_id(iface.id, t, site))
                continue
        if iface.default(t) is not None:
            out.append(default_id(iface.id, t))
    return out


def reference_graph(lib: SkillLibrary) -> dict[str, list[str]]:
    graph: dict[str, list[str]] = {}
    for iface in lib.interfaces.values():
        for d in iface.default_methods:
            sid = default_id(iface.id, d.name)
            graph[sid] = _static_targets(lib, sid, d, None, iface)
    for (site, iface_id), impl in lib.implementations.items():
        iface = lib.interface_by_id(iface_id)
        if iface is None:
            continue
        for m in impl.methods.values():
            sid = method_id(iface_id, m.name, site)
            graph[sid] = _static_targets(lib, sid, m, site, iface)
    return graph


def _find_cycles(graph: dict[str, list[str]]) -> list[list[str]]:
    cycles: list[list[str]] = []
    color: dict[str, int] = {}

    def visit(n: str, stack: list[str]) -> None:
        color[n] = 1
        stack.append(n)
        for m in graph.get(n, []):
            if color.get(m, 0) == 0:
                visit(m, stack)
            elif color.get(m) == 1:
                cycles.append(stack[stack.index(m):] + [m])
        stack.pop()
        color[n] = 2

    for n in sorted(graph):
        if color.get(n, 0) == 0:
            visit(n, [])
    return cycles


def validate_library(lib: SkillLibrary, bounds: SizeBounds | None = None) -> list[Violation]:
    """Check every structural invariant; returns violations as data (empty when clean)."""
    bounds = bounds or SizeBounds()
    out: list[Violation] = []
    position = {sid: i for i, sid in enumerate(lib.creation_log)}
    defined: dict[str, tuple[SkillDef, str | None, CategoryInterface]] = {}

    for category, iface in sorted(lib.interfaces.items()):
        if iface.category != category:
            out.append(Violation(iface.id, "dangling", f"filed under '{category}' but declares '{iface.category}'"))
        names = [s.name for s in iface.abstract_signatures] + [d.name for d in iface.default_methods]
        for dup in sorted({n for n in names if names.count(n) > 1}):
            out.append(Violation(f"{iface.id}.{dup}", "duplicate", "name declared twice"))
        for sig in list(iface.abstract_signatures) + [d.signature for d in iface.default_methods]:
            if len({p.name for p in sig.params}) != len(sig.params):
                out.append(Violation(f"{iface.id}.{sig.name}", "duplicate", "duplicate parameter name"))
        for d in iface.default_methods:
            sid = default_id(iface.id, d.name)
            defined[sid] = (d, None, iface)
            for stmt in d.body:
                if isinstance(stmt, (Prim, Stop)):
                    out.append(Violation(sid, "conformance", "default methods may only call interface skills"))
                elif not iface.declares(stmt.target.split(".")[-1]):
                    out.append(Violation(sid, "unresolved", f"calls undeclared '{stmt.target}'"))
                else:
                    bare = stmt.target.split(".")[-1]
                    target = iface.signature(bare) or iface.default(bare).signature  # type: ignore[union-attr]
                    if len(stmt.args) != target.arity:
                        out.append(Violation(sid, "arity", f"call to '{stmt.target}' passes {len(stmt.args)} args, expected {target.arity}"))

    for (site, iface_id), impl in sorted(lib.implementations.items()):
        iface = lib.interface_by_id(iface_id)
        if iface is None or impl.implements != iface_id or impl.site != site:
            out.append(Violation(f"{iface_id}@{site}", "dangling", f"implementation of unknown interface '{iface_id}'"))
            continue
        for name, m in impl.methods.items():
            sid = method_id(iface_id, name, site)
            defined[sid] = (m, site, iface)
            sig = iface.signature(name)
            if iface.default(name) is not None:
                out.append(Violation(sid, "conformance", "overrides a default method"))
            elif sig is None:
                out.append(Violation(sid, "conformance", f"not a signature of {iface_id}"))
            elif m.signature.arity != sig.arity or m.signature.shape() != sig.shape():
                out.append(Violation(sid, "arity", f"{m.signature.shape()} vs signature {sig.shape()}"))
            for stmt in m.body:
                if isinstance(stmt, Stop):
                    out.append(Violation(sid, "conformance", "'stop' inside a skill body"))
                elif isinstance(stmt, Call):
                    t = stmt.target.split(".")[-1]
                    if not iface.declares(t) and t not in impl.methods:
                        out.append(Violation(sid, "unresolved", f"calls unknown '{stmt.target}'"))
                    elif t not in impl.methods and iface.default(t) is None:
                        out.append(Violation(sid, "ordering", f"calls '{t}', which {site} does not implement yet"))

    for sid, (skill, _site, _iface) in sorted(defined.items()):
        declared = {p.name for p in skill.signature.params}
        free = free_variables(skill.body) - declared
        if free:
            out.append(Violation(sid, "free-variable", f"undeclared {sorted(free)}"))
        if skill.origin == "induced" and not bounds.admits(len(skill.body)):
            out.append(Violation(sid, "size", f"{len(skill.body)} statements outside [{bounds.min_steps}, {bounds.max_steps}]"))
        if sid not in position:
            out.append(Violation(sid, "dangling", "missing from creation log"))

    for sid in lib.creation_log:
        if sid not in defined:
            out.append(Violation(sid, "dangling", "creation log names an undefined skill"))
    if len(set(lib.creation_log)) != len(lib.creation_log):
        out.append(Violation("<creation-log>", "duplicate", "skill id logged twice"))
    stamps = [defined[s][0].created_at for s in lib.creation_log if s in defined]
    if any(a > b for a, b in zip(stamps, stamps[1:])):
        out.append(Violation("<creation-log>", "ordering", "creation log disagrees with created_at"))

    graph = reference_graph(lib)
    for cycle in _find_cycles(graph):
        out.append(Violation(cycle[0], "cycle", " -> ".join(cycle)))
    for sid, targets in sorted(graph.items()):
        for t in targets:
            if sid in position and t in position and position[t] >= position[sid]:
                out.append(Violation(sid, "ordering", f"references '{t}', created later"))
    return out


def library_prefix(lib: SkillLibrary, n: int) -> SkillLibrary:
    """The library as it stood after its first ``n`` creation-log entries."""
    keep = set(lib.creation_log[:n])
    interfaces = {}
    for category, iface in lib.interfaces.items():
        defaults = [d for d in iface.default_methods if default_id(iface.id, d.name) in keep]
        if defaults or any(
            i == iface.id and any(method_id(i, m, s) in keep for m in impl.methods)
            for (s, i), impl in lib.implementations.items()
        ):
            interfaces[category] = dataclasses.replace(iface, default_methods=tuple(defaults)) if len(defaults) != len(iface.default_methods) else iface
    impls = {}
    for (site, iface_id), impl in lib.implementations.items():
        methods = {m: d for m, d in impl.methods.items() if method_id(iface_id, m, site) in keep}
        if methods:
            impls[(site, iface_id)] = dataclasses.replace(impl, methods=methods)
    return SkillLibrary(interfaces, impls, lib.creation_log[:n])


def merge_node(lib: SkillLibrary, node: CategoryInterface | SiteImplementation) -> SkillLibrary:
    """Register an interface, or add an implementation's methods (creating it if needed)."""
    if isinstance(node, CategoryInterface):
        return register_interface(lib, node)
    if (node.site, node.implements) in lib.implementations:
        return extend_implementation(lib, node.site, node.implements, dict(node.methods))
    return register_implementation(lib, node)


# -------------------------------------------------------------------- persistence


def save_library(lib: SkillLibrary, root: str | Path) -> None:
    """Write one directory per category plus ``creation.log``."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    for category, iface in sorted(lib.interfaces.items()):
        d = root / category
        d.mkdir(exist_ok=True)
        (d / "interface.skill").write_text(format_skill_file(iface), encoding="utf-8")
    for (site, iface_id), impl in sorted(lib.implementations.items()):
        iface = lib.interface_by_id(iface_id)
        category = iface.category if iface is not None else iface_id
        d = root / category
        d.mkdir(exist_ok=True)
        (d / f"{site}.skill").write_text(format_skill_file(impl), encoding="utf-8")
    (root / "creation.log").write_text("".join(f"{sid}\n" for sid in lib.creation_log), encoding="utf-8")


def load_library(root: str | Path) -> SkillLibrary:
    """Read a library directory as written by :func:`save_library` (no re-validation)."""
    root = Path(root)
    interfaces: dict[str, CategoryInterface] = {}
    impls: dict[tuple[str, str], SiteImplementation] = {}
    for path in sorted(root.glob("*/*.skill")):
        node = parse_skill_file(SourceText.of(path.read_bytes(), str(path)))
        if isinstance(node, CategoryInterface):
            interfaces[node.category] = node
        else:
            impls[(node.site, node.implements)] = node
    log_path = root / "creation.log"
    log = tuple(line for line in log_path.read_text(encoding="utf-8").splitlines() if line) if log_path.exists() else ()
    return SkillLibrary(interfaces, impls, log)


__all__ = [
    "AmbiguousSkill",
    "ConformanceViolation",
    "CyclicDefaultMethods",
    "CyclicReference",
    "DuplicateCategory",
    "DuplicateSite",
    "DuplicateSkill",
    "ResolvedSkill",
    "SizeBounds",
    "SkillLibrary",
    "SkillLibraryError",
    "UnboundParam",
    "UnimplementedAbstractCall",
    "UnknownImplementation",
    "UnknownInterface",
    "UnknownSkill",
    "UnresolvedCall",
    "Violation",
    "default_id",
    "empty_library",
    "expand",
    "extend_implementation",
    "library_prefix",
    "merge_node",
    "load_library",
    "method_id",
    "reference_graph",
    "register_implementation",
    "register_interface",
    "resolve",
    "save_library",
    "site_signatures",
    "skill_call_id",
    "validate_library",
]
