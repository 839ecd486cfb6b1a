"""Deterministic simulated websites.

Every site in a family exposes the same capabilities behind a different
surface: element ids, labels and page-graph shapes are drawn per site from a
seed.  Transitions are data (``Rule`` records plus a small effect vocabulary)
so site specs round-trip through JSON.
"""

from __future__ import annotations

import hashlib
import json
import random
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Iterable

from .dsl import PRIMITIVE_ARGS, Lit, Prim, SkillDef, SkillSignature, ParamSpec, Call, Ref, format_statement, parse_statement

SITE_SCHEMA = "webskills.site/1"
SUITE_SCHEMA = "webskills.tasks/1"
RESULT_SLOTS = 5
MAX_SCROLL = 3


class SimError(Exception):
    pass


class UnknownCategory(SimError):
    pass


class SiteTaskMismatch(SimError):
    pass


class MalformedAction(SimError):
    pass


class UnknownPredicate(SimError):
    pass


def digest(payload: Any) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


# ----------------------------------------------------------------- site model


@dataclass(frozen=True)
class Element:
    id: str
    role: str  # textbox | button | link | checkbox
    label: str
    tags: tuple[str, ...] = ()
    visible_if: str | None = None  # "flag:<name>" | "result:<i>"


@dataclass(frozen=True)
class Rule:
    page: str
    action: str  # click | press
    target: str
    effects: tuple[tuple, ...] = ()
    goto: str | None = None
    key: str | None = None


@dataclass(frozen=True)
class SiteSpec:
    site: str
    category: str
    seed: int
    prefix: str
    home: str
    pages: dict[str, tuple[Element, ...]]
    addressable: tuple[str, ...]
    rules: tuple[Rule, ...]
    catalog: tuple[dict, ...]
    featured: tuple[str, ...]
    capabilities: tuple[str, ...]
    variants: dict[str, str] = field(default_factory=dict)
    witnesses: dict[str, tuple[str, ...]] = field(default_factory=dict)

    @cached_property
    def rule_index(self) -> dict[tuple[str, str, str, str | None], Rule]:
        return {(r.page, r.action, r.target, r.key): r for r in self.rules}

    @cached_property
    def element_index(self) -> dict[str, Element]:
        out: dict[str, Element] = {}
        for elems in self.pages.values():
            for e in elems:
                out.setdefault(e.id, e)
        return out

    @cached_property
    def fingerprint(self) -> str:
        return digest(spec_to_json(self))

    def tagged(self, tag: str) -> set[str]:
        return {e.id for e in self.element_index.values() if tag in e.tags}


# -------------------------------------------------------------- family shapes


@dataclass(frozen=True)
class Family:
    category: str
    interface_id: str
    capabilities: tuple[str, ...]
    signatures: tuple[SkillSignature, ...]
    defaults: tuple[SkillDef, ...]
    # signature name -> (predicate id, instruction template, param names)
    templates: dict[str, tuple[str, str, tuple[str, ...]]]
    site_names: tuple[str, ...]
    vocab: dict[str, tuple[str, ...]]

    def signature(self, name: str) -> SkillSignature | None:
        return next((s for s in self.signatures if s.name == name), None)


def _sig(name: str, *params: str, doc: str = "") -> SkillSignature:
    return SkillSignature(name, tuple(ParamSpec(p, "text") for p in params), doc)


def _default(name: str, params: tuple[str, ...], calls: list[tuple[str, tuple[str, ...]]]) -> SkillDef:
    body = tuple(Call(t, tuple(Ref(a) for a in args)) for t, args in calls)
    return SkillDef(_sig(name, *params), body, origin="default")


SHOPPING = Family(
    category="shopping",
    interface_id="AbstractShoppingSite",
    capabilities=("search", "open_item", "add_to_cart", "checkout", "filter", "wishlist"),
    signatures=(
        _sig("search", "query", doc="Search the catalog and show the results page"),
        _sig("add_to_cart", doc="Open the top result and put it in the cart"),
        _sig("checkout", doc="Place an order for everything in the cart"),
        _sig("apply_filter", doc="Restrict the current results to in-stock items"),
        _sig("add_to_wishlist", doc="Open the top result and save it to the wishlist"),
    ),
    defaults=(
        _default("buy_item", ("item",), [("search", ("item",)), ("add_to_cart", ()), ("checkout", ())]),
        _default("save_item", ("item",), [("search", ("item",)), ("add_to_wishlist", ())]),
    ),
    templates={
        "search": ("searched", "Search for {query}", ("query",)),
        "add_to_cart": ("in_cart", "Add a {query} to the cart", ("query",)),
        "checkout": ("ordered", "Buy a {query}", ("query",)),
        "apply_filter": ("filtered", "Search for {query} and show only in-stock items", ("query",)),
        "add_to_wishlist": ("wishlisted", "Save a {query} to the wishlist", ("query",)),
    },
    site_names=("marketly", "shopora", "cartwise", "buynest", "dealhub", "goodsly", "basketo", "storefy"),
    vocab={
        "items": (
            "blue mug", "travel mug", "desk lamp", "floor lamp", "usb cable", "hdmi cable",
            "yoga mat", "water bottle", "steel bottle", "spiral notebook", "hiking backpack",
            "phone case", "wireless mouse", "coffee grinder", "tea kettle", "ceramic mug",
        ),
    },
)

CODING = Family(
    category="coding",
    interface_id="AbstractCodingSite",
    capabilities=("search_repo", "open_repo", "star_repo", "create_repo", "create_issue", "label_issue"),
    signatures=(
        _sig("search_repo", "query", doc="Search repositories by name"),
        _sig("star_repo", doc="Open the top result and star it"),
        _sig("create_repo", "name", doc="Create a new repository"),
        _sig("create_issue", "title", doc="Open an issue on the current repository"),
        _sig("label_issue", "label", doc="Attach a label to the current issue"),
    ),
    defaults=(
        _default("start_project", ("name", "title"), [("create_repo", ("name",)), ("create_issue", ("title",))]),
        _default("file_labeled_issue", ("title", "label"), [("create_issue", ("title",)), ("label_issue", ("label",))]),
    ),
    templates={
        "search_repo": ("repo_searched", "Search for repositories about {query}", ("query",)),
        "star_repo": ("starred", "Star the {query} repository", ("query",)),
        "create_repo": ("repo_exists", "Create a repository named {name}", ("name",)),
        "create_issue": ("issue_exists", "Create repository {name} and open an issue '{title}'", ("name", "title")),
        "label_issue": (
            "issue_labeled",
            "Create repository {name}, open an issue '{title}' and label it {label}",
            ("name", "title", "label"),
        ),
    },
    site_names=("codehub", "gitnest", "repobase", "forgely", "commitly", "branchr"),
    vocab={
        "repos": ("fast-json", "tiny-http", "data-utils", "web-kit", "ml-notes", "cli-tools", "graph-lab", "async-queue"),
        "new_repos": ("demo-app", "sandbox", "playground", "scratchpad", "prototype", "toybox"),
        "titles": ("fix typo", "add tests", "update docs", "crash on start", "slow import"),
        "labels": ("bug", "docs", "enhancement", "question"),
    },
)

FAMILIES: dict[str, Family] = {f.category: f for f in (SHOPPING, CODING)}


def family(category: str) -> Family:
    try:
        return FAMILIES[category]
    except KeyError:
        raise UnknownCategory(f"no site family for category '{category}'") from None


def keyword(name: str) -> str:
    return name.split()[-1] if " " in name else name.split("-")[-1]


# ---------------------------------------------------------------- site builder

_LABELS = {
    "search": ("Search", "Find", "Look up"),
    "go": ("Go", "Search", "Submit"),
    "cart": ("Cart", "Basket", "Bag"),
    "add": ("Add to cart", "Add to basket", "Add to bag"),
    "confirm": ("Confirm", "Yes, add it", "OK"),
    "checkout": ("Checkout", "Proceed", "Continue to payment"),
    "place": ("Place order", "Confirm order", "Pay now"),
    "wish": ("Wishlist", "Save", "Favorite"),
    "instock": ("In stock only", "Available now", "Hide sold out"),
    "home": ("Home", "Start", "Main page"),
    "star": ("Star", "Favorite", "Bookmark"),
    "new": ("New repository", "Create repo", "New project"),
}


class _Builder:
    def __init__(self, site: str, prefix: str, rng: random.Random) -> None:
        self.site = site
        self.prefix = prefix
        self.rng = rng
        self.pages: dict[str, list[Element]] = {}
        self.rules: list[Rule] = []
        self.words: dict[str, str] = {}

    def eid(self, name: str) -> str:
        return f"{self.prefix}-{name}"

    def label(self, key: str) -> str:
        if key not in self.words:
            self.words[key] = self.rng.choice(_LABELS[key])
        return self.words[key]

    def el(self, page: str, name: str, role: str, label: str, tags: tuple[str, ...] = (), visible_if: str | None = None) -> str:
        eid = self.eid(name)
        self.pages.setdefault(page, []).append(Element(eid, role, label, tags, visible_if))
        return eid

    def on(self, page: str, action: str, target: str, *effects: tuple, goto: str | None = None, key: str | None = None) -> None:
        self.rules.append(Rule(page, action, target, tuple(effects), goto, key))


def _search_header(b: _Builder, page: str, variant: str, submit_effect: str, results_page: str) -> None:
    box = b.eid("q")
    if variant == "C":
        icon = b.el(page, "find", "button", b.label("search"), ("search",))
        b.el(page, "q", "textbox", b.label("search"), ("search",), visible_if="flag:search_open")
        b.on(page, "click", icon, ("reveal", "search_open", box))
    else:
        b.el(page, "q", "textbox", b.label("search"), ("search",))
    b.on(page, "click", box, ("focus",))
    if variant == "B":
        go = b.el(page, "go", "button", b.label("go"), ("search",))
        b.on(page, "click", go, (submit_effect, box), goto=results_page)
    else:
        b.on(page, "press", box, (submit_effect, box), goto=results_page, key="Enter")


def _build_shopping(b: _Builder, v: dict[str, str]) -> tuple[dict[str, list[Element]], tuple[str, ...]]:
    for page in ("home", "results", "item"):
        _search_header(b, page, v["search"], "search", "results")
        cart = b.el(page, "cart", "link", b.label("cart"))
        b.on(page, "click", cart, goto="cart")
    for i in range(RESULT_SLOTS):
        r = b.el("results", f"r{i}", "link", "", visible_if=f"result:{i}")
        b.on("results", "click", r, ("open", i), goto="item")
    if v["filter"] == "A":
        box = b.el("results", "instock", "checkbox", b.label("instock"), ("filter",))
        apply = b.el("results", "apply", "button", "Apply", ("filter",))
        b.on("results", "click", box, ("require", "searched"), ("flag", "instock"))
        b.on("results", "click", apply, ("require", "instock"), ("filter",))
    else:
        panel = b.el("results", "filters", "button", "Filters", ("filter",))
        box = b.el("results", "instock", "checkbox", b.label("instock"), ("filter",), visible_if="flag:filter_panel")
        b.on("results", "click", panel, ("require", "searched"), ("flag", "filter_panel"))
        b.on("results", "click", box, ("filter",))
    if v["add"] == "A":
        add = b.el("item", "add", "button", b.label("add"))
        confirm = b.el("item", "confirm", "button", b.label("confirm"), visible_if="flag:confirm_open")
        b.on("item", "click", add, ("flag", "confirm_open"))
        b.on("item", "click", confirm, ("cart_add",), ("unflag", "confirm_open"))
    else:
        qty = b.el("item", "qty", "button", "Qty 1")
        add = b.el("item", "add", "button", b.label("add"))
        b.on("item", "click", qty, ("flag", "qty"))
        b.on("item", "click", add, ("require", "qty"), ("cart_add",), ("unflag", "qty"))
    if v["wish"] == "A":
        wish = b.el("item", "wish", "button", b.label("wish"))
        b.on("item", "click", wish, ("wish",))
    else:
        more = b.el("item", "more", "button", "More")
        save = b.el("item", "save", "button", b.label("wish"), visible_if="flag:more_open")
        b.on("item", "click", more, ("flag", "more_open"))
        b.on("item", "click", save, ("wish",))
    for page in ("cart", "review", "done"):
        home = b.el(page, "home", "link", b.label("home"))
        b.on(page, "click", home, goto="home")
    checkout = b.el("cart", "checkout", "button", b.label("checkout"))
    if v["checkout"] == "A":
        b.on("cart", "click", checkout, ("require_cart",), goto="review")
        place = b.el("review", "place", "button", b.label("place"))
        b.on("review", "click", place, ("order",), goto="done")
    else:
        b.pages.pop("review")
        b.rules = [r for r in b.rules if r.page != "review"]
        place = b.el("cart", "place", "button", b.label("place"), visible_if="flag:confirm_order")
        b.on("cart", "click", checkout, ("require_cart",), ("flag", "confirm_order"))
        b.on("cart", "click", place, ("order",), goto="done")
    return b.pages, ("home", "cart")


def _build_coding(b: _Builder, v: dict[str, str]) -> tuple[dict[str, list[Element]], tuple[str, ...]]:
    for page in ("home", "results", "repo", "issue"):
        _search_header(b, page, v["search"], "search_repo", "results")
        home = b.el(page, "home", "link", b.label("home"))
        b.on(page, "click", home, goto="home")
    new = b.el("home", "new", "button", b.label("new"))
    b.on("home", "click", new, goto="new_repo")
    for i in range(RESULT_SLOTS):
        r = b.el("results", f"r{i}", "link", "", visible_if=f"result:{i}")
        b.on("results", "click", r, ("open", i), goto="repo")
    name = b.el("new_repo", "name", "textbox", "Repository name")
    b.on("new_repo", "click", name, ("focus",))
    if v["create"] == "A":
        create = b.el("new_repo", "create", "button", "Create repository")
        b.on("new_repo", "click", create, ("create_repo", name), goto="repo")
    else:
        b.on("new_repo", "press", name, ("create_repo", name), goto="repo", key="Enter")
        cancel = b.el("new_repo", "cancel", "link", "Cancel")
        b.on("new_repo", "click", cancel, goto="home")
    if v["star"] == "A":
        star = b.el("repo", "star", "button", b.label("star"))
        b.on("repo", "click", star, ("star",))
    else:
        menu = b.el("repo", "menu", "button", "...")
        star = b.el("repo", "star", "button", b.label("star"), visible_if="flag:menu_open")
        b.on("repo", "click", menu, ("flag", "menu_open"))
        b.on("repo", "click", star, ("star",))
    newissue = b.el("repo", "newissue", "button", "New issue")
    b.on("repo", "click", newissue, ("require_repo",), goto="new_issue")
    title = b.el("new_issue", "title", "textbox", "Title")
    submit = b.el("new_issue", "submit", "button", "Submit issue")
    b.on("new_issue", "click", title, ("focus",))
    b.on("new_issue", "click", submit, ("create_issue", title), goto="issue")
    if v["label"] == "A":
        lbl = b.el("issue", "label", "textbox", "Add label")
        b.on("issue", "click", lbl, ("focus",))
        b.on("issue", "press", lbl, ("label", lbl), key="Enter")
    else:
        opener = b.el("issue", "labels", "button", "Labels")
        lbl = b.el("issue", "label", "textbox", "Label name", visible_if="flag:labels_open")
        apply = b.el("issue", "apply", "button", "Apply label", visible_if="flag:labels_open")
        b.on("issue", "click", opener, ("reveal", "labels_open", lbl))
        b.on("issue", "click", lbl, ("focus",))
        b.on("issue", "click", apply, ("label", lbl))
    return b.pages, ("home", "new_repo")


_VARIANTS = {
    "shopping": {"search": "ABC", "filter": "AB", "add": "AB", "wish": "AB", "checkout": "AB"},
    "coding": {"search": "ABC", "create": "AB", "star": "AB", "label": "AB"},
}
_BUILDERS = {"shopping": _build_shopping, "coding": _build_coding}


def _prefixes(rng: random.Random, n: int) -> list[str]:
    letters = "bcdfghjklmnpqrstvwxz"
    pool = sorted({a + b + c for a in letters for b in "aeiou" for c in letters})
    return rng.sample(pool, n)


def generate_site_family(category: str, n_sites: int, seed: int) -> list[SiteSpec]:
    """Build ``n_sites`` structurally distinct sites sharing one capability manifest."""
    fam = family(category)
    if n_sites < 1:
        raise ValueError("n_sites must be >= 1")
    rng = random.Random(f"family:{category}:{seed}")
    names = list(fam.site_names)
    rng.shuffle(names)
    while len(names) < n_sites:
        names.append(f"{fam.site_names[len(names) % len(fam.site_names)]}{len(names)}")
    prefixes = _prefixes(rng, n_sites)
    axes = _VARIANTS[category]
    offsets = {axis: rng.randrange(len(opts)) for axis, opts in axes.items()}
    specs = []
    for i in range(n_sites):
        variants = {axis: opts[(offsets[axis] + i) % len(opts)] for axis, opts in axes.items()}
        site_rng = random.Random(f"site:{category}:{seed}:{i}")
        specs.append(_build_site(fam, names[i], prefixes[i], seed, variants, site_rng))
    return specs


def _build_site(fam: Family, site: str, prefix: str, seed: int, variants: dict[str, str], rng: random.Random) -> SiteSpec:
    b = _Builder(site, prefix, rng)
    if fam.category == "shopping":
        items = list(fam.vocab["items"])
        rng.shuffle(items)
        catalog = tuple({"name": n, "in_stock": rng.random() < 0.7} for n in items)
    else:
        repos = list(fam.vocab["repos"])
        rng.shuffle(repos)
        catalog = tuple({"name": n} for n in repos)
    pages, addressable = _BUILDERS[fam.category](b, variants)
    spec = SiteSpec(
        site=site,
        category=fam.category,
        seed=seed,
        prefix=prefix,
        home="home",
        pages={k: tuple(v) for k, v in pages.items()},
        addressable=addressable,
        rules=tuple(b.rules),
        catalog=catalog,
        featured=tuple(c["name"] for c in catalog[:4]),
        capabilities=fam.capabilities,
        variants=dict(variants),
    )
    _check_totality(spec)
    witnesses = {}
    for cap in fam.capabilities:
        w = capability_witness(spec, cap)
        if w is None:
            raise SimError(f"capability '{cap}' unreachable on {site}")
        witnesses[cap] = tuple(format_statement(p) for p in w)
    return SiteSpec(**_replace_witnesses(spec, witnesses))


def _replace_witnesses(spec: SiteSpec, witnesses: dict[str, tuple[str, ...]]) -> dict:
    fields = {k: getattr(spec, k) for k in SiteSpec.__dataclass_fields__}
    fields["witnesses"] = witnesses
    return fields


def _check_totality(spec: SiteSpec) -> None:
    for page, elems in spec.pages.items():
        for e in elems:
            if (page, "click", e.id, None) not in spec.rule_index:
                raise SimError(f"{spec.site}: no click rule for {e.id} on {page}")


# --------------------------------------------------------------- JSON schema


def spec_to_json(spec: SiteSpec) -> dict:
    return {
        "schema": SITE_SCHEMA,
        "site": spec.site,
        "category": spec.category,
        "seed": spec.seed,
        "prefix": spec.prefix,
        "home": spec.home,
        "addressable": list(spec.addressable),
        "pages": {
            page: [
                {"id": e.id, "role": e.role, "label": e.label, "tags": list(e.tags), "visible_if": e.visible_if}
                for e in elems
            ]
            for page, elems in spec.pages.items()
        },
        "rules": [
            {
                "page": r.page,
                "action": r.action,
                "target": r.target,
                "key": r.key,
                "effects": [list(e) for e in r.effects],
                "goto": r.goto,
            }
            for r in spec.rules
        ],
        "catalog": [dict(c) for c in spec.catalog],
        "featured": list(spec.featured),
        "capabilities": list(spec.capabilities),
        "variants": dict(spec.variants),
        "witnesses": {k: list(v) for k, v in spec.witnesses.items()},
    }


def spec_from_json(data: dict) -> SiteSpec:
    if data.get("schema") != SITE_SCHEMA:
        raise SimError(f"unsupported site schema {data.get('schema')!r}")
    return SiteSpec(
        site=data["site"],
        category=data["category"],
        seed=data["seed"],
        prefix=data["prefix"],
        home=data["home"],
        pages={
            page: tuple(Element(e["id"], e["role"], e["label"], tuple(e["tags"]), e["visible_if"]) for e in elems)
            for page, elems in data["pages"].items()
        },
        addressable=tuple(data["addressable"]),
        rules=tuple(
            Rule(r["page"], r["action"], r["target"], tuple(tuple(e) for e in r["effects"]), r["goto"], r["key"])
            for r in data["rules"]
        ),
        catalog=tuple(dict(c) for c in data["catalog"]),
        featured=tuple(data["featured"]),
        capabilities=tuple(data["capabilities"]),
        variants=dict(data.get("variants", {})),
        witnesses={k: tuple(v) for k, v in data.get("witnesses", {}).items()},
    )


# ----------------------------------------------------------------- site state


@dataclass
class Tab:
    page: str
    back: list[str] = field(default_factory=list)
    fwd: list[str] = field(default_factory=list)


def _copy_nested(value: Any) -> Any:
    # latent values are scalars or (nested) lists of strings; deepcopy is the BFS hot spot
    return [_copy_nested(v) for v in value] if isinstance(value, list) else value


@dataclass
class SiteState:
    spec: SiteSpec
    tabs: list[Tab]
    active: int = 0
    focus: str | None = None
    hovered: str | None = None
    scroll: int = 0
    fields: dict[str, str] = field(default_factory=dict)
    flags: set[str] = field(default_factory=set)
    latent: dict[str, Any] = field(default_factory=dict)
    steps: int = 0
    events: tuple[str, ...] = ()

    @property
    def page(self) -> str:
        return self.tabs[self.active].page

    def clone(self) -> "SiteState":
        return SiteState(
            spec=self.spec,
            tabs=[Tab(t.page, list(t.back), list(t.fwd)) for t in self.tabs],
            active=self.active,
            focus=self.focus,
            hovered=self.hovered,
            scroll=self.scroll,
            fields=dict(self.fields),
            flags=set(self.flags),
            latent={k: _copy_nested(v) for k, v in self.latent.items()},
            steps=self.steps,
            events=self.events,
        )

    def snapshot(self, with_steps: bool = True) -> dict:
        snap = {
            "site": self.spec.site,
            "tabs": [[t.page, t.back, t.fwd] for t in self.tabs],
            "active": self.active,
            "focus": self.focus,
            "hovered": self.hovered,
            "scroll": self.scroll,
            "fields": self.fields,
            "flags": sorted(self.flags),
            "latent": self.latent,
        }
        if with_steps:
            snap["steps"] = self.steps
        return snap

    def digest(self) -> str:
        return digest(self.snapshot())


@dataclass(frozen=True)
class Node:
    id: str
    role: str
    label: str
    value: str = ""


@dataclass(frozen=True)
class Observation:
    site: str
    page: str
    nodes: tuple[Node, ...]
    events: tuple[str, ...] = ()
    tabs: int = 1
    active: int = 0

    @property
    def url(self) -> str:
        return f"{self.site}/{self.page}"

    def to_json(self) -> dict:
        return {
            "url": self.url,
            "tabs": self.tabs,
            "active": self.active,
            "events": list(self.events),
            "nodes": [[n.id, n.role, n.label, n.value] for n in self.nodes],
        }

    def digest(self) -> str:
        return digest(self.to_json())

    def render(self) -> str:
        lines = [f"url: {self.url}  tab {self.active + 1}/{self.tabs}"]
        for n in self.nodes:
            value = f" value={n.value!r}" if n.value else ""
            ident = f"#{n.id}" if n.role != "text" else "-"
            lines.append(f"  [{n.role}] {ident} {n.label!r}{value}")
        if self.events:
            lines.append(f"  events: {', '.join(self.events)}")
        return "\n".join(lines)


def _initial_latent(spec: SiteSpec) -> dict[str, Any]:
    if spec.category == "shopping":
        return {"queries": [], "results": [], "filter": False, "item": None, "cart": [], "wishlist": [], "orders": []}
    return {
        "queries": [],
        "results": [],
        "repos": [c["name"] for c in spec.catalog],
        "created": [],
        "starred": [],
        "repo": None,
        "issues": [],
        "issue": None,
        "labels": [],
    }


def initial_state(spec: SiteSpec) -> SiteState:
    return SiteState(spec=spec, tabs=[Tab(spec.home)], latent=_initial_latent(spec))


def _visible(state: SiteState, e: Element) -> bool:
    cond = e.visible_if
    if cond is None:
        return True
    kind, _, arg = cond.partition(":")
    if kind == "flag":
        return arg in state.flags
    if kind == "result":
        return int(arg) < len(state.latent["results"])
    return False


def _element_on_page(state: SiteState, eid: str) -> Element | None:
    for e in state.spec.pages.get(state.page, ()):
        if e.id == eid and _visible(state, e):
            return e
    return None


def observe(state: SiteState) -> Observation:
    spec = state.spec
    nodes: list[Node] = []
    latent = state.latent
    page = state.page
    if page == "home":
        label = "Featured" if spec.category == "shopping" else "Popular repositories"
        nodes.append(Node(f"{spec.prefix}-featured", "heading", label))
        nodes.extend(Node(f"{spec.prefix}-feat{i}", "text", name) for i, name in enumerate(spec.featured))
    for e in spec.pages.get(page, ()):
        if not _visible(state, e):
            continue
        label = e.label
        value = ""
        if e.visible_if and e.visible_if.startswith("result:"):
            label = latent["results"][int(e.visible_if.split(":")[1])]
        if e.role == "textbox":
            value = state.fields.get(e.id, "")
        elif e.role == "checkbox":
            value = "on" if (latent.get("filter") or "instock" in state.flags) else "off"
        nodes.append(Node(e.id, e.role, label, value))
    if page == "item" and latent.get("item"):
        nodes.insert(0, Node(f"{spec.prefix}-title", "heading", latent["item"]))
    elif page == "cart":
        nodes.extend(Node(f"{spec.prefix}-line{i}", "text", name) for i, name in enumerate(latent["cart"]))
    elif page == "done":
        nodes.insert(0, Node(f"{spec.prefix}-thanks", "heading", "Order placed"))
    elif page == "repo" and latent.get("repo"):
        nodes.insert(0, Node(f"{spec.prefix}-title", "heading", latent["repo"]))
        if latent["repo"] in latent.get("starred", []):
            nodes.append(Node(f"{spec.prefix}-starred", "text", "Starred"))
    elif page == "issue" and latent.get("issue"):
        nodes.insert(0, Node(f"{spec.prefix}-title", "heading", latent["issue"]))
        nodes.extend(
            Node(f"{spec.prefix}-tag{i}", "text", lbl)
            for i, (title, lbl) in enumerate(latent["labels"])
            if title == latent["issue"]
        )
    return Observation(spec.site, page, tuple(nodes), state.events, len(state.tabs), state.active)


# ----------------------------------------------------------------- transitions


def _results(state: SiteState, query: str) -> list[str]:
    q = query.lower()
    if state.spec.category == "shopping":
        rows = [c for c in state.spec.catalog if q in c["name"].lower()]
        if state.latent.get("filter"):
            rows = [c for c in rows if c["in_stock"]]
        return [c["name"] for c in rows][:RESULT_SLOTS]
    return [r for r in state.latent["repos"] if q in r.lower()][:RESULT_SLOTS]


def _fx_focus(s: SiteState, rule: Rule, events: list[str]) -> bool:
    s.focus = rule.target
    return True


def _fx_reveal(s: SiteState, rule: Rule, events: list[str], flag: str, elem: str) -> bool:
    s.flags.add(flag)
    s.focus = elem
    return True


def _fx_flag(s: SiteState, rule: Rule, events: list[str], name: str) -> bool:
    s.flags.add(name)
    return True


def _fx_unflag(s: SiteState, rule: Rule, events: list[str], name: str) -> bool:
    s.flags.discard(name)
    return True


def _fx_require(s: SiteState, rule: Rule, events: list[str], name: str) -> bool:
    if name == "searched":
        return bool(s.latent["queries"])
    return name in s.flags


def _fx_search(s: SiteState, rule: Rule, events: list[str], box: str) -> bool:
    query = s.fields.get(box, "").strip()
    if not query:
        return False
    s.latent["queries"].append(query)
    s.latent["filter"] = False
    s.latent["results"] = _results(s, query)
    events.append("search")
    return True


def _fx_search_repo(s: SiteState, rule: Rule, events: list[str], box: str) -> bool:
    query = s.fields.get(box, "").strip()
    if not query:
        return False
    s.latent["queries"].append(query)
    s.latent["results"] = _results(s, query)
    events.append("search_repo")
    return True


def _fx_open(s: SiteState, rule: Rule, events: list[str], index: int) -> bool:
    results = s.latent["results"]
    if index >= len(results):
        return False
    if s.spec.category == "shopping":
        s.latent["item"] = results[index]
    else:
        s.latent["repo"] = results[index]
    return True


def _fx_cart_add(s: SiteState, rule: Rule, events: list[str]) -> bool:
    if not s.latent.get("item"):
        return False
    s.latent["cart"].append(s.latent["item"])
    events.append("add_to_cart")
    return True


def _fx_wish(s: SiteState, rule: Rule, events: list[str]) -> bool:
    if not s.latent.get("item"):
        return False
    s.latent["wishlist"].append(s.latent["item"])
    events.append("add_to_wishlist")
    return True


def _fx_filter(s: SiteState, rule: Rule, events: list[str]) -> bool:
    if not s.latent["queries"]:
        return False
    s.latent["filter"] = True
    s.latent["results"] = _results(s, s.latent["queries"][-1])
    s.flags.discard("instock")
    events.append("apply_filter")
    return True


def _fx_require_cart(s: SiteState, rule: Rule, events: list[str]) -> bool:
    return bool(s.latent["cart"])


def _fx_order(s: SiteState, rule: Rule, events: list[str]) -> bool:
    if not s.latent["cart"]:
        return False
    s.latent["orders"].append(list(s.latent["cart"]))
    s.latent["cart"] = []
    events.append("checkout")
    return True


def _fx_create_repo(s: SiteState, rule: Rule, events: list[str], box: str) -> bool:
    name = s.fields.get(box, "").strip()
    if not name or name in s.latent["repos"]:
        return False
    s.latent["repos"].append(name)
    s.latent["created"].append(name)
    s.latent["repo"] = name
    events.append("create_repo")
    return True


def _fx_require_repo(s: SiteState, rule: Rule, events: list[str]) -> bool:
    return bool(s.latent.get("repo"))


def _fx_star(s: SiteState, rule: Rule, events: list[str]) -> bool:
    repo = s.latent.get("repo")
    if not repo or repo in s.latent["starred"]:
        return False
    s.latent["starred"].append(repo)
    s.flags.discard("menu_open")
    events.append("star_repo")
    return True


def _fx_create_issue(s: SiteState, rule: Rule, events: list[str], box: str) -> bool:
    title = s.fields.get(box, "").strip()
    repo = s.latent.get("repo")
    if not title or not repo:
        return False
    s.latent["issues"].append([repo, title])
    s.latent["issue"] = title
    events.append("create_issue")
    return True


def _fx_label(s: SiteState, rule: Rule, events: list[str], box: str) -> bool:
    label = s.fields.get(box, "").strip()
    issue = s.latent.get("issue")
    if not label or not issue:
        return False
    s.latent["labels"].append([issue, label])
    s.fields[box] = ""
    events.append("label_issue")
    return True


EFFECTS: dict[str, Callable[..., bool]] = {
    "focus": _fx_focus,
    "reveal": _fx_reveal,
    "flag": _fx_flag,
    "unflag": _fx_unflag,
    "require": _fx_require,
    "search": _fx_search,
    "search_repo": _fx_search_repo,
    "open": _fx_open,
    "cart_add": _fx_cart_add,
    "wish": _fx_wish,
    "filter": _fx_filter,
    "require_cart": _fx_require_cart,
    "order": _fx_order,
    "create_repo": _fx_create_repo,
    "require_repo": _fx_require_repo,
    "star": _fx_star,
    "create_issue": _fx_create_issue,
    "label": _fx_label,
}


def _clear_ui(s: SiteState) -> None:
    s.focus = None
    s.hovered = None
    s.scroll = 0
    s.fields = {}
    s.flags = set()


def _navigate(s: SiteState, page: str) -> None:
    tab = s.tabs[s.active]
    if page != tab.page:
        tab.back.append(tab.page)
        tab.fwd.clear()
        tab.page = page
    _clear_ui(s)


def _apply_rule(s: SiteState, rule: Rule, events: list[str]) -> bool:
    for name, *args in rule.effects:
        if not EFFECTS[name](s, rule, events, *args):
            return False
    if rule.goto is not None:
        _navigate(s, rule.goto)
    return True


def _check_action(action: Prim) -> tuple:
    if not isinstance(action, Prim) or action.kind not in PRIMITIVE_ARGS:
        raise MalformedAction(f"not a primitive action: {action!r}")
    roles = PRIMITIVE_ARGS[action.kind]
    if len(action.args) != len(roles):
        raise MalformedAction(f"'{action.kind}' expects {len(roles)} argument(s), got {len(action.args)}")
    if not action.ground:
        raise MalformedAction(f"unbound parameter in {format_statement(action)}")
    for arg, role in zip(action.args, roles):
        if arg.kind != role:  # type: ignore[union-attr]
            raise MalformedAction(f"'{action.kind}' expects a {role} argument, got {arg.kind}")  # type: ignore[union-attr]
    return action.values()


def _transition(s: SiteState, action: Prim, events: list[str]) -> bool:
    """Mutate ``s`` in place; False means no rule matched (a wasted step)."""
    kind = action.kind
    args = _check_action(action)
    spec = s.spec
    if kind == "noop":
        return True
    if kind == "click":
        e = _element_on_page(s, args[0])
        if e is None:
            return False
        rule = spec.rule_index.get((s.page, "click", e.id, None))
        return rule is not None and _apply_rule(s, rule, events)
    if kind == "hover":
        if _element_on_page(s, args[0]) is None:
            return False
        s.hovered = args[0]
        return True
    if kind == "type":
        e = _element_on_page(s, args[0])
        if e is None or e.role != "textbox" or s.focus != e.id:
            return False
        s.fields[e.id] = args[1]
        return True
    if kind == "press":
        if s.focus is None or _element_on_page(s, s.focus) is None:
            return False
        rule = spec.rule_index.get((s.page, "press", s.focus, args[0]))
        return rule is not None and _apply_rule(s, rule, events)
    if kind == "scroll":
        if args[0] == "down" and s.scroll < MAX_SCROLL:
            s.scroll += 1
            return True
        if args[0] == "up" and s.scroll > 0:
            s.scroll -= 1
            return True
        return False
    if kind == "tab_focus":
        if not 0 <= args[0] < len(s.tabs) or args[0] == s.active:
            return False
        s.active = args[0]
        _clear_ui(s)
        return True
    if kind == "new_tab":
        s.tabs.append(Tab(spec.home))
        s.active = len(s.tabs) - 1
        _clear_ui(s)
        return True
    if kind == "tab_close":
        if len(s.tabs) == 1:
            return False
        s.tabs.pop(s.active)
        s.active = max(0, s.active - 1)
        _clear_ui(s)
        return True
    if kind == "go_back" or kind == "go_forward":
        tab = s.tabs[s.active]
        src, dst = (tab.back, tab.fwd) if kind == "go_back" else (tab.fwd, tab.back)
        if not src:
            return False
        dst.append(tab.page)
        tab.page = src.pop()
        _clear_ui(s)
        return True
    if kind == "goto":
        url = str(args[0])
        page = url.split("/", 1)[1] if url.startswith(spec.site + "/") else url
        if page not in spec.addressable:
            return False
        _navigate(s, page)
        return True
    raise MalformedAction(f"unhandled primitive '{kind}'")


def step(state: SiteState, action: Prim) -> tuple[SiteState, Observation]:
    """Apply one primitive; unmatched actions only advance the step counter."""
    _check_action(action)
    nxt = state.clone()
    events: list[str] = []
    if not _transition(nxt, action, events):
        nxt = state.clone()
        events = []
    nxt.steps = state.steps + 1
    nxt.events = tuple(events)
    return nxt, observe(nxt)


# ------------------------------------------------------------------------ tasks


@dataclass(frozen=True)
class Task:
    id: str
    site: str
    instruction: str
    predicate: str
    params: tuple[tuple[str, str], ...] = ()
    horizon: int = 15

    @property
    def args(self) -> dict[str, str]:
        return dict(self.params)

    @property
    def capability(self) -> str:
        return PREDICATE_CAPABILITY.get(self.predicate, self.predicate)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "site": self.site,
            "instruction": self.instruction,
            "predicate": self.predicate,
            "params": dict(self.params),
            "horizon": self.horizon,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Task":
        if data.get("predicate") not in PREDICATES:
            raise UnknownPredicate(f"unknown predicate {data.get('predicate')!r}")
        return cls(
            id=str(data["id"]),
            site=str(data["site"]),
            instruction=str(data.get("instruction", "")),
            predicate=data["predicate"],
            params=tuple(sorted((str(k), str(v)) for k, v in data.get("params", {}).items())),
            horizon=int(data.get("horizon", 15)),
        )


def make_task(task_id: str, spec: SiteSpec, capability: str, values: dict[str, str], horizon: int = 15) -> Task:
    fam = family(spec.category)
    predicate, template, names = fam.templates[capability]
    params = tuple(sorted((n, values[n]) for n in names))
    return Task(task_id, spec.site, template.format(**values), predicate, params, horizon)


def _clicked(spec: SiteSpec, primitives: Iterable[Prim], tag: str) -> bool:
    ids = spec.tagged(tag)
    return any(p.kind == "click" and p.args and p.args[0].value in ids for p in primitives)  # type: ignore[union-attr]


def _matches(query: str, names: Iterable[str]) -> list[str]:
    q = query.lower()
    return [n for n in names if q in n.lower()]


def _p_searched(s: SiteState, prims: list[Prim], query: str) -> tuple[bool, str]:
    hit = query.lower() in [q.lower() for q in s.latent["queries"]]
    return hit, f"queries={s.latent['queries']}"


def _p_in_cart(s: SiteState, prims: list[Prim], query: str) -> tuple[bool, str]:
    hits = _matches(query, s.latent["cart"])
    return bool(hits), f"cart={s.latent['cart']} matching={hits}"


def _p_ordered(s: SiteState, prims: list[Prim], query: str) -> tuple[bool, str]:
    hits = [o for o in s.latent["orders"] if _matches(query, o)]
    return bool(hits), f"orders={s.latent['orders']}"


def _p_filtered(s: SiteState, prims: list[Prim], query: str) -> tuple[bool, str]:
    searched, _ = _p_searched(s, prims, query)
    used = _clicked(s.spec, prims, "filter")
    ok = searched and bool(s.latent["filter"]) and used
    return ok, f"searched={searched} filter_on={s.latent['filter']} filter_clicked={used}"


def _p_wishlisted(s: SiteState, prims: list[Prim], query: str) -> tuple[bool, str]:
    hits = _matches(query, s.latent["wishlist"])
    return bool(hits), f"wishlist={s.latent['wishlist']}"


def _p_repo_searched(s: SiteState, prims: list[Prim], query: str) -> tuple[bool, str]:
    return _p_searched(s, prims, query)


def _p_starred(s: SiteState, prims: list[Prim], query: str) -> tuple[bool, str]:
    hits = _matches(query, s.latent["starred"])
    return bool(hits), f"starred={s.latent['starred']}"


def _p_repo_exists(s: SiteState, prims: list[Prim], name: str) -> tuple[bool, str]:
    return name in s.latent["created"], f"created={s.latent['created']}"


def _p_issue_exists(s: SiteState, prims: list[Prim], name: str, title: str) -> tuple[bool, str]:
    ok = name in s.latent["created"] and [name, title] in s.latent["issues"]
    return ok, f"issues={s.latent['issues']}"


def _p_issue_labeled(s: SiteState, prims: list[Prim], name: str, title: str, label: str) -> tuple[bool, str]:
    exists, _ = _p_issue_exists(s, prims, name, title)
    ok = exists and [title, label] in s.latent["labels"]
    return ok, f"issues={s.latent['issues']} labels={s.latent['labels']}"


PREDICATES: dict[str, tuple[Callable[..., tuple[bool, str]], tuple[str, ...]]] = {
    "searched": (_p_searched, ("query",)),
    "in_cart": (_p_in_cart, ("query",)),
    "ordered": (_p_ordered, ("query",)),
    "filtered": (_p_filtered, ("query",)),
    "wishlisted": (_p_wishlisted, ("query",)),
    "repo_searched": (_p_repo_searched, ("query",)),
    "starred": (_p_starred, ("query",)),
    "repo_exists": (_p_repo_exists, ("name",)),
    "issue_exists": (_p_issue_exists, ("name", "title")),
    "issue_labeled": (_p_issue_labeled, ("name", "title", "label")),
}
PREDICATE_CAPABILITY = {
    pred: cap for fam in FAMILIES.values() for cap, (pred, _, _) in fam.templates.items()
}


def _primitives_of(traj: Any) -> list[Prim]:
    if traj is None:
        return []
    if hasattr(traj, "primitive_actions"):
        return list(traj.primitive_actions())
    return list(traj)


def evaluate(task: Task, final: SiteState, traj: Any = None) -> tuple[bool, str]:
    """Predicate verdict plus a human-readable trace of what it inspected."""
    try:
        fn, names = PREDICATES[task.predicate]
    except KeyError:
        raise UnknownPredicate(task.predicate) from None
    if final.spec.site != task.site:
        return False, f"state belongs to {final.spec.site}, task to {task.site}"
    args = task.args
    return fn(final, _primitives_of(traj), *[args[n] for n in names])


def check_success(task: Task, final: SiteState, traj: Any = None) -> bool:
    return evaluate(task, final, traj)[0]


def reset(spec: SiteSpec, task: Task) -> tuple[SiteState, Observation]:
    if task.site != spec.site:
        raise SiteTaskMismatch(f"task {task.id} targets {task.site}, spec is {spec.site}")
    state = initial_state(spec)
    return state, observe(state)


# --------------------------------------------------------------- witness search


def _candidate_actions(state: SiteState, texts: tuple[str, ...]) -> list[Prim]:
    out: list[Prim] = []
    for e in state.spec.pages.get(state.page, ()):
        if not _visible(state, e):
            continue
        out.append(Prim("click", (Lit(e.id, "selector"),)))
        if e.role == "textbox" and state.focus == e.id:
            out.extend(Prim("type", (Lit(e.id, "selector"), Lit(t, "text"))) for t in texts)
    if state.focus is not None:
        out.append(Prim("press", (Lit("Enter", "text"),)))
    return out


def bfs_witness(
    spec: SiteSpec,
    goal: Callable[[SiteState, list[Prim]], bool],
    texts: tuple[str, ...],
    max_depth: int = 14,
) -> tuple[Prim, ...] | None:
    """Shortest primitive sequence from the home page satisfying ``goal``."""
    start = initial_state(spec)
    if goal(start, []):
        return ()
    frontier: deque[tuple[SiteState, tuple[Prim, ...]]] = deque([(start, ())])
    seen = {digest(start.snapshot(with_steps=False))}
    while frontier:
        state, path = frontier.popleft()
        if len(path) >= max_depth:
            continue
        for action in _candidate_actions(state, texts):
            nxt = state.clone()
            if not _transition(nxt, action, []):
                continue
            key = digest(nxt.snapshot(with_steps=False))
            if key in seen:
                continue
            seen.add(key)
            new_path = path + (action,)
            if goal(nxt, list(new_path)):
                return new_path
            frontier.append((nxt, new_path))
    return None


_CAPABILITY_GOALS: dict[str, Callable[[SiteState], bool]] = {
    "search": lambda s: bool(s.latent["queries"]),
    "open_item": lambda s: bool(s.latent.get("item")),
    "add_to_cart": lambda s: bool(s.latent["cart"]),
    "checkout": lambda s: bool(s.latent["orders"]),
    "filter": lambda s: bool(s.latent["filter"]),
    "wishlist": lambda s: bool(s.latent["wishlist"]),
    "search_repo": lambda s: bool(s.latent["queries"]),
    "open_repo": lambda s: bool(s.latent.get("repo")),
    "star_repo": lambda s: bool(s.latent["starred"]),
    "create_repo": lambda s: bool(s.latent["created"]),
    "create_issue": lambda s: bool(s.latent["issues"]),
    "label_issue": lambda s: bool(s.latent["labels"]),
}


def _probe_texts(spec: SiteSpec) -> tuple[str, ...]:
    if spec.category == "shopping":
        return (keyword(spec.featured[0]),)
    fam = family(spec.category)
    return (keyword(spec.featured[0]), fam.vocab["new_repos"][0], fam.vocab["titles"][0], fam.vocab["labels"][0])


def capability_witness(spec: SiteSpec, capability: str) -> tuple[Prim, ...] | None:
    goal = _CAPABILITY_GOALS[capability]
    return bfs_witness(spec, lambda s, _p: goal(s), _probe_texts(spec))


_WITNESS_CACHE: dict[tuple[str, str, tuple], tuple[Prim, ...] | None] = {}


def task_witness(spec: SiteSpec, task: Task, max_depth: int = 14) -> tuple[Prim, ...] | None:
    """Shortest primitive solution for ``task`` (memoised per site fingerprint)."""
    key = (spec.fingerprint, task.predicate, task.params)
    if key not in _WITNESS_CACHE:
        texts = tuple(v for _, v in task.params)
        _WITNESS_CACHE[key] = bfs_witness(
            spec, lambda s, path: evaluate(task, s, path)[0], texts, max_depth
        )
    return _WITNESS_CACHE[key]


def parse_witness(lines: Iterable[str]) -> tuple[Prim, ...]:
    out = []
    for line in lines:
        stmt = parse_statement(line)
        assert isinstance(stmt, Prim)
        out.append(stmt)
    return tuple(out)


# ------------------------------------------------------------------ task suites


def _task_values(spec: SiteSpec, capability: str, rng: random.Random) -> dict[str, str]:
    fam = family(spec.category)
    if spec.category == "shopping":
        return {"query": keyword(rng.choice([c["name"] for c in spec.catalog]))}
    if capability in ("search_repo", "star_repo"):
        return {"query": keyword(rng.choice([c["name"] for c in spec.catalog]))}
    return {
        "name": rng.choice(fam.vocab["new_repos"]),
        "title": rng.choice(fam.vocab["titles"]),
        "label": rng.choice(fam.vocab["labels"]),
    }


def generate_tasks(
    spec: SiteSpec,
    n: int,
    seed: int,
    capabilities: Iterable[str] | None = None,
    prefix: str | None = None,
    horizon: int = 15,
) -> list[Task]:
    """``n`` tasks cycling through ``capabilities`` (default: every signature)."""
    fam = family(spec.category)
    caps = list(capabilities) if capabilities is not None else [s.name for s in fam.signatures]
    rng = random.Random(f"tasks:{spec.site}:{seed}")
    prefix = prefix or spec.site
    tasks = []
    for i in range(n):
        cap = caps[i % len(caps)]
        tasks.append(make_task(f"{prefix}-{i:03d}", spec, cap, _task_values(spec, cap, rng), horizon))
    return tasks


def suite_to_json(tasks: Iterable[Task]) -> dict:
    return {"schema": SUITE_SCHEMA, "tasks": [t.to_json() for t in tasks]}


def suite_from_json(data: dict | list) -> list[Task]:
    if isinstance(data, list):
        rows = data
    else:
        if data.get("schema") not in (None, SUITE_SCHEMA):
            raise SimError(f"unsupported task-suite schema {data.get('schema')!r}")
        rows = data["tasks"]
    return [Task.from_json(r) for r in rows]
