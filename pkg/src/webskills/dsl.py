"""Skill body language: AST, parser, pretty-printer and step counting.

A ``.skill`` file holds either one category interface or one site
implementation.  Grammar (EBNF)::

    file            = interface | implementation ;
    interface       = "interface" IDENT "category" IDENT "{" { iface_member } "}" ;
    iface_member    = abstract_decl | default_decl ;
    abstract_decl   = "abstract" IDENT "(" [ params ] ")" [ STRING ] terminator ;
    default_decl    = { annotation } "default" "skill" IDENT "(" [ params ] ")" block ;
    implementation  = "implementation" IDENT "for" IDENT "site" IDENT { annotation }
                      "{" { skill_decl } "}" ;
    skill_decl      = { annotation } "skill" IDENT "(" [ params ] ")" block ;
    annotation      = "@" IDENT "(" ( WORD | INT ) ")" ;   (* WORD = IDENT { "-" IDENT } *)
    params          = param { "," param } ;
    param           = IDENT [ ":" ( "text" | "integer" | "selector" ) ] ;
    block           = "{" { statement terminator } "}" ;
    statement       = "call" IDENT "(" [ args ] ")" | "stop" | PRIM [ "(" [ args ] ")" ] ;
    args            = expr { "," expr } ;
    expr            = STRING | INT | SELECTOR | IDENT ;
    terminator      = ";" | NEWLINE ;

Selectors are written ``#element-id``; comments start with ``//``.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Union

PARAM_KINDS = ("text", "integer", "selector")

# argument roles per primitive kind; the tuple length is the fixed arity
PRIMITIVE_ARGS: dict[str, tuple[str, ...]] = {
    "noop": (),
    "click": ("selector",),
    "hover": ("selector",),
    "type": ("selector", "text"),
    "press": ("text",),
    "scroll": ("text",),
    "tab_focus": ("integer",),
    "new_tab": (),
    "tab_close": (),
    "go_back": (),
    "go_forward": (),
    "goto": ("text",),
}
PRIMITIVES = tuple(PRIMITIVE_ARGS)


class DSLError(Exception):
    """Base class for skill-language diagnostics."""

    def __init__(self, message: str, line: int = 0, col: int = 0, file: str = "<skill>") -> None:
        self.message = message
        self.line = line
        self.col = col
        self.file = file
        super().__init__(self.diagnostic())

    def diagnostic(self) -> str:
        return f"{self.file}:{self.line}:{self.col}: {self.message}"


class DSLSyntaxError(DSLError):
    def __init__(self, expected: str, got: str, line: int = 0, col: int = 0, file: str = "<skill>") -> None:
        self.expected = expected
        self.got = got
        super().__init__(f"expected {expected}, got {got}", line, col, file)


class UnknownPrimitive(DSLError):
    def __init__(self, name: str, line: int = 0, col: int = 0, file: str = "<skill>") -> None:
        self.name = name
        super().__init__(f"unknown primitive action '{name}'", line, col, file)


class ArityError(DSLError):
    pass


class UnboundParam(DSLError):
    pass


# --------------------------------------------------------------------------- AST


@dataclass(frozen=True)
class Lit:
    value: Union[str, int]
    kind: str  # text | integer | selector


@dataclass(frozen=True)
class Ref:
    name: str


Expr = Union[Lit, Ref]


@dataclass(frozen=True)
class Prim:
    kind: str
    args: tuple[Expr, ...] = ()

    @property
    def ground(self) -> bool:
        return all(isinstance(a, Lit) for a in self.args)

    def values(self) -> tuple:
        return tuple(a.value for a in self.args)  # type: ignore[union-attr]


@dataclass(frozen=True)
class Call:
    target: str
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class Stop:
    pass


Statement = Union[Prim, Call, Stop]
PrimitiveAction = Prim


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str = "text"


@dataclass(frozen=True)
class SkillSignature:
    name: str
    params: tuple[ParamSpec, ...] = ()
    doc: str = ""

    @property
    def arity(self) -> int:
        return len(self.params)

    def shape(self) -> tuple[str, ...]:
        return tuple(p.kind for p in self.params)


@dataclass(frozen=True)
class SkillDef:
    signature: SkillSignature
    body: tuple[Statement, ...]
    origin: str = "hand-written"  # hand-written | induced | default
    created_at: int = 0

    @property
    def name(self) -> str:
        return self.signature.name


@dataclass(frozen=True)
class CategoryInterface:
    id: str
    category: str
    abstract_signatures: tuple[SkillSignature, ...] = ()
    default_methods: tuple[SkillDef, ...] = ()

    def signature(self, name: str) -> SkillSignature | None:
        for sig in self.abstract_signatures:
            if sig.name == name:
                return sig
        return None

    def default(self, name: str) -> SkillDef | None:
        for d in self.default_methods:
            if d.name == name:
                return d
        return None

    def declares(self, name: str) -> bool:
        return self.signature(name) is not None or self.default(name) is not None


@dataclass(frozen=True)
class SiteImplementation:
    id: str
    implements: str
    site: str
    methods: dict[str, SkillDef] = field(default_factory=dict)
    created_at: int = 0

    def __hash__(self) -> int:  # dict field; identity by value of the key parts
        return hash((self.id, self.implements, self.site, tuple(self.methods), self.created_at))


# ------------------------------------------------------------------ source text


@dataclass(frozen=True)
class SourceText:
    text: str
    name: str = "<skill>"

    @classmethod
    def of(cls, raw: str | bytes, name: str = "<skill>") -> "SourceText":
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        raw = raw.replace("\r\n", "\n").replace("\r", "\n")
        if raw.startswith("\ufeff"):
            raw = raw[1:]
        return cls(unicodedata.normalize("NFC", raw), name)


# ----------------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<comment>//[^\n]*)
  | (?P<nl>\n)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<selector>\#[A-Za-z0-9_][A-Za-z0-9_\-]*)
  | (?P<int>-?[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[(){},;:@.\-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # string selector int ident punct nl eof
    text: str
    line: int
    col: int


def _unescape(body: str) -> str:
    return re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t", "r": "\r"}.get(m.group(1), m.group(1)), body)


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r")


def tokenize(src: SourceText) -> list[Token]:
    tokens: list[Token] = []
    text = src.text
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise DSLSyntaxError("token", repr(text[pos]), line, col, src.name)
        kind = m.lastgroup or ""
        if kind == "nl":
            tokens.append(Token("nl", "\n", line, col))
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------------- parser


class _Parser:
    def __init__(self, src: SourceText) -> None:
        self.src = src
        self.tokens = tokenize(src)
        self.pos = 0

    # token helpers
    def peek(self, skip_nl: bool = True) -> Token:
        i = self.pos
        while skip_nl and self.tokens[i].kind == "nl":
            i += 1
        return self.tokens[i]

    def next(self, skip_nl: bool = True) -> Token:
        if skip_nl:
            self.skip_newlines()
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def skip_newlines(self) -> None:
        while self.tokens[self.pos].kind == "nl":
            self.pos += 1

    def fail(self, expected: str, tok: Token) -> DSLSyntaxError:
        got = "end of input" if tok.kind == "eof" else repr(tok.text)
        return DSLSyntaxError(expected, got, tok.line, tok.col, self.src.name)

    def expect(self, text: str, skip_nl: bool = True) -> Token:
        tok = self.next(skip_nl)
        if tok.text != text or tok.kind not in ("punct", "ident"):
            raise self.fail(repr(text), tok)
        return tok

    def ident(self, what: str = "identifier") -> Token:
        tok = self.next()
        if tok.kind != "ident":
            raise self.fail(what, tok)
        return tok

    # grammar
    def parse_file(self) -> CategoryInterface | SiteImplementation:
        tok = self.peek()
        if tok.kind == "ident" and tok.text == "interface":
            result: CategoryInterface | SiteImplementation = self.parse_interface()
        elif tok.kind == "ident" and tok.text == "implementation":
            result = self.parse_implementation()
        else:
            raise self.fail("'interface' or 'implementation'", tok)
        end = self.next()
        if end.kind != "eof":
            raise self.fail("end of input", end)
        return result

    def parse_annotations(self) -> dict[str, str | int]:
        notes: dict[str, str | int] = {}
        while self.peek().text == "@" and self.peek().kind == "punct":
            self.next()
            name = self.ident("annotation name").text
            self.expect("(")
            tok = self.next()
            if tok.kind == "int":
                notes[name] = int(tok.text)
            elif tok.kind == "ident":
                value = tok.text
                # hyphenated words such as hand-written
                while self.peek(False).text == "-" and self.tokens[self.pos + 1].kind == "ident":
                    self.next(False)
                    value += "-" + self.next(False).text
                notes[name] = value
            else:
                raise self.fail("annotation value", tok)
            self.expect(")")
        return notes

    def parse_interface(self) -> CategoryInterface:
        self.expect("interface")
        iface_id = self.ident("interface name").text
        self.expect("category")
        category = self.ident("category label").text
        self.expect("{")
        sigs: list[SkillSignature] = []
        defaults: list[SkillDef] = []
        while True:
            tok = self.peek()
            if tok.text == "}" and tok.kind == "punct":
                self.next()
                break
            if tok.kind == "ident" and tok.text == "abstract":
                self.next()
                name = self.ident("signature name").text
                params = self.parse_params()
                doc = ""
                if self.peek(skip_nl=False).kind == "string":
                    doc = _unescape(self.next(skip_nl=False).text[1:-1])
                self.terminator()
                sigs.append(SkillSignature(name, params, doc))
                continue
            notes = self.parse_annotations()
            tok = self.peek()
            if tok.kind == "ident" and tok.text == "default":
                self.next()
                self.expect("skill")
                name = self.ident("skill name").text
                params = self.parse_params()
                body = self.parse_block()
                defaults.append(
                    SkillDef(
                        SkillSignature(name, params),
                        body,
                        origin=str(notes.get("origin", "default")),
                        created_at=int(notes.get("step", 0)),
                    )
                )
                continue
            raise self.fail("'abstract', 'default' or '}'", tok)
        return CategoryInterface(iface_id, category, tuple(sigs), tuple(defaults))

    def parse_implementation(self) -> SiteImplementation:
        self.expect("implementation")
        impl_id = self.ident("implementation name").text
        self.expect("for")
        iface_id = self.ident("interface name").text
        self.expect("site")
        site_tok = self.next()
        if site_tok.kind not in ("ident", "string"):
            raise self.fail("site identifier", site_tok)
        site = site_tok.text if site_tok.kind == "ident" else _unescape(site_tok.text[1:-1])
        notes = self.parse_annotations()
        self.expect("{")
        methods: dict[str, SkillDef] = {}
        while True:
            if self.peek().text == "}" and self.peek().kind == "punct":
                self.next()
                break
            m_notes = self.parse_annotations()
            self.expect("skill")
            name_tok = self.ident("skill name")
            params = self.parse_params()
            body = self.parse_block()
            if name_tok.text in methods:
                raise DSLSyntaxError("unique method name", repr(name_tok.text), name_tok.line, name_tok.col, self.src.name)
            methods[name_tok.text] = SkillDef(
                SkillSignature(name_tok.text, params),
                body,
                origin=str(m_notes.get("origin", "hand-written")),
                created_at=int(m_notes.get("step", 0)),
            )
        return SiteImplementation(impl_id, iface_id, site, methods, int(notes.get("step", 0)))

    def parse_params(self) -> tuple[ParamSpec, ...]:
        self.expect("(")
        params: list[ParamSpec] = []
        if self.peek().text == ")":
            self.next()
            return ()
        while True:
            name = self.ident("parameter name").text
            kind = "text"
            if self.peek().text == ":":
                self.next()
                ktok = self.ident("parameter kind")
                if ktok.text not in PARAM_KINDS:
                    raise self.fail("one of text, integer, selector", ktok)
                kind = ktok.text
            params.append(ParamSpec(name, kind))
            tok = self.next()
            if tok.text == ")":
                return tuple(params)
            if tok.text != ",":
                raise self.fail("',' or ')'", tok)

    def terminator(self) -> None:
        tok = self.peek(skip_nl=False)
        if tok.kind == "nl" or (tok.kind == "punct" and tok.text == ";"):
            self.next(skip_nl=False)
            return
        if tok.kind == "punct" and tok.text == "}":
            return
        raise self.fail("';' or newline", tok)

    def parse_block(self) -> tuple[Statement, ...]:
        self.expect("{")
        body: list[Statement] = []
        while True:
            tok = self.peek()
            if tok.kind == "punct" and tok.text == "}":
                self.next()
                return tuple(body)
            if tok.kind == "punct" and tok.text == ";":
                self.next()
                continue
            body.append(self.parse_statement())
            self.terminator()

    def parse_statement(self) -> Statement:
        tok = self.next()
        if tok.kind != "ident":
            raise self.fail("statement", tok)
        if tok.text.lower() == "call":
            target = self.ident("skill name").text
            # optional Interface.method qualification
            if self.peek(skip_nl=False).text == "." and self.peek(skip_nl=False).kind == "punct":
                self.next(skip_nl=False)
                target = f"{target}.{self.ident('skill name').text}"
            return Call(target, self.parse_args())
        if tok.text == "stop":
            return Stop()
        if tok.text not in PRIMITIVE_ARGS:
            raise UnknownPrimitive(tok.text, tok.line, tok.col, self.src.name)
        roles = PRIMITIVE_ARGS[tok.text]
        args: tuple[Expr, ...] = ()
        if self.peek(skip_nl=False).text == "(":
            args = self.parse_args()
        if len(args) != len(roles):
            raise ArityError(
                f"'{tok.text}' takes {len(roles)} argument(s), got {len(args)}",
                tok.line,
                tok.col,
                self.src.name,
            )
        for arg, role in zip(args, roles):
            if isinstance(arg, Lit) and arg.kind != role:
                raise DSLSyntaxError(f"{role} argument to '{tok.text}'", f"{arg.kind} literal", tok.line, tok.col, self.src.name)
        return Prim(tok.text, args)

    def parse_args(self) -> tuple[Expr, ...]:
        self.expect("(", skip_nl=False)
        if self.peek().text == ")" and self.peek().kind == "punct":
            self.next()
            return ()
        args: list[Expr] = []
        while True:
            args.append(self.parse_expr())
            tok = self.next()
            if tok.text == ")" and tok.kind == "punct":
                return tuple(args)
            if tok.text != "," or tok.kind != "punct":
                raise self.fail("',' or ')'", tok)

    def parse_expr(self) -> Expr:
        tok = self.next()
        if tok.kind == "string":
            return Lit(_unescape(tok.text[1:-1]), "text")
        if tok.kind == "int":
            return Lit(int(tok.text), "integer")
        if tok.kind == "selector":
            return Lit(tok.text[1:], "selector")
        if tok.kind == "ident":
            return Ref(tok.text)
        raise self.fail("expression", tok)


def parse_skill_file(src: SourceText | str) -> CategoryInterface | SiteImplementation:
    """Parse one ``.skill`` file into an interface or an implementation."""
    if isinstance(src, str):
        src = SourceText.of(src)
    return _Parser(src).parse_file()


def parse_statement(text: str) -> Statement:
    """Parse a single statement, e.g. ``click(#q)`` or ``CALL search("mug")``."""
    p = _Parser(SourceText.of(text.strip(), "<statement>"))
    stmt = p.parse_statement()
    end = p.next()
    if end.kind != "eof" and end.text != ";":
        raise p.fail("end of statement", end)
    return stmt


def parse_statements(text: str) -> tuple[Statement, ...]:
    p = _Parser(SourceText.of("{" + text + "\n}", "<statements>"))
    return p.parse_block()


# ---------------------------------------------------------------------- printer


def format_expr(e: Expr) -> str:
    if isinstance(e, Ref):
        return e.name
    if e.kind == "selector":
        return f"#{e.value}"
    if e.kind == "integer":
        return str(e.value)
    return f'"{_escape(str(e.value))}"'


def format_statement(stmt: Statement) -> str:
    if isinstance(stmt, Stop):
        return "stop"
    args = ", ".join(format_expr(a) for a in stmt.args)
    if isinstance(stmt, Call):
        return f"call {stmt.target}({args})"
    if not stmt.args and not PRIMITIVE_ARGS.get(stmt.kind):
        return stmt.kind
    return f"{stmt.kind}({args})"


def _format_params(params: Iterable[ParamSpec]) -> str:
    return ", ".join(f"{p.name}: {p.kind}" for p in params)


def _format_body(body: Iterable[Statement], indent: str) -> list[str]:
    return [f"{indent}{format_statement(s)}" for s in body]


def format_skill_file(node: CategoryInterface | SiteImplementation) -> str:
    lines: list[str] = []
    if isinstance(node, CategoryInterface):
        lines.append(f"interface {node.id} category {node.category} {{")
        for sig in node.abstract_signatures:
            doc = f' "{_escape(sig.doc)}"' if sig.doc else ""
            lines.append(f"  abstract {sig.name}({_format_params(sig.params)}){doc};")
        for d in node.default_methods:
            lines.append(f"  @origin({d.origin}) @step({d.created_at})")
            lines.append(f"  default skill {d.name}({_format_params(d.signature.params)}) {{")
            lines.extend(_format_body(d.body, "    "))
            lines.append("  }")
        lines.append("}")
    else:
        lines.append(f"implementation {node.id} for {node.implements} site {node.site} @step({node.created_at}) {{")
        for m in node.methods.values():
            lines.append(f"  @origin({m.origin}) @step({m.created_at})")
            lines.append(f"  skill {m.name}({_format_params(m.signature.params)}) {{")
            lines.extend(_format_body(m.body, "    "))
            lines.append("  }")
        lines.append("}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ accounting


def count_steps(statements: Iterable[Statement]) -> int:
    """Number of recorded statements; a skill call counts once however long it expands."""
    return sum(1 for _ in statements)


def substitute(expr: Expr, bindings: dict[str, Lit]) -> Lit:
    if isinstance(expr, Lit):
        return expr
    try:
        return bindings[expr.name]
    except KeyError:
        raise UnboundParam(f"parameter '{expr.name}' is not bound") from None


def free_variables(body: Iterable[Statement]) -> set[str]:
    names: set[str] = set()
    for stmt in body:
        if isinstance(stmt, (Prim, Call)):
            names.update(a.name for a in stmt.args if isinstance(a, Ref))
    return names


def call_targets(body: Iterable[Statement]) -> list[str]:
    return [s.target for s in body if isinstance(s, Call)]
