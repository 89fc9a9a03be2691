"""Parenthesized scene-description language: parser and anchor resolution.

Grammar (UTF-8, ``;`` comments to end of line)::

    document   := node
    node       := "(" kind [name] { attr } { node } ")"
    kind       := identifier            ; one of the KINDS below
    name       := string-literal
    attr       := key "=" value
    value      := number | string-literal | vector | anchor-ref
    vector     := "[" number { "," number } "]"
    anchor-ref := vector "+" identifier "." identifier

Attribute keys ``pos``, ``quat`` and ``size`` populate the typed node fields;
a key of the form ``anchor_<name>`` declares a named position anchor on the
node; every other key is preserved verbatim and passed through to the
emitted XML. Anchor references (``pos=[..] + table.surface_origin``) are
only meaningful on ``pos`` and are resolved by :func:`resolve`, which adds
the world position of the referenced anchor (translations accumulated down
the tree; parent orientation is deliberately not applied).
"""

from __future__ import annotations

from dataclasses import dataclass, field

KINDS = ("scene", "body", "box", "mesh", "site", "camera", "light", "include")

# node kinds that may contain child nodes
_CONTAINER_KINDS = ("scene", "body")


class SceneError(Exception):
    pass


class DslSyntaxError(SceneError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class DuplicateNameError(SceneError):
    pass


class UnknownKindError(SceneError):
    pass


class UnknownAnchorError(SceneError):
    pass


class CyclicAnchorError(SceneError):
    pass


@dataclass
class SceneNode:
    kind: str
    name: str | None = None
    pos: tuple[float, float, float] = (0.0, 0.0, 0.0)
    quat: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    size: tuple[float, ...] = ()
    attrs: dict[str, str] = field(default_factory=dict)
    anchors: dict[str, tuple[float, float, float]] = field(default_factory=dict)
    # unresolved reference: pos is an offset from (node, anchor)'s world position
    pos_anchor: tuple[str, str] | None = None
    children: list["SceneNode"] = field(default_factory=list)

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()


@dataclass
class SceneDoc:
    root: SceneNode

    def walk(self):
        return self.root.walk()

    def node(self, name: str) -> SceneNode:
        for n in self.walk():
            if n.name == name:
                return n
        raise KeyError(name)


# ---------------------------------------------------------------------------
# tokenizer
# ---------------------------------------------------------------------------

_PUNCT = "()[]=,+."


@dataclass
class _Token:
    kind: str  # punct char, "ident", "number", "string"
    value: str | float
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    toks: list[_Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c in " \t\r":
            i, col = i + 1, col + 1
            continue
        if c == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c in _PUNCT:
            toks.append(_Token(c, c, line, col))
            i, col = i + 1, col + 1
            continue
        if c == '"':
            start_line, start_col = line, col
            i, col = i + 1, col + 1
            buf = []
            while i < n and text[i] != '"':
                if text[i] == "\\" and i + 1 < n and text[i + 1] in '\\"':
                    buf.append(text[i + 1])
                    i, col = i + 2, col + 2
                    continue
                if text[i] == "\n":
                    raise DslSyntaxError("unterminated string", start_line, start_col)
                buf.append(text[i])
                i, col = i + 1, col + 1
            if i >= n:
                raise DslSyntaxError("unterminated string", start_line, start_col)
            i, col = i + 1, col + 1
            toks.append(_Token("string", "".join(buf), start_line, start_col))
            continue
        if c.isdigit() or c == "-" or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            start_line, start_col = line, col
            j = i
            if text[j] == "-":
                j += 1
            while j < n and (text[j].isdigit() or text[j] in ".eE" or (text[j] in "+-" and text[j - 1] in "eE")):
                j += 1
            raw = text[i:j]
            try:
                val = float(raw)
            except ValueError:
                raise DslSyntaxError(f"bad number {raw!r}", start_line, start_col) from None
            toks.append(_Token("number", val, start_line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            start_line, start_col = line, col
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Token("ident", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        raise DslSyntaxError(f"unexpected character {c!r}", line, col)
    toks.append(_Token("eof", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.names: set[str] = set()

    def peek(self, ahead: int = 0) -> _Token:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> _Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind: str) -> _Token:
        t = self.next()
        if t.kind != kind:
            raise DslSyntaxError(f"expected {kind!r}, got {t.value!r}", t.line, t.col)
        return t

    def parse_document(self) -> SceneDoc:
        root = self.parse_node()
        t = self.peek()
        if t.kind != "eof":
            raise DslSyntaxError("trailing content after document root", t.line, t.col)
        return SceneDoc(root=root)

    def parse_node(self) -> SceneNode:
        self.expect("(")
        kt = self.next()
        if kt.kind != "ident":
            raise DslSyntaxError(f"expected node kind, got {kt.value!r}", kt.line, kt.col)
        kind = str(kt.value)
        if kind not in KINDS:
            raise UnknownKindError(f"{kt.line}:{kt.col}: unknown node kind {kind!r}")
        node = SceneNode(kind=kind)
        if self.peek().kind == "string":
            name = str(self.next().value)
            if name in self.names:
                raise DuplicateNameError(f"duplicate node name {name!r}")
            self.names.add(name)
            node.name = name
        while True:
            t = self.peek()
            if t.kind == ")":
                self.next()
                return node
            if t.kind == "(":
                node.children.append(self.parse_node())
                continue
            if t.kind == "ident" and self.peek(1).kind == "=":
                self._parse_attr(node)
                continue
            raise DslSyntaxError(f"expected attribute, child node or ')', got {t.value!r}", t.line, t.col)

    def _parse_attr(self, node: SceneNode):
        key_tok = self.expect("ident")
        key = str(key_tok.value)
        self.expect("=")
        t = self.peek()
        if t.kind == "number":
            self.next()
            value: object = t.value
            raw = _fmt_num(t.value)
        elif t.kind == "string":
            self.next()
            value = str(t.value)
            raw = str(t.value)
        elif t.kind == "[":
            vec, ref = self._parse_vector_or_ref()
            if ref is not None:
                if key != "pos":
                    raise DslSyntaxError("anchor references are only supported on 'pos'", t.line, t.col)
                node.pos = tuple(vec)  # offset; resolved later
                node.pos_anchor = ref
                return
            value = tuple(vec)
            raw = "[" + ", ".join(_fmt_num(v) for v in vec) + "]"
        else:
            raise DslSyntaxError(f"expected attribute value, got {t.value!r}", t.line, t.col)

        if key == "pos":
            node.pos = _require_vec(value, 3, key, t)
            node.pos_anchor = None
        elif key == "quat":
            node.quat = _require_vec(value, 4, key, t)
        elif key == "size":
            vec = value if isinstance(value, tuple) else (float(value),)
            if not 1 <= len(vec) <= 3:
                raise DslSyntaxError("size takes 1 to 3 components", t.line, t.col)
            if any(v < 0 for v in vec):
                raise DslSyntaxError("size components must be >= 0", t.line, t.col)
            node.size = tuple(float(v) for v in vec)
        elif key.startswith("anchor_") and len(key) > len("anchor_"):
            aname = key[len("anchor_"):]
            if aname in node.anchors:
                raise DslSyntaxError(f"duplicate anchor {aname!r}", key_tok.line, key_tok.col)
            node.anchors[aname] = _require_vec(value, 3, key, t)
        else:
            if key in node.attrs:
                raise DslSyntaxError(f"duplicate attribute {key!r}", key_tok.line, key_tok.col)
            node.attrs[key] = raw

    def _parse_vector_or_ref(self):
        start = self.expect("[")
        vec: list[float] = []
        if self.peek().kind != "]":
            while True:
                nt = self.next()
                if nt.kind != "number":
                    raise DslSyntaxError(f"expected number in vector, got {nt.value!r}", nt.line, nt.col)
                vec.append(float(nt.value))
                t = self.next()
                if t.kind == "]":
                    break
                if t.kind != ",":
                    raise DslSyntaxError(f"expected ',' or ']', got {t.value!r}", t.line, t.col)
        else:
            self.next()
        if not vec:
            raise DslSyntaxError("empty vector", start.line, start.col)
        if self.peek().kind == "+":
            self.next()
            node_name = self.expect("ident")
            self.expect(".")
            anchor_name = self.expect("ident")
            return vec, (str(node_name.value), str(anchor_name.value))
        return vec, None


def _fmt_num(x: float) -> str:
    return repr(float(x))


def _require_vec(value, n: int, key: str, tok: _Token) -> tuple:
    if not isinstance(value, tuple) or len(value) != n:
        raise DslSyntaxError(f"{key} requires a {n}-vector", tok.line, tok.col)
    return tuple(float(v) for v in value)


def parse_scene(text: str) -> SceneDoc:
    """Parse a scene document into its node tree (anchors left unresolved)."""
    return _Parser(text).parse_document()


# ---------------------------------------------------------------------------
# anchor resolution
# ---------------------------------------------------------------------------


def resolve(doc: SceneDoc) -> SceneDoc:
    """Replace every anchor reference with a concrete position.

    A reference ``pos=[off] + node.anchor`` resolves to
    ``off + world_pos(node) + node.anchors[anchor]`` where world positions
    accumulate translations from the root (dependency order, cycles
    rejected). Idempotent; the input document is not modified.
    """
    new_doc = _copy_doc(doc)
    index: dict[str, SceneNode] = {}
    parent: dict[int, SceneNode | None] = {}

    def scan(node: SceneNode, par: SceneNode | None):
        parent[id(node)] = par
        if node.name is not None:
            index[node.name] = node
        for c in node.children:
            scan(c, node)

    scan(new_doc.root, None)

    resolving: set[int] = set()
    world_cache: dict[int, tuple[float, float, float]] = {}

    def local_pos(node: SceneNode) -> tuple[float, float, float]:
        if node.pos_anchor is None:
            return node.pos
        if id(node) in resolving:
            raise CyclicAnchorError(f"anchor reference cycle through node {node.name or node.kind!r}")
        resolving.add(id(node))
        try:
            target_name, anchor_name = node.pos_anchor
            target = index.get(target_name)
            if target is None:
                raise UnknownAnchorError(f"unknown node {target_name!r} in anchor reference")
            if anchor_name not in target.anchors:
                raise UnknownAnchorError(f"node {target_name!r} has no anchor {anchor_name!r}")
            base = world_pos(target)
            off = target.anchors[anchor_name]
            node.pos = tuple(p + b + o for p, b, o in zip(node.pos, base, off))
            node.pos_anchor = None
            return node.pos
        finally:
            resolving.discard(id(node))

    def world_pos(node: SceneNode) -> tuple[float, float, float]:
        if id(node) in world_cache:
            return world_cache[id(node)]
        lp = local_pos(node)
        par = parent[id(node)]
        wp = lp if par is None else tuple(a + b for a, b in zip(world_pos(par), lp))
        world_cache[id(node)] = wp
        return wp

    for node in new_doc.walk():
        local_pos(node)
    return new_doc


def _copy_doc(doc: SceneDoc) -> SceneDoc:
    def cp(n: SceneNode) -> SceneNode:
        return SceneNode(
            kind=n.kind,
            name=n.name,
            pos=n.pos,
            quat=n.quat,
            size=n.size,
            attrs=dict(n.attrs),
            anchors=dict(n.anchors),
            pos_anchor=n.pos_anchor,
            children=[cp(c) for c in n.children],
        )

    return SceneDoc(root=cp(doc.root))
