"""Logical-form trees: parsing, canonical normalization, and exact-match equality.

Three surface syntaxes are supported: FunQL call notation
(``answer(state(next_to_2(stateid(alabama))))``), s-expression lambda terms
(``(_lambda $0 e (_and (_flight $0) ...))``), and Overnight-style expressions,
which may be written either as prefix s-expressions or in whitespace-separated
infix operator notation (``Type.Meeting ⊓ EndTime. != 10``).

Equality is defined on normal forms: variables are renamed canonically and the
children of unordered functors (by default ``_and``/``_or`` for lambda terms,
``and``/``or`` for Overnight) are sorted, so alpha-variants and argument
permutations compare equal.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

FUNQL = "funql"
LAMBDA = "lambda"
OVERNIGHT = "overnight"
FORMALISMS = (FUNQL, LAMBDA, OVERNIGHT)

# node kinds
APP = "app"
VAR = "var"
ENTITY = "entity"
LITERAL = "literal"
BINDER = "binder"

# Functors that bind their first argument when it is a variable.
DEFAULT_BINDERS = frozenset(
    {
        "_lambda",
        "_exists",
        "_the",
        "_argmax",
        "_argmin",
        "_max",
        "_min",
        "_sum",
        "_count",
        "lambda",
        "exists",
    }
)

# Functors whose argument order carries no meaning, per formalism.
DEFAULT_UNORDERED = {
    FUNQL: frozenset(),
    LAMBDA: frozenset({"_and", "_or"}),
    OVERNIGHT: frozenset({"and", "or"}),
}

_VAR_RE = re.compile(r"^\$\w+$")
_NUM_RE = re.compile(r"^-?\d+(\.\d+)?$")

_INFIX_CMP = ("<=", ">=", "!=", "=", "<", ">")
_INFIX_MEET = ("⊓", "⊔")
_INFIX_BOOL = ("and", "or")
_OVERNIGHT_OPS = ("<=", ">=", "!=", "⊓", "⊔", "=", "<", ">")


class LfSyntaxError(ValueError):
    """Malformed logical-form text. ``offset`` is a byte offset into the input."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class UnboundVariableError(ValueError):
    """A variable occurs outside the scope of any binder in a lambda form."""


class FormalismMismatchError(ValueError):
    """Two trees from different formalisms were compared."""


@dataclass(frozen=True)
class LfTree:
    """Immutable logical-form node.

    ``kind`` is one of app, var, entity, literal, binder. For binder nodes the
    first child is the binding occurrence of the variable and the remaining
    children are in its scope.
    """

    kind: str
    label: str
    children: tuple["LfTree", ...] = ()
    formalism: str = FUNQL

    def is_leaf(self) -> bool:
        return self.kind in (VAR, ENTITY, LITERAL)


@dataclass(frozen=True)
class NormalForm:
    """Canonical token sequence used for exact-match equality."""

    tokens: tuple[str, ...]
    formalism: str

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def _tokenize(text: str, formalism: str) -> list[tuple[str, int]]:
    """Split into (token, char offset) pairs; punctuation tokens are single chars."""
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in "(),":
            tokens.append((c, i))
            i += 1
            continue
        if c == "'" and formalism == FUNQL:
            j = text.find("'", i + 1)
            if j < 0:
                raise LfSyntaxError("unterminated quoted token", _byte_offset(text, i))
            tokens.append((text[i : j + 1], i))
            i = j + 1
            continue
        if formalism == OVERNIGHT:
            op = next((o for o in _OVERNIGHT_OPS if text.startswith(o, i)), None)
            if op is not None:
                tokens.append((op, i))
                i += len(op)
                continue
        j = i
        while j < n and not text[j].isspace() and text[j] not in "(),":
            if formalism == OVERNIGHT and any(text.startswith(o, j) for o in _OVERNIGHT_OPS):
                break
            if formalism == FUNQL and text[j] == "'":
                break
            j += 1
        tokens.append((text[i:j], i))
        i = j
    return tokens


class _TokenStream:
    def __init__(self, text: str, tokens: list[tuple[str, int]]):
        self.text = text
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> str | None:
        if self.pos + ahead < len(self.tokens):
            return self.tokens[self.pos + ahead][0]
        return None

    def advance(self, expected: str = "token") -> tuple[str, int]:
        if self.pos >= len(self.tokens):
            self.error(f"unexpected end of input, expected {expected}", len(self.text))
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, literal: str) -> None:
        tok, off = self.advance(repr(literal))
        if tok != literal:
            self.error(f"expected {literal!r}, found {tok!r}", off)

    def error(self, message: str, char_pos: int):
        raise LfSyntaxError(message, _byte_offset(self.text, char_pos))


def _leaf(token: str, formalism: str) -> LfTree:
    if _VAR_RE.match(token):
        return LfTree(VAR, token, (), formalism)
    if _NUM_RE.match(token):
        return LfTree(LITERAL, token, (), formalism)
    return LfTree(ENTITY, token, (), formalism)


def _parse_funql(ts: _TokenStream) -> LfTree:
    tok, off = ts.advance("expression")
    if tok in "(),":
        ts.error(f"unexpected {tok!r}", off)
    if ts.peek() == "(":
        ts.advance()
        if ts.peek() == ")":
            _, off2 = ts.advance()
            ts.error("empty argument list", off2)
        children = [_parse_funql(ts)]
        while ts.peek() == ",":
            ts.advance()
            children.append(_parse_funql(ts))
        ts.expect(")")
        return LfTree(APP, tok, tuple(children), FUNQL)
    return _leaf(tok, FUNQL)


def _parse_sexpr(ts: _TokenStream, formalism: str, binders: frozenset[str]) -> LfTree:
    tok, off = ts.advance("expression")
    if tok in "),":
        ts.error(f"unexpected {tok!r}", off)
    if tok != "(":
        return _leaf(tok, formalism)
    head, hoff = ts.advance("functor")
    if head in "(),":
        ts.error("expected functor symbol", hoff)
    children = []
    while True:
        nxt = ts.peek()
        if nxt is None:
            ts.error("unbalanced '('", len(ts.text))
        if nxt == ")":
            ts.advance()
            break
        if nxt == ",":
            _, coff = ts.advance()
            ts.error("unexpected ','", coff)
        children.append(_parse_sexpr(ts, formalism, binders))
    kind = APP
    if head in binders and len(children) >= 2 and children[0].kind == VAR:
        kind = BINDER
    return LfTree(kind, head, tuple(children), formalism)


def _parse_infix(ts: _TokenStream, binders: frozenset[str]) -> LfTree:
    return _infix_bool(ts, binders)


def _infix_bool(ts: _TokenStream, binders) -> LfTree:
    node = _infix_meet(ts, binders)
    while ts.peek() in _INFIX_BOOL:
        op, _ = ts.advance()
        right = _infix_meet(ts, binders)
        node = LfTree(APP, op, (node, right), OVERNIGHT)
    return node


def _infix_meet(ts: _TokenStream, binders) -> LfTree:
    node = _infix_cmp(ts, binders)
    while ts.peek() in _INFIX_MEET:
        op, _ = ts.advance()
        right = _infix_cmp(ts, binders)
        node = LfTree(APP, op, (node, right), OVERNIGHT)
    return node


def _infix_cmp(ts: _TokenStream, binders) -> LfTree:
    left = _infix_primary(ts, binders)
    if ts.peek() in _INFIX_CMP:
        op, _ = ts.advance()
        right = _infix_primary(ts, binders)
        return LfTree(APP, op, (left, right), OVERNIGHT)
    return left


def _is_infix_atom(tok: str | None) -> bool:
    if tok is None or tok in "(),":
        return False
    return tok not in _INFIX_CMP and tok not in _INFIX_MEET and tok not in _INFIX_BOOL


def _infix_call(ts: _TokenStream, name: str, binders) -> LfTree:
    ts.expect("(")
    args = [_infix_bool(ts, binders)]
    while ts.peek() == ",":
        ts.advance()
        args.append(_infix_bool(ts, binders))
    ts.expect(")")
    kind = APP
    if name in binders and len(args) >= 2 and args[0].kind == VAR:
        kind = BINDER
    return LfTree(kind, name, tuple(args), OVERNIGHT)


def _infix_primary(ts: _TokenStream, binders) -> LfTree:
    tok = ts.peek()
    if tok == "(":
        ts.advance()
        node = _infix_bool(ts, binders)
        ts.expect(")")
        return node
    if not _is_infix_atom(tok):
        # An operator token in operand position names a functor when a call
        # follows, e.g. "!= ( a )".
        if tok is not None and tok not in "(),":
            if ts.peek(1) == "(":
                name, _ = ts.advance()
                return _infix_call(ts, name, binders)
        bad, off = ts.advance("operand")
        ts.error(f"expected operand, found {bad!r}", off)
    # Consecutive bare atoms before '(' form a multi-word functor name,
    # e.g. "arg max ( x , y )".
    parts = [ts.advance()]
    while _is_infix_atom(ts.peek()):
        parts.append(ts.advance())
    if ts.peek() == "(":
        name = " ".join(p[0] for p in parts)
        return _infix_call(ts, name, binders)
    if len(parts) > 1:
        ts.error(f"adjacent tokens without an operator: {parts[1][0]!r}", parts[1][1])
    return _leaf(parts[0][0], OVERNIGHT)


def parse(text: str, formalism: str, binders: frozenset[str] = DEFAULT_BINDERS) -> LfTree:
    """Parse logical-form text into a tree.

    Overnight text starting with '(' is first read as a prefix s-expression;
    if that fails it is reread as a parenthesized infix expression. Raises
    LfSyntaxError (with a byte offset) on imbalance, stray punctuation, or
    trailing input.
    """
    if formalism not in FORMALISMS:
        raise ValueError(f"unknown formalism {formalism!r}; expected one of {FORMALISMS}")
    tokens = _tokenize(text, formalism)
    if not tokens:
        raise LfSyntaxError("empty input", 0)

    def full_parse(reader) -> LfTree:
        ts = _TokenStream(text, tokens)
        node = reader(ts)
        if ts.peek() is not None:
            tok, off = ts.advance()
            ts.error(f"trailing input starting at {tok!r}", off)
        return node

    if formalism == FUNQL:
        return full_parse(_parse_funql)
    if formalism == LAMBDA:
        return full_parse(lambda ts: _parse_sexpr(ts, LAMBDA, binders))
    if tokens[0][0] == "(":
        try:
            return full_parse(lambda ts: _parse_sexpr(ts, OVERNIGHT, binders))
        except LfSyntaxError:
            pass
    return full_parse(lambda ts: _parse_infix(ts, binders))


_INFIX_LEVEL = {op: 3 for op in _INFIX_CMP}
_INFIX_LEVEL.update({op: 2 for op in _INFIX_MEET})
_INFIX_LEVEL.update({op: 1 for op in _INFIX_BOOL})
_ATOMIC = 4


def _overnight_level(tree: LfTree) -> int:
    if tree.kind == APP and len(tree.children) == 2:
        return _INFIX_LEVEL.get(tree.label, _ATOMIC)
    return _ATOMIC


def _serialize_operand(child: LfTree, min_level: int, out: list[str]) -> None:
    if _overnight_level(child) < min_level:
        out.append("(")
        _serialize_overnight(child, out)
        out.append(")")
    else:
        _serialize_overnight(child, out)


def _serialize_overnight(tree: LfTree, out: list[str]) -> None:
    if tree.is_leaf() or not tree.children:
        out.append(tree.label)
        return
    level = _overnight_level(tree)
    if level < _ATOMIC:
        left, right = tree.children
        # Left operands reassociate correctly at the same level; right
        # operands and anything looser need parentheses. Comparisons are
        # non-associative, so their operands must be atomic or parenthesized.
        if level == 3:
            left_min = right_min = _ATOMIC
        else:
            left_min, right_min = level, level + 1
        _serialize_operand(left, left_min, out)
        out.append(tree.label)
        _serialize_operand(right, right_min, out)
        return
    out.extend([tree.label, "("])
    for i, child in enumerate(tree.children):
        if i:
            out.append(",")
        _serialize_overnight(child, out)
    out.append(")")


def _serialize_tokens(tree: LfTree) -> list[str]:
    if tree.is_leaf():
        return [tree.label]
    if tree.formalism == FUNQL:
        if not tree.children:
            return [tree.label]
        out = [tree.label, "("]
        for i, child in enumerate(tree.children):
            if i:
                out.append(",")
            out.extend(_serialize_tokens(child))
        out.append(")")
        return out
    if tree.formalism == OVERNIGHT:
        out: list[str] = []
        _serialize_overnight(tree, out)
        return out
    out = ["(", tree.label]
    for child in tree.children:
        out.extend(_serialize_tokens(child))
    out.append(")")
    return out


def serialize(tree: LfTree) -> str:
    """Render a tree as a single-space-separated canonical surface string.

    parse(serialize(t)) is structurally equal to t, with one exception: an
    argument-less functor serializes to its bare name, which reparses as an
    entity leaf (the canonical form of a bare name).
    """
    return " ".join(_serialize_tokens(tree))


def _check_bound(node: LfTree, env: frozenset[str]) -> None:
    if node.kind == VAR:
        if node.label not in env:
            raise UnboundVariableError(f"variable {node.label} occurs outside any binder")
        return
    if node.kind == BINDER:
        inner = env | {node.children[0].label}
        for child in node.children[1:]:
            _check_bound(child, inner)
        return
    for child in node.children:
        _check_bound(child, env)


def _scope_key_tokens(node: LfTree, env: dict[str, int], depth: int, out: list[str]) -> None:
    """Render a subtree with bound variables as binder-relative indices.

    The rendering is invariant under consistent renaming of bound variables,
    so it is a sound sort key for the children of unordered functors. Free
    variables keep their names.
    """
    if node.kind == VAR:
        if node.label in env:
            out.append(f"#{depth - env[node.label] - 1}")
        else:
            out.append(node.label)
        return
    if node.is_leaf():
        out.append(node.label)
        return
    if node.kind == BINDER:
        out.extend(("(", node.label, "@"))
        inner = dict(env)
        inner[node.children[0].label] = depth
        for child in node.children[1:]:
            _scope_key_tokens(child, inner, depth + 1, out)
        out.append(")")
        return
    out.extend(("(", node.label))
    for child in node.children:
        _scope_key_tokens(child, env, depth, out)
    out.append(")")


def _scope_key(node: LfTree, env: dict[str, int], depth: int) -> str:
    out: list[str] = []
    _scope_key_tokens(node, env, depth, out)
    return " ".join(out)


def _sort_unordered(node: LfTree, env: dict[str, int], depth: int, unordered: frozenset[str]) -> LfTree:
    if node.is_leaf():
        return node
    if node.kind == BINDER:
        inner = dict(env)
        inner[node.children[0].label] = depth
        kids = [node.children[0]]
        kids.extend(_sort_unordered(c, inner, depth + 1, unordered) for c in node.children[1:])
        return replace(node, children=tuple(kids))
    kids = [_sort_unordered(c, env, depth, unordered) for c in node.children]
    if node.label in unordered:
        kids.sort(key=lambda k: _scope_key(k, env, depth))
    return replace(node, children=tuple(kids))


def _free_var_names(tree: LfTree) -> set[str]:
    out: set[str] = set()

    def walk(node: LfTree, env: frozenset[str]) -> None:
        if node.kind == VAR:
            if node.label not in env:
                out.add(node.label)
            return
        if node.kind == BINDER:
            inner = env | {node.children[0].label}
            for child in node.children[1:]:
                walk(child, inner)
            return
        for child in node.children:
            walk(child, env)

    walk(tree, frozenset())
    return out


def _rename_vars(tree: LfTree) -> LfTree:
    """Rename bound variables to $0, $1, ... by first occurrence in pre-order.

    Binder-aware: shadowed variables get fresh names. Free variables (only
    possible outside the lambda formalism) keep their names; renaming them
    would make the sort order name-dependent across passes, and a canonical
    name colliding with a free name would conflate distinct variables. Fresh
    names therefore skip any name occurring free in the tree.
    """
    reserved = _free_var_names(tree)
    counter = [0]

    def fresh() -> str:
        while True:
            name = f"${counter[0]}"
            counter[0] += 1
            if name not in reserved:
                return name

    def walk(node: LfTree, env: dict[str, str]) -> LfTree:
        if node.kind == VAR:
            if node.label in env:
                return replace(node, label=env[node.label])
            return node
        if node.kind == BINDER:
            name = fresh()
            inner = dict(env)
            inner[node.children[0].label] = name
            kids = [replace(node.children[0], label=name)]
            kids.extend(walk(c, inner) for c in node.children[1:])
            return replace(node, children=tuple(kids))
        if node.is_leaf():
            return node
        return replace(node, children=tuple(walk(c, env) for c in node.children))

    return walk(tree, {})


def normalize(tree: LfTree, unordered: frozenset[str] | None = None) -> NormalForm:
    """Compute the canonical token sequence of a tree.

    Children of unordered functors are sorted by a renaming-invariant key,
    then bound variables are renamed to $0, $1, ... by first occurrence in
    pre-order. Raises UnboundVariableError for lambda forms with free
    variables.
    """
    if unordered is None:
        unordered = DEFAULT_UNORDERED[tree.formalism]
    if tree.formalism == LAMBDA:
        _check_bound(tree, frozenset())
    canonical = _sort_unordered(tree, {}, 0, unordered)
    renamed = _rename_vars(canonical)
    return NormalForm(tuple(_serialize_tokens(renamed)), tree.formalism)


def normal_text(tree: LfTree, unordered: frozenset[str] | None = None) -> str:
    """Normal form rendered as a string; convenient as a dict key."""
    return normalize(tree, unordered).text


def lf_equal(a: LfTree, b: LfTree, unordered: frozenset[str] | None = None) -> bool:
    """Exact match on normal forms."""
    if a.formalism != b.formalism:
        raise FormalismMismatchError(f"cannot compare {a.formalism} with {b.formalism}")
    return normalize(a, unordered).tokens == normalize(b, unordered).tokens
