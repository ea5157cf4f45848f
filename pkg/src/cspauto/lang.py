"""Parser and canonical printer for ``.cspa`` scripts.

A script is a sequence of declarations::

    set All_Buses = {engine_cu, gearbox}
    channel spoofing : All_Buses : {0..10}
    Attacker = spoofing?b:All_Buses?c:{0..10} -> Attacker

Operators, tightest first: ``->``; ``||``, ``|||``, ``[| X |]``,
``[ A || B ]``; ``|~|``; ``[]``.  Binary operators associate to the right.
Sets may also list dotted events (``spoofing.engine_cu.2``) for use as
synchronisation or alphabet sets.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from cspauto.errors import CspError, CspSyntaxError, UnboundReference, UnguardedRecursion
from cspauto.kernel import (
    INT_MAX,
    INT_MIN,
    SKIP,
    STOP,
    AlphaParallel,
    Binder,
    Environment,
    Event,
    EventSet,
    ExtChoice,
    GenParallel,
    InputPrefix,
    IntChoice,
    Interleave,
    Prefix,
    Ref,
    SyncParallel,
    ValueSet,
    Var,
    _format_values,
    check_event,
    check_guarded,
    value_key,
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>--[^\n]*)
  | (?P<int>-?[0-9]+)
  | (?P<name>[A-Za-z][A-Za-z0-9_]*)
  | (?P<op>\|~\||\|\|\||\|\||\[\||\|\]|\[\]|->|\.\.|[\[\]{}(),.?!:=])
    """,
    re.VERBOSE,
)

KEYWORDS = {"STOP", "SKIP", "channel", "set"}


@dataclass(frozen=True)
class Token:
    kind: str  # UNAME, LNAME, INT, KW, OP, EOF
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    message: str
    line: int
    column: int
    start: int
    end: int

    def __str__(self):
        return f"{self.line}:{self.column}: {self.kind}: {self.message}"


class ParseError(CspError):
    """Raised by :func:`parse`; carries every diagnostic found."""

    kind = "ParseError"

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


class _Fail(Exception):
    def __init__(self, kind, message, start, end):
        super().__init__(message)
        self.kind, self.message, self.start, self.end = kind, message, start, end


def tokenize(text: str):
    """Return (tokens, lexical errors as _Fail)."""
    tokens, errors = [], []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            errors.append(_Fail("SyntaxError", f"unexpected character {text[pos]!r}", pos, pos + 1))
            pos += 1
            continue
        kind = m.lastgroup
        s = m.group()
        if kind == "int":
            tokens.append(Token("INT", s, pos, m.end()))
        elif kind == "name":
            if s in KEYWORDS:
                tokens.append(Token("KW", s, pos, m.end()))
            elif s[0].isupper():
                tokens.append(Token("UNAME", s, pos, m.end()))
            else:
                tokens.append(Token("LNAME", s, pos, m.end()))
        elif kind == "op":
            tokens.append(Token("OP", s, pos, m.end()))
        pos = m.end()
    tokens.append(Token("EOF", "", n, n))
    return tokens, errors


def _decl_starts(tokens):
    starts = []
    for i, t in enumerate(tokens):
        if t.kind == "KW" and t.text in ("set", "channel"):
            starts.append(i)
        elif (
            t.kind == "UNAME"
            and tokens[i + 1].kind == "OP"
            and tokens[i + 1].text == "="
            and not (i > 0 and tokens[i - 1].kind == "KW" and tokens[i - 1].text == "set")
        ):
            starts.append(i)
    return starts


class _Chunk:
    """Cursor over the tokens of one declaration."""

    def __init__(self, tokens, eof):
        self.toks = tokens + [eof]
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self):
        t = self.tok
        if t.kind != "EOF":
            self.i += 1
        return t

    def at(self, text, kind="OP"):
        return self.tok.kind == kind and self.tok.text == text

    def expect(self, text, kind="OP"):
        if not self.at(text, kind):
            self.fail(f"expected {text!r}, found {self.describe()}")
        return self.next()

    def expect_kind(self, kind, what):
        if self.tok.kind != kind:
            self.fail(f"expected {what}, found {self.describe()}")
        return self.next()

    def describe(self):
        t = self.tok
        return "end of declaration" if t.kind == "EOF" else repr(t.text)

    def fail(self, message, tok=None, kind="SyntaxError"):
        t = tok or self.tok
        raise _Fail(kind, message, t.start, max(t.end, t.start + 1))


class _ScriptParser:
    def __init__(self, text):
        self.text = text
        self.diags = []
        self.sets_raw = {}
        self.sets = {}
        self.set_spans = {}
        self.channels = {}
        self.definitions = {}
        self.spans = {}
        self.proc_names = set()

    # -- diagnostics -----------------------------------------------------
    def report(self, kind, message, start, end):
        start = max(0, min(start, len(self.text)))
        end = max(start, min(end, len(self.text)))
        line = self.text.count("\n", 0, start) + 1
        col = start - (self.text.rfind("\n", 0, start) + 1) + 1
        self.diags.append(Diagnostic(kind, message, line, col, start, end))

    def _report_fail(self, f):
        self.report(f.kind, f.message, f.start, f.end)

    # -- driver ----------------------------------------------------------
    def run(self):
        tokens, lex_errors = tokenize(self.text)
        for f in lex_errors:
            self._report_fail(f)
        eof = tokens[-1]
        starts = _decl_starts(tokens)
        first = starts[0] if starts else len(tokens) - 1
        if first > 0:
            t = tokens[0]
            self.report("SyntaxError", f"expected a declaration, found {t.text!r}", t.start, t.end)
        chunks = []
        for k, s in enumerate(starts):
            e = starts[k + 1] if k + 1 < len(starts) else len(tokens) - 1
            end_tok = tokens[e]
            chunks.append(_Chunk(tokens[s:e], Token("EOF", "", end_tok.start, end_tok.start)))
        for c in chunks:
            if c.tok.kind == "UNAME":
                name = c.tok.text
                if name in self.proc_names:
                    self.report("SyntaxError", f"duplicate definition of {name}", c.tok.start, c.tok.end)
                self.proc_names.add(name)
        for c in chunks:
            if c.at("set", "KW"):
                self._guard(self._set_decl, c)
        self._resolve_sets()
        for c in chunks:
            if c.at("channel", "KW"):
                self._guard(self._channel_decl, c)
        for c in chunks:
            if c.tok.kind == "UNAME":
                self._guard(self._proc_def, c)
        env = Environment(self.definitions, self.channels, self.sets, self.spans)
        if not self.diags:
            try:
                check_guarded(env)
            except UnguardedRecursion as exc:
                s, e = self.spans[exc.cycle[0]]
                self.report(exc.kind, str(exc), s, e)
            except UnboundReference as exc:  # pragma: no cover - caught per reference
                self.report(exc.kind, str(exc), 0, 0)
        return env

    def _guard(self, fn, chunk):
        try:
            fn(chunk)
        except _Fail as f:
            self._report_fail(f)

    # -- sets and channels ---------------------------------------------
    def _set_decl(self, c):
        c.expect("set", "KW")
        name_tok = c.expect_kind("UNAME", "a set name")
        name = name_tok.text
        if name in self.proc_names:
            c.fail(f"{name} is already a process name", name_tok)
        if name in self.sets_raw:
            c.fail(f"duplicate set {name}", name_tok)
        c.expect("=")
        if c.tok.kind == "UNAME":
            raw = ("alias", c.next())
        else:
            raw = ("items", self._items(c))
        if c.tok.kind != "EOF":
            c.fail(f"unexpected {c.describe()} after set declaration")
        self.sets_raw[name] = raw
        self.set_spans[name] = (name_tok.start, c.tok.start)

    def _items(self, c):
        c.expect("{")
        items = []
        if c.at("}"):
            c.next()
            return items
        first = self._value(c, {})
        if c.at(".."):
            c.next()
            lo_tok = c.toks[c.i - 2]
            hi = self._value(c, {})
            if not (isinstance(first, int) and isinstance(hi, int)):
                c.fail("ranges need integer bounds", lo_tok)
            c.expect("}")
            return [(v,) for v in range(first, hi + 1)]
        item = [first]
        while True:
            if c.at("."):
                c.next()
                item.append(self._value(c, {}))
                continue
            items.append(tuple(item))
            if c.at(","):
                c.next()
                item = [self._value(c, {})]
                continue
            c.expect("}")
            return items

    def _resolve_sets(self):
        def resolve(name, stack):
            if name in self.sets:
                return self.sets[name]
            kind, data = self.sets_raw[name]
            if kind == "items":
                items = data
            else:
                target = data.text
                if target not in self.sets_raw:
                    raise _Fail("UnboundReference", f"undefined set {target}", data.start, data.end)
                if target in stack:
                    raise _Fail("SyntaxError", f"cyclic set definition {target}", data.start, data.end)
                items = resolve(target, stack + (target,))
            items = tuple(sorted(set(items), key=lambda it: tuple(value_key(v) for v in it)))
            self.sets[name] = items
            return items

        for name in list(self.sets_raw):
            try:
                resolve(name, (name,))
            except _Fail as f:
                self._report_fail(f)
                self.sets[name] = ()

    def _value_set(self, c):
        """valueset in a value context (binder or channel domain)."""
        if c.tok.kind == "UNAME":
            t = c.next()
            if t.text not in self.sets:
                c.fail(f"undefined set {t.text}", t, "UnboundReference")
            items = self.sets[t.text]
            if any(len(it) != 1 for it in items):
                c.fail(f"set {t.text} contains events, not values", t)
            return ValueSet(tuple(it[0] for it in items), t.text)
        start = c.tok
        items = self._items(c)
        if any(len(it) != 1 for it in items):
            c.fail("dotted items are not values", start)
        return ValueSet(tuple(it[0] for it in items))

    def _event_set(self, c):
        start = c.tok
        if c.tok.kind == "UNAME":
            t = c.next()
            if t.text not in self.sets:
                c.fail(f"undefined set {t.text}", t, "UnboundReference")
            items, name = self.sets[t.text], t.text
        else:
            items, name = self._items(c), None
        events = []
        for it in items:
            if not isinstance(it[0], str):
                c.fail(f"{it[0]} is not an event", start)
            ev = Event(it[0], tuple(it[1:]))
            self._check_event(c, ev.channel, ev.args, {}, start)
            events.append(ev)
        return EventSet(tuple(events), name)

    def _channel_decl(self, c):
        c.expect("channel", "KW")
        t = c.expect_kind("LNAME", "a channel name")
        if t.text in self.channels:
            c.fail(f"duplicate channel {t.text}", t)
        doms = []
        while c.at(":"):
            c.next()
            doms.append(self._value_set(c))
        if c.tok.kind != "EOF":
            c.fail(f"unexpected {c.describe()} in channel declaration")
        self.channels[t.text] = tuple(doms)

    # -- processes -------------------------------------------------------
    def _proc_def(self, c):
        name_tok = c.next()
        c.expect("=")
        body = self._choice(c, {})
        if c.tok.kind != "EOF":
            c.fail(f"unexpected {c.describe()}")
        self.definitions[name_tok.text] = body
        self.spans[name_tok.text] = (name_tok.start, c.tok.start)

    def _choice(self, c, scope):
        left = self._ichoice(c, scope)
        if c.at("[]"):
            c.next()
            return ExtChoice(left, self._choice(c, scope))
        return left

    def _ichoice(self, c, scope):
        left = self._par(c, scope)
        if c.at("|~|"):
            c.next()
            return IntChoice(left, self._ichoice(c, scope))
        return left

    def _par(self, c, scope):
        left = self._prefix(c, scope)
        if c.at("||"):
            c.next()
            return SyncParallel(left, self._par(c, scope))
        if c.at("|||"):
            c.next()
            return Interleave(left, self._par(c, scope))
        if c.at("[|"):
            c.next()
            sync = self._event_set(c)
            c.expect("|]")
            return GenParallel(left, sync, self._par(c, scope))
        if c.at("["):
            c.next()
            a = self._event_set(c)
            c.expect("||")
            b = self._event_set(c)
            c.expect("]")
            return AlphaParallel(left, a, b, self._par(c, scope))
        return left

    def _prefix(self, c, scope):
        if c.tok.kind == "LNAME":
            return self._event_prefix(c, scope)
        return self._atom(c, scope)

    def _atom(self, c, scope):
        t = c.tok
        if c.at("STOP", "KW"):
            c.next()
            return STOP
        if c.at("SKIP", "KW"):
            c.next()
            return SKIP
        if t.kind == "UNAME":
            c.next()
            if t.text not in self.proc_names:
                kind = "SyntaxError" if t.text in self.sets_raw else "UnboundReference"
                c.fail(f"undefined process {t.text}", t, kind)
            return Ref(t.text)
        if c.at("("):
            c.next()
            inner = self._choice(c, scope)
            c.expect(")")
            return inner
        c.fail(f"expected a process, found {c.describe()}")

    def _event_prefix(self, c, scope):
        head = c.next()
        fields = []
        inner = dict(scope)
        has_binder = False
        while True:
            if c.at(".") or c.at("!"):
                c.next()
                fields.append(self._value(c, inner))
            elif c.at("?"):
                c.next()
                var = c.expect_kind("LNAME", "a variable name")
                c.expect(":")
                dom = self._value_set(c)
                fields.append(Binder(var.text, dom))
                inner[var.text] = dom
                has_binder = True
            else:
                break
        end = c.toks[c.i - 1]
        self._check_event(c, head.text, fields, scope, head, end.end)
        c.expect("->")
        cont = self._prefix(c, inner)
        if has_binder:
            return InputPrefix(head.text, tuple(fields), cont)
        return Prefix(Event(head.text, tuple(fields)), cont)

    def _value(self, c, scope):
        t = c.tok
        if t.kind == "INT":
            c.next()
            v = int(t.text)
            if not INT_MIN <= v <= INT_MAX:
                c.fail(f"integer {t.text} does not fit in 32 bits", t)
            return v
        if t.kind == "LNAME":
            c.next()
            return Var(t.text) if t.text in scope else t.text
        c.fail(f"expected a value, found {c.describe()}")

    def _check_event(self, c, channel, fields, scope, tok, end=None):
        env = Environment(channels=self.channels)
        try:
            check_event(env, channel, fields, scope)
        except CspError as exc:
            raise _Fail(exc.kind, str(exc), tok.start, end or tok.end) from None


def parse_with_diagnostics(text):
    """Parse ``text``; returns ``(env or None, diagnostics)`` and never raises."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            return None, [Diagnostic("SyntaxError", f"input is not UTF-8: {exc.reason}", 1, 1, exc.start, exc.end)]
    p = _ScriptParser(text)
    try:
        env = p.run()
    except RecursionError:
        p.report("SyntaxError", "expression nested too deeply", 0, len(text))
        env = None
    diags = sorted(p.diags, key=lambda d: (d.start, d.end, d.kind))
    return (None if diags else env), diags


def parse(text) -> Environment:
    """Parse a script into a validated Environment or raise ParseError."""
    env, diags = parse_with_diagnostics(text)
    if diags:
        raise ParseError(diags)
    return env


def _format_items(items) -> str:
    if all(len(it) == 1 for it in items):
        return _format_values(tuple(it[0] for it in items))
    return "{" + ", ".join(".".join(str(v) for v in it) for it in items) + "}"


def print_env(env: Environment) -> str:
    """Canonical text of ``env``: sets, then channels, then definitions."""
    groups = [
        [f"set {name} = {_format_items(items)}" for name, items in env.sets.items()],
        [
            "channel " + ch + "".join(f" : {d}" for d in doms)
            for ch, doms in env.channels.items()
        ],
        [f"{name} = {body}" for name, body in env.definitions.items()],
    ]
    return "\n\n".join("\n".join(g) for g in groups if g) + "\n"


def format_script(text) -> str:
    """Parse then print; the ``fmt`` subcommand."""
    return print_env(parse(text))
