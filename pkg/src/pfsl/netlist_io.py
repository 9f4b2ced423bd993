"""SPICE-flavoured netlist text: parser, serializer and diagnostics.

One element per line::

    <name> <nodeA> <nodeB> <value>[suffix] [key=val ...]

The first letter of the name picks the kind: R, L, C, X (varactor), V (cw
source, value = frequency) and A (pAG probe). Directives: ``.port n ref z0``,
``.vbias v``, ``.fref f``, ``.model name key=val ...``, ``.title text`` and
``.end``. ``*`` at the start of a line and ``#`` anywhere start a comment.

Example::

    .title series tank
    .fref 2.1g
    .vbias 1.1
    .model smv cj0=4.144p vj=0.8 gamma=1.1 cpkg=0.4p qv=15 vbi=0.7
    V1 1 0 2.1g dbm=-10
    L1 1 2 11n Q=80
    X1 2 0 model=smv
    .port 1 0 50
"""
from __future__ import annotations

import dataclasses
import math
import re
from decimal import Decimal
from dataclasses import dataclass, field

from .core import Element, Kind, Netlist, Port, VaractorModel, capacitance_at_bias
from .errors import NetlistSyntaxError, PfslError
from .units import dbm_to_w

# suffix -> power of ten, applied in decimal so "1.4p" is the float nearest 1.4e-12
SUFFIX = {"f": -15, "p": -12, "n": -9, "u": -6, "m": -3, "k": 3, "meg": 6, "g": 9, "t": 12}
_NUMBER = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(meg|[fpnumkgt])?([a-z]*)$",
                     re.IGNORECASE)
_SPECIAL = {"inf": math.inf, "+inf": math.inf}

# .model keys -> VaractorModel fields
MODEL_KEYS = {"cj0": "c_j0", "vj": "v_j", "gamma": "gamma", "m": "gamma", "qv": "q_v",
              "vbi": "v_bi", "is": "i_s", "n": "n_ideality", "cpkg": "c_pkg", "fc": "fc",
              "bv": "v_breakdown"}
MODEL_OUT = ("cj0", "vj", "gamma", "qv", "vbi", "is", "n", "cpkg", "fc", "bv")
ELEMENT_KEYS = {
    Kind.RESISTOR: set(),
    Kind.INDUCTOR: {"q", "fref"},
    Kind.CAPACITOR: {"q", "fref"},
    Kind.VARACTOR: {"model", "vdc", "fref"},
    Kind.CW_SOURCE: {"p", "dbm", "z", "phase"},
    Kind.PAG_SOURCE: {"p", "dbm", "z", "phase"},
}


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str

    def __str__(self):
        return f"line {self.line}, col {self.column}: {self.message}"


@dataclass
class NetlistDocument:
    text: str
    netlist: Netlist | None = None
    diagnostics: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.netlist is not None and not self.diagnostics


class _Fail(Exception):
    def __init__(self, column, message):
        super().__init__(message)
        self.column = column
        self.message = message


def parse_value(token: str, column: int = 1) -> float:
    """Number with an optional SPICE suffix; trailing unit letters are ignored."""
    t = token.strip()
    if t.lower() in _SPECIAL:
        return _SPECIAL[t.lower()]
    m = _NUMBER.match(t)
    if m is None:
        raise _Fail(column, f"malformed number {token!r}")
    mant, suf, rest = m.groups()
    if suf is None and rest:
        # "meg" may hide behind a unit spelled in upper case, e.g. 1MEGHZ
        if rest.lower().startswith("meg"):
            suf = "meg"
        else:
            raise _Fail(column, f"unknown unit suffix in {token!r}")
    try:
        v = float(Decimal(mant).scaleb(SUFFIX[suf.lower()] if suf else 0))
    except ArithmeticError:  # decimal context overflow on huge exponents
        v = math.inf
    if not math.isfinite(v):
        raise _Fail(column, f"number out of range {token!r}")
    return v


def _tokens(line: str):
    """(column, text) pairs with comments stripped; columns are 1-based."""
    cut = line.find("#")
    if cut >= 0:
        line = line[:cut]
    if line.lstrip().startswith("*"):
        return []
    return [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", line)]


def _node(col, tok):
    if tok.lower() == "gnd":
        return 0
    if not re.fullmatch(r"\d+", tok):
        raise _Fail(col, f"node must be a non-negative integer, got {tok!r}")
    return int(tok)


def _keyvals(toks, allowed, what):
    out = {}
    for col, tok in toks:
        if "=" not in tok:
            raise _Fail(col, f"expected key=value, got {tok!r}")
        k, _, v = tok.partition("=")
        k = k.lower()
        if k not in allowed:
            raise _Fail(col, f"unknown key {k!r} for {what}")
        if k in out:
            raise _Fail(col, f"key {k!r} given twice")
        if not v:
            raise _Fail(col + len(k) + 1, f"missing value for {k!r}")
        out[k] = (col + len(k) + 1, v)
    return out


@dataclass
class _Pending:
    line: int
    col: int
    name: str
    kind: Kind
    a: int
    b: int
    value: float | None
    keys: dict


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.diags = []
        self.pending = []
        self.names = {}
        self.ports = []
        self.models = {}
        self.v_bias = None
        self.f_ref = None
        self.title = ""
        self.directive_lines = {}

    def fail(self, line, col, msg):
        self.diags.append(Diagnostic(line, col, msg))

    def run(self):
        for ln, raw in enumerate(self.text.splitlines(), start=1):
            toks = _tokens(raw)
            if not toks:
                continue
            try:
                if toks[0][1].startswith("."):
                    if self.directive(ln, raw, toks) == "end":
                        break
                else:
                    self.element(ln, toks)
            except _Fail as exc:
                self.fail(ln, exc.column, exc.message)
        if self.diags:
            return None
        return self.build()

    # -- directives ---------------------------------------------------------

    def directive(self, ln, raw, toks):
        col, word = toks[0]
        word = word.lower()
        args = toks[1:]
        if word == ".end":
            return "end"
        if word == ".title":
            self.title = raw[raw.lower().find(".title") + 6:].split("#")[0].strip()
            return None
        if word in (".vbias", ".fref"):
            if len(args) != 1:
                raise _Fail(col, f"{word} takes one value")
            v = parse_value(args[0][1], args[0][0])
            if word == ".vbias":
                if v < 0:
                    raise _Fail(args[0][0], "bias must be >= 0 (reverse)")
                self.once(word, ln, col)
                self.v_bias = v
            else:
                if not v > 0:
                    raise _Fail(args[0][0], "reference frequency must be positive")
                self.once(word, ln, col)
                self.f_ref = v
            return None
        if word == ".port":
            if len(args) not in (2, 3):
                raise _Fail(col, ".port expects: .port node ref [z0]")
            n = _node(*args[0])
            ref = _node(*args[1])
            if ref != 0:
                raise _Fail(args[1][0], "port reference must be node 0")
            z0 = parse_value(args[2][1], args[2][0]) if len(args) == 3 else 50.0
            if not z0 > 0:
                raise _Fail(args[2][0], "port z0 must be positive")
            self.ports.append((ln, args[0][0], n, z0))
            return None
        if word == ".model":
            if not args:
                raise _Fail(col, ".model needs a name")
            mcol, name = args[0]
            if "=" in name:
                raise _Fail(mcol, ".model needs a name before its parameters")
            if name.lower() in self.models:
                raise _Fail(mcol, f"model {name!r} defined twice")
            kv = _keyvals(args[1:], set(MODEL_KEYS), f"model {name}")
            params = {MODEL_KEYS[k]: parse_value(v, c) for k, (c, v) in kv.items()}
            try:
                model = VaractorModel(**params)
            except PfslError as exc:
                raise _Fail(mcol, str(exc)) from None
            self.models[name.lower()] = (name, model)
            return None
        raise _Fail(col, f"unknown directive {toks[0][1]!r}")

    def once(self, word, ln, col):
        if word in self.directive_lines:
            raise _Fail(col, f"{word} already given on line {self.directive_lines[word]}")
        self.directive_lines[word] = ln

    # -- elements -----------------------------------------------------------

    def element(self, ln, toks):
        col, name = toks[0]
        try:
            kind = Kind(name[0].upper())
        except ValueError:
            raise _Fail(col, f"unknown element prefix {name[0]!r}") from None
        if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", name):
            raise _Fail(col, f"bad element name {name!r}")
        key = name.upper()
        if key in self.names:
            raise _Fail(col, f"duplicate element name {name!r} (first on line {self.names[key]})")
        if len(toks) < 3:
            raise _Fail(col, f"{name}: expected two nodes")
        a = _node(*toks[1])
        b = _node(*toks[2])
        if a == b:
            raise _Fail(toks[2][0], f"{name}: both terminals on node {a}")
        rest = toks[3:]
        value = None
        if rest and "=" not in rest[0][1]:
            if kind is Kind.VARACTOR:
                raise _Fail(rest[0][0], f"{name}: a varactor takes model=, not a value")
            value = parse_value(rest[0][1], rest[0][0])
            rest = rest[1:]
        elif kind is not Kind.VARACTOR:
            raise _Fail(toks[2][0] + len(toks[2][1]), f"{name}: missing value")
        if value is not None and kind is not Kind.VARACTOR and not value > 0:
            raise _Fail(toks[3][0], f"{name}: value must be positive")
        kv = _keyvals(rest, ELEMENT_KEYS[kind], name)
        self.names[key] = ln
        self.pending.append(_Pending(ln, col, name, kind, a, b, value, kv))

    # -- assembly -----------------------------------------------------------

    def build(self):
        cw = [p for p in self.pending if p.kind is Kind.CW_SOURCE]
        f_default = self.f_ref
        if f_default is None and cw:
            f_default = cw[0].value
        elements = []
        for p in self.pending:
            try:
                elements.append(self.make(p, f_default))
            except _Fail as exc:
                self.fail(p.line, exc.column, exc.message)
            except PfslError as exc:
                self.fail(p.line, p.col, str(exc))
        nodes = {0} | {e.node_a for e in elements} | {e.node_b for e in elements}
        ports = []
        for ln, col, n, z0 in self.ports:
            if n not in nodes:
                self.fail(ln, col, f"port on undefined node {n}")
            ports.append(Port(n, 0, z0))
        if not ports and not self.diags:
            self.fail(max(1, len(self.text.splitlines())), 1, "netlist declares no .port")
        if self.diags:
            return None
        models = {name: m for name, m in self.models.values()}
        try:
            return Netlist(elements=tuple(elements), ports=tuple(ports), models=models,
                           v_bias=self.v_bias, f_ref=self.f_ref, title=self.title)
        except PfslError as exc:
            self.fail(1, 1, str(exc))
            return None

    def num(self, kv, key):
        c, v = kv[key]
        return parse_value(v, c)

    def make(self, p: _Pending, f_default):
        kv = p.keys
        if p.kind in (Kind.CW_SOURCE, Kind.PAG_SOURCE):
            if "p" in kv and "dbm" in kv:
                raise _Fail(kv["dbm"][0], "give either p= or dbm=, not both")
            power = 0.0
            if "p" in kv:
                power = self.num(kv, "p")
            elif "dbm" in kv:
                power = dbm_to_w(self.num(kv, "dbm"))
            if power < 0:
                raise _Fail(kv["p"][0], "source power must be >= 0")
            z = self.num(kv, "z") if "z" in kv else 50.0
            phase = self.num(kv, "phase") if "phase" in kv else 0.0
            return Element(p.name, p.kind, p.a, p.b, p.value, power=power, z_src=z, phase=phase)
        if p.kind is Kind.VARACTOR:
            if "model" in kv:
                mname = kv["model"][1]
                if mname.lower() not in self.models:
                    raise _Fail(kv["model"][0], f"undefined model {mname!r}")
                mname, model = self.models[mname.lower()]
            else:
                mname, model = None, VaractorModel()
            v_dc = self.num(kv, "vdc") if "vdc" in kv else self.v_bias
            if v_dc is None:
                raise _Fail(p.col, f"{p.name}: no bias (add .vbias or vdc=)")
            f_ref = self.num(kv, "fref") if "fref" in kv else f_default
            if f_ref is None:
                raise _Fail(p.col, f"{p.name}: no reference frequency for Q (add .fref or fref=)")
            bv = capacitance_at_bias(model, v_dc)
            return Element(p.name, p.kind, p.a, p.b, f_ref=f_ref, varactor=bv, model=mname)
        q = f_ref = None
        if "q" in kv:
            q = self.num(kv, "q")
            if math.isinf(q):
                q = None
            else:
                f_ref = self.num(kv, "fref") if "fref" in kv else f_default
                if f_ref is None:
                    raise _Fail(kv["q"][0], f"{p.name}: Q given without .fref or fref=")
        elif "fref" in kv:
            f_ref = self.num(kv, "fref")
        return Element(p.name, p.kind, p.a, p.b, p.value, q=q, f_ref=f_ref)


def _decode(text) -> str:
    if isinstance(text, (bytes, bytearray)):
        try:
            return bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            line = bytes(text)[:exc.start].count(b"\n") + 1
            col = exc.start - (bytes(text)[:exc.start].rfind(b"\n") + 1) + 1
            raise NetlistSyntaxError("input is not valid UTF-8", line, col) from None
    return text


def parse_document(text) -> NetlistDocument:
    """Parse collecting every diagnostic instead of stopping at the first."""
    try:
        text = _decode(text)
    except NetlistSyntaxError as exc:
        return NetlistDocument("", None, [Diagnostic(exc.line, exc.column, exc.reason)])
    p = _Parser(text)
    net = p.run()
    return NetlistDocument(text, net, p.diags)


def parse_netlist(text) -> Netlist:
    """Parse netlist text (str or UTF-8 bytes); raise on the first diagnostic."""
    doc = parse_document(text)
    if doc.diagnostics:
        d = doc.diagnostics[0]
        raise NetlistSyntaxError(d.message, d.line, d.column)
    return doc.netlist


def read_netlist(path) -> Netlist:
    with open(path, "rb") as fh:
        return parse_netlist(fh.read())


# --------------------------------------------------------------------------
# serializer


def fmt(x: float) -> str:
    """Shortest text that parses back to exactly ``x``."""
    if math.isinf(x):
        return "inf"
    return repr(float(x))


def _model_line(name, m: VaractorModel) -> str:
    vals = {k: getattr(m, MODEL_KEYS[k]) for k in MODEL_OUT}
    return f".model {name} " + " ".join(f"{k}={fmt(v)}" for k, v in vals.items())


def serialize_netlist(net: Netlist) -> str:
    """Text form that parses back to a structurally identical netlist."""
    lines = []
    if net.title:
        lines.append(f".title {net.title}")
    if net.f_ref is not None:
        lines.append(f".fref {fmt(net.f_ref)}")
    if net.v_bias is not None:
        lines.append(f".vbias {fmt(net.v_bias)}")
    # varactor models, named after the netlist's table where possible
    names = {}
    used = set()
    for name, m in net.models.items():
        names.setdefault(m, name)
    body = []
    for e in net.elements:
        if e.kind is Kind.VARACTOR:
            m = e.varactor.model
            mname = e.model if e.model and net.models.get(e.model) == m else names.get(m)
            if mname is None:
                mname = f"m{e.name.lower()}"
                while mname.lower() in {n.lower() for n in names.values()}:
                    mname += "_"
                names[m] = mname
            used.add((mname, m))
            parts = [e.name, str(e.node_a), str(e.node_b), f"model={mname}"]
            if net.v_bias is None or e.varactor.v_dc != net.v_bias:
                parts.append(f"vdc={fmt(e.varactor.v_dc)}")
            parts.append(f"fref={fmt(e.f_ref)}")
            body.append(" ".join(parts))
        elif e.is_source:
            parts = [e.name, str(e.node_a), str(e.node_b), fmt(e.value), f"p={fmt(e.power)}",
                     f"z={fmt(e.z_src)}"]
            if e.phase:
                parts.append(f"phase={fmt(e.phase)}")
            body.append(" ".join(parts))
        else:
            parts = [e.name, str(e.node_a), str(e.node_b), fmt(e.value)]
            if e.q is not None:
                parts.append(f"q={fmt(e.q)}")
            if e.f_ref is not None:
                parts.append(f"fref={fmt(e.f_ref)}")
            body.append(" ".join(parts))
    seen = set()
    for mname, m in sorted(used, key=lambda t: t[0]):
        if mname not in seen:
            seen.add(mname)
            lines.append(_model_line(mname, m))
    lines += body
    lines += [f".port {p.node} 0 {fmt(p.z0)}" for p in net.ports]
    return "\n".join(lines) + "\n"


def write_netlist(net: Netlist, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_netlist(net))


def structurally_equal(a: Netlist, b: Netlist) -> bool:
    """Same elements, ports, bias, reference frequency and title (model names ignored)."""
    strip = [dataclasses.replace(e, model=None) for e in a.elements]
    strip_b = [dataclasses.replace(e, model=None) for e in b.elements]
    return (strip == strip_b and a.ports == b.ports and a.v_bias == b.v_bias
            and a.f_ref == b.f_ref and a.title == b.title)
