"""Reading and writing networks, graphs and result tables.

Formats
-------
BIF (subset): one ``network`` block, ``variable`` blocks with
``type discrete [ k ] { s1, s2, ... };`` and ``probability`` blocks holding
either ``table p1, p2, ...;``, ``default p1, ...;`` or per-configuration rows
``(s_a, s_b) p1, p2, ...;``. ``property`` lines and ``//`` / ``/* */``
comments are skipped. A conditional ``table`` lists one child state at a
time, each followed by all parent configurations with the last parent
varying fastest. Rows are renormalized if they sum to 1 within 1e-3 and
rejected otherwise.

JSON: ``{"schema_version": 1, "kind": "discrete" | "asgn", ...}``; see
:func:`serialize_network`. CPT rows follow the in-memory layout: parents
sorted by vertex id, lowest-indexed parent varying fastest.

Edge list: a header ``n <count>`` then one ``i j`` pair per line.
"""
from __future__ import annotations

import bisect
import csv
import io
import json
import logging
import math
import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .asgn import NOISE_KINDS, AsgnNetwork
from .discrete_cbn import DiscreteCbn
from .errors import (
    BifSyntaxError,
    SchemaVersionError,
    UnsupportedFeatureError,
    ValidationError,
)
from .graph import Dag

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
RENORM_TOL = 1e-3
BUNDLED = ("asia", "cancer", "earthquake", "child", "insurance")


@dataclass
class NamedNetwork:
    """A network together with its name and vertex labels."""

    name: str
    kind: str
    payload: DiscreteCbn | AsgnNetwork
    node_names: list[str]
    state_names: list[list[str]] | None = field(default=None)

    def __post_init__(self):
        if self.kind not in ("discrete", "asgn"):
            raise ValidationError(f"unknown network kind {self.kind!r}")
        if len(self.node_names) != self.payload.n:
            raise ValidationError("need exactly one label per vertex")
        if len(set(self.node_names)) != len(self.node_names):
            raise ValidationError("vertex labels must be unique")
        if self.state_names is not None:
            if self.kind != "discrete":
                raise ValidationError("state names apply to discrete networks only")
            for i, states in enumerate(self.state_names):
                if len(states) != self.payload.domain_sizes[i]:
                    raise ValidationError(f"state names of {self.node_names[i]} do not match its domain")

    @property
    def dag(self) -> Dag:
        return self.payload.dag

    def index(self, name: str) -> int:
        try:
            return self.node_names.index(name)
        except ValueError:
            raise ValidationError(f"no vertex named {name!r}") from None


# --------------------------------------------------------------------------- BIF

_TOKEN = re.compile(
    r'(?P<skip>\s+|//[^\n]*|/\*.*?\*/)'
    r'|(?P<str>"(?:[^"\\]|\\.)*")'
    r'|(?P<punct>[{}()\[\];,|])'
    r'|(?P<word>[^\s{}()\[\];,|"]+)',
    re.S,
)


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.line_starts = [0] + [m.end() for m in re.finditer("\n", text)]
        self.items: list[tuple[str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                raise self.error("unrecognized input", pos)
            if m.lastgroup != "skip":
                self.items.append((m.group(), pos))
            pos = m.end()
        self.i = 0

    def where(self, pos: int) -> tuple[int, int]:
        line = bisect.bisect_right(self.line_starts, pos)
        return line, pos - self.line_starts[line - 1] + 1

    def error(self, msg: str, pos: int | None = None) -> BifSyntaxError:
        if pos is None:
            pos = self.items[self.i][1] if self.i < len(self.items) else len(self.text)
        line, col = self.where(pos)
        return BifSyntaxError(msg, line, col)

    def peek(self) -> str | None:
        return self.items[self.i][0] if self.i < len(self.items) else None

    def next(self) -> str:
        if self.i >= len(self.items):
            raise self.error("unexpected end of input")
        tok = self.items[self.i][0]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        tok = self.peek()
        if tok != value:
            found = "end of input" if tok is None else repr(tok)
            raise self.error(f"expected {value!r}, found {found}")
        self.i += 1

    def word(self, what: str) -> str:
        tok = self.peek()
        if tok is None or tok in "{}()[];,|":
            raise self.error(f"expected {what}")
        self.i += 1
        return tok

    def number(self) -> float:
        tok = self.peek()
        try:
            val = float(tok) if tok is not None else None
        except ValueError:
            val = None
        if val is None:
            raise self.error("expected a number")
        self.i += 1
        return val

    def skip_statement(self) -> None:
        while self.next() != ";":
            pass


def _parse_numbers(tk: _Tokens) -> list[float]:
    """Numbers up to ``;``, separated by commas or whitespace."""
    vals = [tk.number()]
    while tk.peek() != ";":
        if tk.peek() == ",":
            tk.next()
        vals.append(tk.number())
    tk.expect(";")
    return vals


def parse_bif(text: str, name: str | None = None) -> NamedNetwork:
    """Parse a discrete network in BIF; see the module docstring for the subset."""
    tk = _Tokens(text)
    net_name = name
    variables: dict[str, list[str]] = {}
    order: list[str] = []
    blocks: dict[str, tuple[list[str], list, int]] = {}

    while tk.peek() is not None:
        kw = tk.next()
        if kw == "network":
            label = tk.word("network name") if tk.peek() != "{" else None
            net_name = net_name or label
            tk.expect("{")
            while tk.peek() != "}":
                if tk.peek() is None:
                    raise tk.error("unterminated network block")
                tk.skip_statement()
            tk.expect("}")
        elif kw == "variable":
            pos = tk.items[tk.i][1] if tk.i < len(tk.items) else len(text)
            var = tk.word("variable name")
            if var in variables:
                raise tk.error(f"variable {var!r} declared twice", pos)
            tk.expect("{")
            states = None
            while tk.peek() != "}":
                head = tk.peek()
                if head is None:
                    raise tk.error("unterminated variable block")
                if head == "type":
                    tk.next()
                    kind = tk.word("variable type")
                    if kind != "discrete":
                        raise UnsupportedFeatureError(
                            f"variable {var!r} has unsupported type {kind!r}"
                        )
                    tk.expect("[")
                    k = tk.word("domain size")
                    if not k.isdigit():
                        raise tk.error("domain size must be an integer")
                    tk.expect("]")
                    tk.expect("{")
                    states = []
                    while tk.peek() != "}":
                        states.append(tk.word("state name"))
                        if tk.peek() == ",":
                            tk.next()
                    tk.expect("}")
                    tk.expect(";")
                    if len(states) != int(k):
                        raise tk.error(f"variable {var!r} declares {k} states but lists {len(states)}")
                    if len(set(states)) != len(states):
                        raise tk.error(f"variable {var!r} has repeated state names")
                else:
                    tk.skip_statement()
            tk.expect("}")
            if states is None:
                raise tk.error(f"variable {var!r} has no type declaration")
            variables[var] = states
            order.append(var)
        elif kw == "probability":
            tk.expect("(")
            child = tk.word("variable name")
            if child not in variables:
                raise tk.error(f"probability block for undeclared variable {child!r}")
            if child in blocks:
                raise tk.error(f"second probability block for {child!r}")
            parents: list[str] = []
            if tk.peek() == "|":
                tk.next()
            while tk.peek() != ")":
                p = tk.word("parent name")
                if p not in variables:
                    raise tk.error(f"unknown parent {p!r}")
                parents.append(p)
                if tk.peek() == ",":
                    tk.next()
            tk.expect(")")
            if len(set(parents)) != len(parents) or child in parents:
                raise tk.error(f"bad parent list for {child!r}")
            tk.expect("{")
            entries: list = []
            while tk.peek() != "}":
                head = tk.peek()
                if head is None:
                    raise tk.error("unterminated probability block")
                pos = tk.items[tk.i][1]
                if head == "table":
                    tk.next()
                    entries.append(("table", _parse_numbers(tk), pos))
                elif head == "default":
                    tk.next()
                    entries.append(("default", _parse_numbers(tk), pos))
                elif head == "(":
                    tk.next()
                    cfg = []
                    while tk.peek() != ")":
                        cfg.append(tk.word("state name"))
                        if tk.peek() == ",":
                            tk.next()
                    tk.expect(")")
                    entries.append(("row", (cfg, _parse_numbers(tk)), pos))
                elif head == "property":
                    tk.skip_statement()
                else:
                    raise tk.error(f"unexpected {head!r} in probability block")
            tk.expect("}")
            blocks[child] = (parents, entries, tk.where(tk.items[tk.i - 1][1])[0])
        else:
            tk.i -= 1
            raise tk.error(f"unexpected {kw!r} at top level")

    missing = [v for v in order if v not in blocks]
    if missing:
        raise ValidationError(f"no probability block for {missing}")
    return _build_bif_network(net_name or "network", order, variables, blocks, tk)


def _build_bif_network(name, order, variables, blocks, tk) -> NamedNetwork:
    index = {v: k for k, v in enumerate(order)}
    sizes = [len(variables[v]) for v in order]
    edges = [(index[p], index[c]) for c in order for p in blocks[c][0]]
    dag = Dag(len(order), edges)
    cpts = []
    renormalized = 0
    for child in order:
        parents, entries, _ = blocks[child]
        d = len(variables[child])
        pdims = [len(variables[p]) for p in parents]
        arr = np.full(pdims + [d], np.nan)
        for kind, payload, pos in entries:
            if kind == "table":
                vals = np.asarray(payload)
                if vals.size != d * math.prod(pdims):
                    raise tk.error(
                        f"table for {child!r} has {vals.size} entries, expected {d * math.prod(pdims)}", pos
                    )
                arr = np.moveaxis(vals.reshape([d] + pdims), 0, -1).copy()
            elif kind == "default":
                if len(payload) != d:
                    raise tk.error(f"default row for {child!r} must have {d} entries", pos)
                unset = np.isnan(arr[..., 0])
                arr[unset] = payload
            else:
                cfg, vals = payload
                if len(cfg) != len(parents):
                    raise tk.error(f"row for {child!r} names {len(cfg)} parent states, expected {len(parents)}", pos)
                if len(vals) != d:
                    raise tk.error(f"row for {child!r} has {len(vals)} entries, expected {d}", pos)
                try:
                    key = tuple(variables[p].index(s) for p, s in zip(parents, cfg))
                except ValueError:
                    raise tk.error(f"unknown parent state in row for {child!r}", pos) from None
                arr[key] = vals
        if np.isnan(arr).any():
            raise ValidationError(f"probability table of {child!r} is incomplete")
        # reorder parents ascending by vertex id, then flatten with the lowest id fastest
        perm = sorted(range(len(parents)), key=lambda k: index[parents[k]])
        arr = np.transpose(arr, perm + [len(parents)])
        rows = np.transpose(arr, list(range(len(parents) - 1, -1, -1)) + [len(parents)]).reshape(-1, d)
        sums = rows.sum(axis=1)
        if np.any(rows < 0):
            raise ValidationError(f"negative probability for {child!r}")
        worst = float(np.max(np.abs(sums - 1.0)))
        if worst > RENORM_TOL:
            raise ValidationError(f"a row of {child!r} sums to {sums[np.argmax(np.abs(sums - 1.0))]!r}")
        if worst > 0:
            renormalized += 1
            rows = rows / sums[:, None]
        cpts.append(rows)
    if renormalized:
        log.info("%s: renormalized rows of %d CPTs", name, renormalized)
    cbn = DiscreteCbn(dag, sizes, cpts)
    return NamedNetwork(name, "discrete", cbn, list(order), [list(variables[v]) for v in order])


# --------------------------------------------------------------------------- JSON


def serialize_network(net: NamedNetwork, sparse: bool = True) -> str:
    """Versioned JSON text. Floats are written with round-trip precision."""
    g = net.payload.dag
    doc: dict = {
        "schema_version": SCHEMA_VERSION,
        "kind": net.kind,
        "name": net.name,
        "nodes": list(net.node_names),
        "edges": [list(e) for e in g.sorted_edges()],
    }
    if net.kind == "discrete":
        cbn: DiscreteCbn = net.payload
        doc["domain_sizes"] = list(cbn.domain_sizes)
        if net.state_names is not None:
            doc["states"] = [list(s) for s in net.state_names]
        doc["cpts"] = [t.tolist() for t in cbn.cpts]
    else:
        a: AsgnNetwork = net.payload
        doc["noise_kind"] = a.noise_kind
        doc["noise_variances"] = a.noise_variances.tolist()
        if sparse:
            rows, cols = np.nonzero(a.W)
            doc["weights"] = {
                "encoding": "sparse",
                "entries": [[int(i), int(j), float(a.W[i, j])] for i, j in zip(rows, cols)],
            }
        else:
            doc["weights"] = {"encoding": "dense", "matrix": a.W.tolist()}
    return json.dumps(doc, indent=1) + "\n"


def parse_network(text: str) -> NamedNetwork:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ValidationError("network document must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"unsupported schema_version {version!r}; expected {SCHEMA_VERSION}")
    try:
        kind = doc["kind"]
        nodes = [str(s) for s in doc["nodes"]]
        dag = Dag(len(nodes), [tuple(e) for e in doc["edges"]])
        if kind == "discrete":
            cbn = DiscreteCbn(dag, doc["domain_sizes"], [np.asarray(t, dtype=float) for t in doc["cpts"]])
            return NamedNetwork(doc.get("name", "network"), kind, cbn, nodes, doc.get("states"))
        if kind == "asgn":
            w = doc["weights"]
            if w.get("encoding") == "dense":
                W = np.asarray(w["matrix"], dtype=float)
            elif w.get("encoding") == "sparse":
                W = np.zeros((len(nodes), len(nodes)))
                for i, j, val in w["entries"]:
                    W[int(i), int(j)] = float(val)
            else:
                raise ValidationError(f"unknown weight encoding {w.get('encoding')!r}")
            noise = doc.get("noise_kind", "gaussian")
            if noise not in NOISE_KINDS:
                raise ValidationError(f"unknown noise kind {noise!r}")
            a = AsgnNetwork(dag, W, doc["noise_variances"], noise)
            return NamedNetwork(doc.get("name", "network"), kind, a, nodes)
    except (KeyError, TypeError, IndexError) as exc:
        raise ValidationError(f"malformed network document: {exc!r}") from None
    raise ValidationError(f"unknown network kind {kind!r}")


def named(payload: DiscreteCbn | AsgnNetwork, name: str = "network") -> NamedNetwork:
    kind = "discrete" if isinstance(payload, DiscreteCbn) else "asgn"
    return NamedNetwork(name, kind, payload, [f"X{k}" for k in range(payload.n)])


# --------------------------------------------------------------------------- graphs


def write_edge_list(g: Dag) -> str:
    lines = [f"n {g.n}"] + [f"{a} {b}" for a, b in g.sorted_edges()]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Dag:
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or len(lines[0]) != 2 or lines[0][0] != "n":
        raise ValidationError("edge list must start with a line 'n <count>'")
    try:
        n = int(lines[0][1])
        edges = []
        for k, parts in enumerate(lines[1:], start=2):
            if len(parts) != 2:
                raise ValidationError(f"edge line {k} must hold two integers")
            edges.append((int(parts[0]), int(parts[1])))
    except ValueError as exc:
        raise ValidationError(f"bad integer in edge list: {exc}") from None
    return Dag(n, edges)


def _dot_id(s: str) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(g: Dag, names: Sequence[str] | None = None, title: str = "G") -> str:
    """DOT digraph with nodes in id order and edges sorted."""
    names = [str(k) for k in range(g.n)] if names is None else list(names)
    if len(names) != g.n:
        raise ValidationError("need one name per vertex")
    out = [f"digraph {_dot_id(title)} {{"]
    out += [f"  {_dot_id(s)};" for s in names]
    out += [f"  {_dot_id(names[a])} -> {_dot_id(names[b])};" for a, b in g.sorted_edges()]
    out.append("}")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------- tables

CURVE_HEADER = ("n", "C", "m", "trials", "successes", "frequency")


def write_curve_csv(rows: Iterable) -> str:
    """Phase-transition rows ``(n, C, m, trials, successes)`` as CSV text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    for row in rows:
        if isinstance(row, Mapping):
            n, C, m, trials, succ = (row[k] for k in CURVE_HEADER[:5])
        else:
            n, C, m, trials, succ = tuple(row)[:5]
        if trials < 1:
            raise ValidationError(f"row (n={n}, C={C}) has no trials")
        if not 0 <= succ <= trials:
            raise ValidationError(f"row (n={n}, C={C}) has successes outside [0, trials]")
        w.writerow([n, C, m, trials, succ, repr(succ / trials)])
    return buf.getvalue()


def write_cpt_csv(cbn: DiscreteCbn, names: Sequence[str] | None = None) -> str:
    """Long-format CPT dump: ``node,parent_config,value,probability``."""
    names = [str(k) for k in range(cbn.n)] if names is None else names
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node", "parent_config", "value", "probability"])
    for i, t in enumerate(cbn.cpts):
        for c, row in enumerate(t):
            for v, p in enumerate(row):
                w.writerow([names[i], c, v, repr(float(p))])
    return buf.getvalue()


def write_rows_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def read_recorded_csv(text: str, n: int, domain_sizes: Sequence[int] | None = None):
    """Recorded interventional data as a sampler.

    Header: ``intervention`` followed by one column per vertex. The
    ``intervention`` cell is empty for observational rows or lists
    ``node=value`` pairs separated by ``;``.
    """
    from .queries import RecordedSampler

    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or header[0] != "intervention" or len(header) != n + 1:
        raise ValidationError(f"recorded data needs an 'intervention' column and {n} variable columns")
    groups: dict[tuple, list] = {}
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != n + 1:
            raise ValidationError(f"line {lineno}: expected {n + 1} fields")
        key = []
        for part in filter(None, rec[0].split(";")):
            node, _, val = part.partition("=")
            key.append((int(node), float(val)))
        groups.setdefault(tuple(sorted(key)), []).append([float(x) for x in rec[1:]])
    return RecordedSampler(n, {k: np.asarray(v) for k, v in groups.items()}, domain_sizes)


# --------------------------------------------------------------------------- files


def bundled_networks() -> tuple[str, ...]:
    return BUNDLED


def load_bundled(name: str) -> NamedNetwork:
    """One of the small benchmark networks shipped with the package."""
    key = name.lower()
    if key not in BUNDLED:
        raise ValidationError(f"no bundled network {name!r}; available: {', '.join(BUNDLED)}")
    text = resources.files("pathlearn.data").joinpath(f"{key}.bif").read_text(encoding="utf-8")
    return parse_bif(text, name=key)


def load_network(path: str | Path) -> NamedNetwork:
    """Load ``.bif`` or ``.json``; a bare bundled name such as ``asia`` also works."""
    p = Path(path)
    if not p.exists() and str(path).lower() in BUNDLED:
        return load_bundled(str(path))
    text = p.read_text(encoding="utf-8")
    if p.suffix.lower() == ".bif":
        return parse_bif(text, name=p.stem)
    return parse_network(text)
