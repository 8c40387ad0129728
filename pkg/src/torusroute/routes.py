"""Routes in first-step / body / last-step decomposed form, and routing tables."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import IntegrityError, ParseError
from .routing_graph import RoutingGraph, VKind, vec_last_direction, vec_to_code
from .topology import Topology, parse_direction

CdgEdge = tuple[tuple[int, int], tuple[int, int]]


@dataclass(frozen=True)
class Route:
    src: int
    dst: int
    fs: int | None
    body: tuple[int, ...]
    ls: int | None
    node_seq: tuple[int, ...]

    @property
    def steps(self) -> tuple[int, ...]:
        out = () if self.fs is None else (self.fs,)
        out += self.body
        if self.ls is not None:
            out += (self.ls,)
        return out

    def __len__(self) -> int:
        return len(self.node_seq) - 1


def make_route(t: Topology, src: int, fs: int | None, body: Iterable[int],
               ls: int | None) -> Route:
    """Build a Route by walking the steps from src (no rule checking)."""
    body = tuple(body)
    seq = [src]
    steps = (() if fs is None else (fs,)) + body + (() if ls is None else (ls,))
    for d in steps:
        v = t.neighbor(seq[-1], d)
        if v is None:
            raise ValueError(
                f"step {t.dir_name(d)} from {t.coord_str(seq[-1])} is dead")
        seq.append(v)
    return Route(src, seq[-1], fs, body, ls, tuple(seq))


def decode_rg_path(rg: RoutingGraph, path: list[int]) -> Route:
    """Route encoded by a begin -> ... -> end vertex path.

    The step into a DIRBIT vertex always equals the greatest direction of its
    sign vector, so directions are read off the vertex kinds alone.
    """
    t = rg.topology
    infos = [rg.vertex_info(v) for v in path]
    kinds = [i.kind for i in infos]
    if (len(kinds) < 2 or kinds[0] is not VKind.BEGIN
            or kinds[-1] is not VKind.END):
        raise ValueError("path must run begin -> ... -> end")
    fs = None
    ls = None
    body: list[int] = []
    seq = [infos[0].node]
    state = VKind.BEGIN
    for info in infos[1:-1]:
        if info.kind is VKind.FS:
            if state is not VKind.BEGIN:
                raise ValueError("first-step vertex not directly after begin")
            fs = info.direction
        elif info.kind is VKind.DIRBIT:
            if state not in (VKind.BEGIN, VKind.FS, VKind.DIRBIT):
                raise ValueError("body vertex after a last step")
            body.append(vec_last_direction(info.vec, t.n))
        elif info.kind is VKind.LS:
            if state is not VKind.DIRBIT:
                raise ValueError("last-step vertex without a route body")
            ls = info.direction
        else:
            raise ValueError(f"unexpected {info.kind.name} vertex inside path")
        state = info.kind
        seq.append(info.node)
    if infos[-1].node != seq[-1]:
        raise ValueError("end vertex is not at the final node")
    return Route(infos[0].node, infos[-1].node, fs, tuple(body), ls,
                 tuple(seq))


def legal_encodings(t: Topology, src: int, steps: tuple[int, ...],
                    relaxed=frozenset(), first_only: bool = False):
    """(node sequence, every legal (fs, body, ls) decomposition of ``steps``).

    Decompositions are ordered by how many non-standard steps they spend:
    plain body first, then first step, last step, both. Encoding-count
    analysis relies on this list being exactly the routing-graph encodings.
    """
    n = t.n
    nbr = t.neighbor_table
    seq = [src]
    for d in steps:
        v = int(nbr[seq[-1], d])
        if v < 0:
            raise ValueError(
                f"step {t.dir_name(d)} from {t.coord_str(seq[-1])} is dead")
        seq.append(v)

    def body_ok(body):
        vec = {}
        prev = None
        for d in body:
            dim, sign = d % n, d < n
            if prev is not None and d < prev:
                return False
            if vec.get(dim, sign) != sign:
                return False
            vec[dim] = sign
            prev = d
        return True

    def turn_ok(tail_node, a, node, b):
        if a < b and b != t.opposite(a):
            return True
        return ((tail_node, a), (node, b)) in relaxed

    k = len(steps)
    candidates = [(None, steps, None)]
    if k == 1 and steps[0] < n:
        candidates.append((steps[0], (), None))  # lone first step
    if k >= 2 and steps[0] < n:
        candidates.append((steps[0], steps[1:], None))
    if k >= 2 and steps[-1] >= n:
        candidates.append((None, steps[:-1], steps[-1]))
    if k >= 3 and steps[0] < n and steps[-1] >= n:
        candidates.append((steps[0], steps[1:-1], steps[-1]))
    out = []
    for fs, body, ls in candidates:
        if not body_ok(body):
            continue
        if fs is not None and body and not turn_ok(seq[0], fs, seq[1], body[0]):
            continue
        if ls is not None and not turn_ok(seq[-3], body[-1], seq[-2], ls):
            continue
        out.append((fs, tuple(body), ls))
        if first_only:
            break
    return seq, out


def preferred_encoding(t: Topology, src: int, steps: tuple[int, ...],
                       relaxed: Iterable[CdgEdge] = ()) -> Route:
    """Route with the fewest non-standard steps that legally encodes ``steps``.

    A plain body is preferred; a first or last step is used only when the
    direction order or the direction-bit rule forces it. Raises ValueError
    when no decomposition is rule-legal.
    """
    relaxed = relaxed if isinstance(relaxed, (set, frozenset)) else set(relaxed)
    seq, encodings = legal_encodings(t, src, tuple(steps), relaxed,
                                     first_only=True)
    if not encodings:
        raise ValueError(
            f"steps {[t.dir_name(d) for d in steps]} admit no rule-legal "
            "encoding")
    fs, body, ls = encodings[0]
    return Route(src, seq[-1], fs, body, ls, tuple(seq))


def route_to_rg_path(rg: RoutingGraph, r: Route) -> list[int]:
    """Vertex path of a route in the routing graph (inverse of decode)."""
    t = rg.topology
    path = [rg.begin_vid(r.src)]
    node = r.src
    if r.fs is not None:
        node = t.neighbor(node, r.fs)
        path.append(rg.fs_vid(node, r.fs))
    vec = [0] * t.n
    for d in r.body:
        node = t.neighbor(node, d)
        vec[d % t.n] = 1 if d < t.n else -1
        path.append(rg.dirbit_vid(node, vec_to_code(vec)))
    if r.ls is not None:
        node = t.neighbor(node, r.ls)
        path.append(rg.ls_vid(node, r.ls))
    path.append(rg.end_vid(node))
    return path


def validate_route(t: Topology, r: Route,
                   relaxed_turns: Iterable[CdgEdge] = ()) -> list[str]:
    """Rule violations of a route; empty list means the route is valid.

    ``relaxed_turns`` are the dependency-graph edges added by augmentation;
    an order-violating first or last step is legal only when its exact turn
    is registered there.
    """
    relaxed = set(relaxed_turns)
    n = t.n
    problems: list[str] = []

    def dead(u, d):
        return t.neighbor_table[u, d] < 0

    # shape
    if not r.body and not (r.fs is not None and r.ls is None):
        if r.fs is None and r.ls is None:
            problems.append("empty route (src == dst forms no table entry)")
        else:
            problems.append("last step requires a nonempty body")
        return problems

    # liveness of the node sequence
    seq = [r.src]
    for i, d in enumerate(r.steps):
        u = seq[-1]
        if u in t.failed_nodes or dead(u, d):
            problems.append(
                f"step {i + 1} ({t.dir_name(d)} from {t.coord_str(u)}) uses a "
                "dead link")
            return problems
        seq.append(int(t.neighbor_table[u, d]))
    if tuple(seq) != r.node_seq:
        problems.append("node_seq does not match the steps")
    if seq[-1] != r.dst:
        problems.append("route does not end at dst")

    if r.fs is not None and r.fs >= n:
        problems.append("first step must be a positive direction")
    if r.ls is not None and r.ls < n:
        problems.append("last step must be a negative direction")

    # body: non-decreasing order, one sign per dimension
    vec = [0] * n
    prev = None
    for i, d in enumerate(r.body):
        sign = 1 if d < n else -1
        if vec[d % n] not in (0, sign):
            problems.append(
                f"body step {i + 1} ({t.dir_name(d)}) reuses dimension "
                f"{d % n + 1} with the opposite sign")
        if prev is not None and d < prev:
            problems.append(
                f"body step {i + 1} ({t.dir_name(d)}) violates the direction "
                "order")
        vec[d % n] = sign
        prev = d

    # first-step turn: strictly ascending and not a U-turn, else registered
    if r.fs is not None and r.body:
        b1 = r.body[0]
        if not (r.fs < b1 and b1 != t.opposite(r.fs)):
            if ((r.src, r.fs), (seq[1], b1)) not in relaxed:
                problems.append(
                    f"first-step turn {t.dir_name(r.fs)}->{t.dir_name(b1)} "
                    "is not a registered relaxed turn")

    # last-step turn, symmetric
    if r.ls is not None:
        last = r.body[-1]
        if not (last < r.ls and r.ls != t.opposite(last)):
            if ((seq[-3], last), (seq[-2], r.ls)) not in relaxed:
                problems.append(
                    f"last-step turn {t.dir_name(last)}->{t.dir_name(r.ls)} "
                    "is not a registered relaxed turn")

    return problems


class RoutingTable:
    """Exactly one route per ordered node pair, plus generation statistics."""

    def __init__(self, topology: Topology, routes: Mapping[tuple[int, int], Route],
                 stats=None):
        self.topology = topology
        self.routes = dict(routes)
        self.stats = stats
        self._link_ids = None

    def route(self, src: int, dst: int) -> Route:
        return self.routes[(src, dst)]

    def pairs(self):
        return self.routes.keys()

    def __len__(self):
        return len(self.routes)

    def link_ids(self):
        """Channel ids crossed by every route, concatenated (cached)."""
        if self._link_ids is None:
            t = self.topology
            ids = []
            for (_, _), r in sorted(self.routes.items()):
                node = r.src
                for d in r.steps:
                    cid = int(t.channel_table[node, d])
                    if cid < 0:
                        raise IntegrityError(
                            f"route {t.coord_str(r.src)}->{t.coord_str(r.dst)}"
                            f" crosses dead channel "
                            f"{t.coord_str(node)}{t.dir_name(d)}")
                    ids.append(cid)
                    node = int(t.neighbor_table[node, d])
            self._link_ids = np.asarray(ids, dtype=np.int64)
        return self._link_ids


def check_table(t: Topology, rt: RoutingTable,
                relaxed_turns: Iterable[CdgEdge] = ()) -> dict[str, list[str]]:
    """Completeness, minimality and rule validity; empty lists mean pass."""
    relaxed = set(relaxed_turns)
    report = {"completeness": [], "minimality": [], "validity": []}
    live = t.live_nodes
    for s in live:
        for d in live:
            if s != d and (s, d) not in rt.routes:
                report["completeness"].append(
                    f"missing pair {t.coord_str(s)}->{t.coord_str(d)}")
    for (s, d), r in sorted(rt.routes.items()):
        if (s, d) != (r.src, r.dst):
            report["validity"].append(f"route stored under wrong pair {s}->{d}")
        want = t.distance(s, d)
        if want is None or len(r) != want:
            report["minimality"].append(
                f"{t.coord_str(s)}->{t.coord_str(d)}: length {len(r)}, "
                f"minimal {want}")
        for msg in validate_route(t, r, relaxed):
            report["validity"].append(
                f"{t.coord_str(s)}->{t.coord_str(d)}: {msg}")
    return report


# -- table files -------------------------------------------------------------

def _route_line(t: Topology, r: Route) -> str:
    parts = []
    if r.fs is not None:
        parts.append("FS" + t.dir_name(r.fs))
    parts.extend(t.dir_name(d) for d in r.body)
    if r.ls is not None:
        parts.append("LS" + t.dir_name(r.ls))
    nodes = " ".join(t.coord_str(u) for u in r.node_seq)
    return (f"{t.coord_str(r.src)} -> {t.coord_str(r.dst)} : "
            f"{' '.join(parts)} | nodes: {nodes}")


def table_to_text(rt: RoutingTable) -> str:
    t = rt.topology
    lines = [_route_line(t, rt.routes[key]) for key in sorted(rt.routes)]
    return "\n".join(lines) + "\n"


def write_table(rt: RoutingTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(table_to_text(rt))


def _parse_coord(token: str, t: Topology) -> int:
    token = token.strip()
    if not (token.startswith("(") and token.endswith(")")):
        raise ParseError(f"bad coordinate {token!r}")
    try:
        coords = tuple(int(x) for x in token[1:-1].split(","))
        return t.node_id(coords)
    except Exception as exc:
        raise ParseError(f"bad coordinate {token!r}") from exc


def parse_table(text: str, t: Topology) -> RoutingTable:
    routes = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            head, _, nodes_part = line.partition(" | nodes: ")
            pair_part, _, steps_part = head.partition(" : ")
            src_s, _, dst_s = pair_part.partition(" -> ")
            src = _parse_coord(src_s, t)
            dst = _parse_coord(dst_s, t)
            fs = ls = None
            body = []
            for tok in steps_part.split():
                if tok.startswith("FS"):
                    fs = parse_direction(tok[2:], t.n)
                elif tok.startswith("LS"):
                    ls = parse_direction(tok[2:], t.n)
                else:
                    body.append(parse_direction(tok, t.n))
            seq = tuple(_parse_coord(tok, t) for tok in nodes_part.split())
            if not seq:
                raise ParseError("missing node sequence")
        except ParseError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
        routes[(src, dst)] = Route(src, dst, fs, tuple(body), ls, seq)
    return RoutingTable(t, routes)


def load_table(path, t: Topology) -> RoutingTable:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_table(fh.read(), t)
