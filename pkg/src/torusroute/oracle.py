"""Brute-force route enumeration directly on the topology.

This is the independent side of the differential check: it never touches the
routing graph. Routes are enumerated as direction sequences in rule shape
(optional positive first step, a non-decreasing direction-bit-compliant body,
optional negative last step), pruned by link-graph distance, and deduplicated
by their physical step sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .algorithms import _bfs_count, _dedupe_physical, _enumerate_rg_paths
from .routing_graph import RoutingGraph, apply_augmentation, build_routing_graph
from .topology import Topology

CdgEdge = tuple[tuple[int, int], tuple[int, int]]


@dataclass(frozen=True)
class RuleConfig:
    allow_fs: bool = True
    allow_ls: bool = True
    relaxed_turns: frozenset[CdgEdge] = frozenset()

    @staticmethod
    def plain() -> "RuleConfig":
        return RuleConfig()

    @staticmethod
    def augmented(added) -> "RuleConfig":
        return RuleConfig(relaxed_turns=frozenset(added))


def brute_force_routes(t: Topology, src: int, dst: int, rules: RuleConfig,
                       max_len: int) -> list[tuple[int, ...]]:
    """All rule-valid direction sequences src -> dst up to max_len hops."""
    n = t.n
    nbr = t.neighbor_table
    dist_to_dst = [None if u in t.failed_nodes else t.distance(u, dst)
                   for u in range(t.num_coords)]
    relaxed = rules.relaxed_turns
    found: set[tuple[int, ...]] = set()

    def feasible(node: int, used: int) -> bool:
        d = dist_to_dst[node]
        return d is not None and used + d <= max_len

    def body(node: int, seq: list[int], vec: list[int], fs: int | None,
             fs_node: int, tail_node: int):
        prefix = () if fs is None else (fs,)
        total = len(prefix) + len(seq)
        if node == dst and seq:
            found.add(prefix + tuple(seq))
        if seq and rules.allow_ls and total + 1 <= max_len:
            last = seq[-1]
            for ld in range(n, 2 * n):
                if nbr[node, ld] != dst:
                    continue
                ok = last < ld and ld != t.opposite(last)
                if not ok and ((tail_node, last), (node, ld)) not in relaxed:
                    continue
                found.add(prefix + tuple(seq) + (ld,))
        if total >= max_len:
            return
        last = seq[-1] if seq else None
        for d in range(2 * n):
            v = nbr[node, d]
            if v < 0 or not feasible(int(v), total + 1):
                continue
            if not seq:
                if fs is not None:
                    ok = fs < d and d != t.opposite(fs)
                    if not ok and ((fs_node, fs), (node, d)) not in relaxed:
                        continue
            else:
                if d < last:
                    continue
                if d != last and vec[d % n] != 0:
                    continue
            old = vec[d % n]
            vec[d % n] = 1 if d < n else -1
            seq.append(d)
            body(int(v), seq, vec, fs, fs_node, node)
            seq.pop()
            vec[d % n] = old

    if feasible(src, 0):
        body(src, [], [0] * n, None, -1, -1)
    if rules.allow_fs and max_len >= 1:
        for fd in range(n):
            v = nbr[src, fd]
            if v < 0:
                continue
            if v == dst:
                found.add((fd,))  # a route may be a lone first step
            if feasible(int(v), 1):
                body(int(v), [], [0] * n, fd, src, src)
    return sorted(found)


def min_routes(t: Topology, src: int, dst: int, rules: RuleConfig,
               max_len: int):
    """(minimal length, minimal route set) within max_len, or (None, [])."""
    all_routes = brute_force_routes(t, src, dst, rules, max_len)
    if not all_routes:
        return None, []
    best = min(len(r) for r in all_routes)
    return best, [r for r in all_routes if len(r) == best]


@dataclass
class EquivalenceReport:
    pairs_checked: int = 0
    mismatches: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def oracle_equivalence(t: Topology, rules: RuleConfig,
                       rg: RoutingGraph | None = None,
                       max_extra: int = 2) -> EquivalenceReport:
    """Compare existence, minimal length and minimal route count per pair."""
    if len(t.live_nodes) > 64:
        raise ValueError("oracle equivalence is guarded to <= 64 nodes")
    if rg is None:
        rg = build_routing_graph(t)
        if rules.relaxed_turns:
            rg = apply_augmentation(rg, sorted(rules.relaxed_turns))
    diameter = t.diameter()
    report = EquivalenceReport()
    for src in t.live_nodes:
        dist, _, _ = _bfs_count(rg, src)
        begin = rg.begin_vid(src)
        for dst in t.live_nodes:
            if dst == src:
                continue
            report.pairs_checked += 1
            evid = rg.end_vid(dst)
            rg_len = int(dist[evid]) - 1 if dist[evid] >= 0 else None
            pair = f"{t.coord_str(src)}->{t.coord_str(dst)}"
            if rg_len is None:
                routes = brute_force_routes(t, src, dst, rules,
                                            diameter + max_extra)
                if routes:
                    report.mismatches.append(
                        f"{pair}: oracle finds length {min(map(len, routes))}"
                        " but the routing graph finds nothing")
                continue
            paths, truncated = _enumerate_rg_paths(rg, dist, begin, evid,
                                                   budget=100000)
            if truncated:
                report.mismatches.append(f"{pair}: enumeration budget hit")
                continue
            rg_routes = {r.steps for r in _dedupe_physical(rg, paths)}
            o_len, o_routes = min_routes(t, src, dst, rules, rg_len)
            if o_len != rg_len:
                report.mismatches.append(
                    f"{pair}: oracle minimal {o_len} vs routing graph {rg_len}")
                continue
            if set(o_routes) != rg_routes:
                report.mismatches.append(
                    f"{pair}: oracle {len(o_routes)} minimal routes vs "
                    f"routing graph {len(rg_routes)}")
    return report
