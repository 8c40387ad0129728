"""Routing-table generators over the routing graph.

Three generators share one load ledger convention: a per-channel counter that
every chosen route increments along its physical links. An edge's effective
weight is the base weight plus the load of its link, so all routing-graph
edges over one cable always weigh the same.

* ``build_rt_bfs``: iterated breadth-first trees, sources ordered by a
  most-remote heuristic, each level's frontier expanded in ascending order of
  outgoing edge weight.
* ``build_rt_genetic``: a genetic search over per-pair minimal route variants
  with two-point crossover, panmictic parent selection, per-gene mutation and
  elitist truncation, scored by the deviation metric.
* ``build_rt_sssp``: unique minimal routes fixed first, the remaining pairs
  grouped by (turn count, length, source) and served by repeated shortest
  path trees; a large base weight keeps every returned path hop-minimal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnroutablePairError
from .metrics import deviation, perfect_channel_load
from .routes import (Route, RoutingTable, decode_rg_path, legal_encodings,
                     preferred_encoding)
from .routing_graph import DUMMY_LINK, RoutingGraph, _gather_edges
from .topology import most_remote


@dataclass
class GeneticParams:
    population: int = 100
    mutation: float = 0.02
    stagnation_limit: int = 30
    epsilon: float = 0.05
    seed: int = 0
    variant_cap: int = 128
    max_generations: int | None = None

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not 0.0 <= self.mutation <= 1.0:
            raise ValueError("mutation probability must be in [0, 1]")


@dataclass
class GenerationStats:
    algo: str
    link_increments: np.ndarray
    sssp_calls: int = 0
    generations: int = 0
    unique_pairs: int = 0
    total_pairs: int = 0
    fitness_history: list[float] = field(default_factory=list)


def turn_count(r: Route) -> int:
    """Adjacent step pairs with differing directions; FS/LS transitions count."""
    steps = r.steps
    return sum(1 for a, b in zip(steps, steps[1:]) if a != b)


# -- shared search kernels ----------------------------------------------------

def _relaxed_set(rg: RoutingGraph) -> frozenset:
    if not hasattr(rg, "_relaxed_cache"):
        rg._relaxed_cache = frozenset(rg.added)
    return rg._relaxed_cache


def _decode(rg: RoutingGraph, verts: list[int]) -> Route:
    """Decode a tree path, then store its least-non-standard legal encoding."""
    raw = decode_rg_path(rg, verts)
    return preferred_encoding(rg.topology, raw.src, raw.steps, _relaxed_set(rg))


def _steps_of_edges(rg: RoutingGraph, edges) -> tuple[int, ...]:
    """Physical step directions of a tree path (the final eject edge aside)."""
    t = rg.topology
    return tuple(t.channels[link][1]
                 for link in rg.edge_link[edges] if link != DUMMY_LINK)


def _route_links(rg: RoutingGraph, r: Route) -> list[int]:
    t = rg.topology
    out = []
    node = r.src
    for d in r.steps:
        out.append(int(t.channel_table[node, d]))
        node = int(t.neighbor_table[node, d])
    return out


def _walk_parents(rg: RoutingGraph, parent_edge: np.ndarray, begin_vid: int,
                  end_vid: int):
    """(vertex path, edge ids) from begin to end, or None if unreached."""
    verts = [end_vid]
    edges = []
    v = end_vid
    while v != begin_vid:
        e = int(parent_edge[v])
        if e < 0:
            return None
        edges.append(e)
        v = int(rg.edge_tail[e])
        verts.append(v)
    verts.reverse()
    edges.reverse()
    return verts, edges


def build_bfs_routes(rg: RoutingGraph, source: int, loads: np.ndarray,
                     targets=None) -> dict[int, Route]:
    """Breadth-first route tree from one source, then weight bookkeeping.

    Each frontier is expanded in ascending order of the weight of the edge
    the vertex was claimed through (ties by vertex id), so arrivals over
    lightly loaded links extend their paths first; the first claimant of a
    vertex becomes its parent. After the tree is read back, every chosen
    route adds one unit of load to each physical link it crosses.
    """
    t = rg.topology
    if targets is None:
        targets = t.live_nodes
    loads_ext = np.concatenate([loads, [0]])
    parent_edge = np.full(rg.n_vertices, -1, dtype=np.int64)
    begin = rg.begin_vid(source)
    claimed = np.zeros(rg.n_vertices, dtype=bool)
    claimed[begin] = True
    frontier = np.array([begin], dtype=np.int64)
    arrival_w = np.zeros(1, dtype=np.int64)  # the source arrives load-free
    while len(frontier):
        order = np.lexsort((frontier, arrival_w))
        frontier = frontier[order]
        eids = _gather_edges(rg, frontier)
        if not len(eids):
            break
        heads = rg.edge_head[eids]
        open_m = ~claimed[heads]
        cand = heads[open_m]
        cand_e = eids[open_m]
        uniq, first = np.unique(cand, return_index=True)
        parent_edge[uniq] = cand_e[first]
        claimed[uniq] = True
        frontier = uniq.astype(np.int64)
        arrival_w = loads_ext[rg.edge_link[parent_edge[frontier]]]

    routes: dict[int, Route] = {}
    missing = []
    for dst in targets:
        if dst == source:
            continue
        walked = _walk_parents(rg, parent_edge, begin, rg.end_vid(dst))
        if walked is None:
            missing.append((source, dst))
            continue
        verts, edges = walked
        routes[dst] = preferred_encoding(t, source, _steps_of_edges(rg, edges),
                                         _relaxed_set(rg))
        for e in edges:
            link = int(rg.edge_link[e])
            if link != DUMMY_LINK:
                loads[link] += 1
    if missing:
        raise UnroutablePairError(
            [(t.coord_str(s), t.coord_str(d)) for s, d in missing])
    return routes


def build_rt_bfs(rg: RoutingGraph, nodes=None) -> RoutingTable:
    """Iterated-BFS routing table; the next source is the most remote node."""
    t = rg.topology
    nodes = list(nodes) if nodes is not None else list(t.live_nodes)
    loads = np.zeros(t.n_channels, dtype=np.int64)
    routes = {}
    remaining = set(nodes)
    source = nodes[0]
    while True:
        for dst, r in build_bfs_routes(rg, source, loads, nodes).items():
            routes[(source, dst)] = r
        remaining.discard(source)
        if not remaining:
            break
        source = most_remote(t, remaining, source)
    table = RoutingTable(t, routes,
                         GenerationStats("bfs", loads,
                                         total_pairs=len(routes)))
    return table


def _bfs_count(rg: RoutingGraph, source: int):
    """Hop distances, shortest-path counts and a deterministic parent tree."""
    begin = rg.begin_vid(source)
    dist = np.full(rg.n_vertices, -1, dtype=np.int32)
    counts = np.zeros(rg.n_vertices, dtype=np.int64)
    parent_edge = np.full(rg.n_vertices, -1, dtype=np.int64)
    dist[begin] = 0
    counts[begin] = 1
    frontier = np.array([begin], dtype=np.int64)
    level = 0
    while len(frontier):
        eids = _gather_edges(rg, np.sort(frontier))
        if not len(eids):
            break
        heads = rg.edge_head[eids]
        open_m = dist[heads] < 0
        uniq, first = np.unique(heads[open_m], return_index=True)
        parent_edge[uniq] = eids[open_m][first]
        level += 1
        dist[uniq] = level
        next_m = dist[heads] == level
        np.add.at(counts, heads[next_m],
                  counts[rg.edge_tail[eids[next_m]]])
        frontier = uniq.astype(np.int64)
    return dist, counts, parent_edge


def _enumerate_rg_paths(rg: RoutingGraph, dist: np.ndarray, begin_vid: int,
                        end_vid: int, budget: int):
    """All shortest begin->end vertex paths, in-edge order, capped by budget."""
    if dist[end_vid] < 0:
        return [], False
    rindptr, redges = rg.reverse_csr()
    paths: list[list[int]] = []
    truncated = False
    stack: list[int] = [end_vid]

    def rec(v: int):
        nonlocal truncated
        if truncated:
            return
        if v == begin_vid:
            paths.append(list(reversed(stack)))
            if len(paths) >= budget:
                truncated = True
            return
        dv = dist[v]
        for idx in range(int(rindptr[v]), int(rindptr[v + 1])):
            e = int(redges[idx])
            u = int(rg.edge_tail[e])
            if dist[u] == dv - 1:
                stack.append(u)
                rec(u)
                stack.pop()
                if truncated:
                    return

    rec(end_vid)
    return paths, truncated


def _dedupe_physical(rg: RoutingGraph, paths) -> list[Route]:
    seen = set()
    out = []
    for p in paths:
        r = _decode(rg, p)
        if r.steps not in seen:
            seen.add(r.steps)
            out.append(r)
    return out


def enumerate_minimal_routes(rg: RoutingGraph, src: int, dst: int,
                             cap: int = 128, _dist=None):
    """(variants, truncated): distinct minimal routes in deterministic order.

    Distinct routing-graph paths that encode the same physical step sequence
    (body vs first/last-step encodings) collapse to one variant. A physical
    route has at most four encodings, so the underlying path budget is 4*cap.
    """
    dist = _dist if _dist is not None else _bfs_count(rg, src)[0]
    evid = rg.end_vid(dst)
    if dist[evid] < 0:
        raise UnroutablePairError([(rg.topology.coord_str(src),
                                    rg.topology.coord_str(dst))])
    paths, truncated = _enumerate_rg_paths(rg, dist, rg.begin_vid(src), evid,
                                           budget=4 * cap)
    variants = _dedupe_physical(rg, paths)
    if len(variants) > cap:
        variants = variants[:cap]
        truncated = True
    return variants, truncated


def _pair_stats(rg: RoutingGraph, source: int, nodes):
    """Per-destination (route, unique?) data from one stage-1 counting pass.

    A pair has a single minimal physical route exactly when the number of
    shortest routing-graph paths equals the number of legal encodings of the
    canonical route, since any second physical route would add encodings of
    its own to the count.
    """
    t = rg.topology
    relaxed = _relaxed_set(rg)
    dist, counts, parent_edge = _bfs_count(rg, source)
    begin = rg.begin_vid(source)
    out = {}
    missing = []
    for dst in nodes:
        if dst == source:
            continue
        evid = rg.end_vid(dst)
        if dist[evid] < 0:
            missing.append((source, dst))
            continue
        _, edges = _walk_parents(rg, parent_edge, begin, evid)
        steps = _steps_of_edges(rg, edges)
        seq, encodings = legal_encodings(t, source, steps, relaxed)
        fs, body, ls = encodings[0]
        canonical = Route(source, dst, fs, body, ls, tuple(seq))
        out[dst] = (canonical, int(counts[evid]) == len(encodings))
    if missing:
        raise UnroutablePairError(
            [(t.coord_str(s), t.coord_str(d)) for s, d in missing])
    return out


def unique_route_stats(rg: RoutingGraph, nodes=None) -> tuple[int, int]:
    """(pairs with a single minimal route, total ordered pairs)."""
    t = rg.topology
    nodes = list(nodes) if nodes is not None else list(t.live_nodes)
    unique = total = 0
    for src in nodes:
        for _, (_, is_unique) in _pair_stats(rg, src, nodes).items():
            total += 1
            unique += bool(is_unique)
    return unique, total


class _SsspEngine:
    """Reusable scratch state for repeated shortest-path-tree calls.

    The per-edge weight vector (base plus link load) is maintained
    incrementally as routes are applied, and generation stamps replace
    per-call array clearing.
    """

    def __init__(self, rg: RoutingGraph, loads: np.ndarray, base: int):
        self.rg = rg
        self.base = base
        loads_ext = np.concatenate([loads, [0]])
        self.w = base + loads_ext[rg.edge_link]
        self.dist = np.zeros(rg.n_vertices, dtype=np.int64)
        self.parent = np.full(rg.n_vertices, -1, dtype=np.int64)
        self.stamp = np.zeros(rg.n_vertices, dtype=np.int64)
        self.gen = 0
        order = np.argsort(rg.edge_link, kind="stable")
        self._edges_by_link = order
        self._link_starts = np.searchsorted(
            rg.edge_link[order], np.arange(rg.topology.n_channels + 1))

    def add_load(self, link: int):
        lo, hi = self._link_starts[link], self._link_starts[link + 1]
        self.w[self._edges_by_link[lo:hi]] += 1

    def tree_edges(self, source: int, dst_nodes) -> dict[int, list[int]]:
        """Edge-id chains of the shortest path tree, one per destination."""
        rg = self.rg
        t = rg.topology
        self.gen += 1
        gen = self.gen
        dist, parent, stamp, w = self.dist, self.parent, self.stamp, self.w
        ends = np.array([rg.end_vid(d) for d in dst_nodes], dtype=np.int64)
        begin = rg.begin_vid(source)
        dist[begin] = 0
        stamp[begin] = gen
        parent[begin] = -1
        frontier = np.array([begin], dtype=np.int64)
        while len(frontier) and len(ends):
            eids = _gather_edges(rg, frontier)
            if not len(eids):
                break
            heads = rg.edge_head[eids]
            open_m = stamp[heads] != gen
            heads = heads[open_m]
            eids = eids[open_m]
            if not len(heads):
                break
            cand = dist[rg.edge_tail[eids]] + w[eids]
            # per-head minimum of (distance, edge id); edge ids are
            # tail-major, so ties fall to the smallest tail, then adjacency
            inner = cand * rg.n_edges + eids
            if int(heads.max()) * (int(inner.max()) + 1) < 2 ** 62:
                order = np.argsort(heads * (inner.max() + 1) + inner,
                                   kind="stable")
            else:
                order = np.lexsort((inner, heads))
            heads_s = heads[order]
            first = np.flatnonzero(np.diff(heads_s, prepend=-1))
            chosen = order[first]
            uniq = heads_s[first]
            dist[uniq] = cand[chosen]
            parent[uniq] = eids[chosen]
            stamp[uniq] = gen
            ends = ends[stamp[ends] != gen]
            frontier = uniq.astype(np.int64)

        out: dict[int, list[int]] = {}
        missing = []
        for dst in dst_nodes:
            evid = rg.end_vid(dst)
            if stamp[evid] != gen:
                missing.append((source, dst))
                continue
            out[dst] = _walk_parents(rg, parent, begin, evid)[1]
        if missing:
            raise UnroutablePairError(
                [(t.coord_str(s), t.coord_str(d)) for s, d in missing])
        return out

    def route_of(self, source: int, edges: list[int]) -> Route:
        rg = self.rg
        return preferred_encoding(rg.topology, source,
                                  _steps_of_edges(rg, edges),
                                  _relaxed_set(rg))

    def tree(self, source: int, dst_nodes) -> dict[int, Route]:
        return {dst: self.route_of(source, edges)
                for dst, edges in self.tree_edges(source, dst_nodes).items()}


def build_sssp(rg: RoutingGraph, source: int, dst_nodes, loads: np.ndarray,
               base: int | None = None) -> dict[int, Route]:
    """Level-settled shortest path tree slice for a destination set.

    Every edge weighs ``base`` plus its link load; the base (node count
    squared by default) dominates any accumulated load, so hop count decides
    first and load only breaks ties within a level. A vertex's distance is
    final once its level completes, and the search stops as soon as all
    requested end vertices are settled.
    """
    if base is None:
        base = len(rg.topology.live_nodes) ** 2
    return _SsspEngine(rg, loads, base).tree(source, list(dst_nodes))


def build_rt_sssp(rg: RoutingGraph, nodes=None,
                  skip_unique_stage: bool = False) -> RoutingTable:
    """Two-stage shortest-path routing table (unique routes, sort and group).

    ``skip_unique_stage`` keeps stage 1's measurements but routes every pair
    through stage 2, which is the instrumentation baseline for call counts.
    """
    t = rg.topology
    nodes = list(nodes) if nodes is not None else list(t.live_nodes)
    loads = np.zeros(t.n_channels, dtype=np.int64)
    routes: dict[tuple[int, int], Route] = {}
    pending: dict[tuple[int, int, int], list[int]] = {}
    unique_pairs = 0
    total_pairs = 0
    for src in nodes:
        stats = _pair_stats(rg, src, nodes)
        for dst in sorted(stats):
            canonical, is_unique = stats[dst]
            total_pairs += 1
            if is_unique:
                unique_pairs += 1
            if is_unique and not skip_unique_stage:
                routes[(src, dst)] = canonical
                for link in _route_links(rg, canonical):
                    loads[link] += 1
            else:
                key = (turn_count(canonical), len(canonical), src)
                pending.setdefault(key, []).append(dst)

    calls = 0
    engine = _SsspEngine(rg, loads, base=len(nodes) ** 2)
    for key in sorted(pending):
        src = key[2]
        dsts = sorted(pending[key])
        while dsts:
            calls += 1
            paths = engine.tree_edges(src, dsts)
            used: set[int] = set()
            accepted = []
            for dst in dsts:
                links = {int(link) for link in rg.edge_link[paths[dst]]
                         if link != DUMMY_LINK}
                if links & used:
                    continue
                accepted.append((dst, links))
                used |= links
            for dst, links in accepted:
                routes[(src, dst)] = engine.route_of(src, paths[dst])
                for link in links:
                    loads[link] += 1
                    engine.add_load(link)
            dsts = [d for d in dsts if d not in {a for a, _ in accepted}]

    return RoutingTable(t, routes,
                        GenerationStats("sssp", loads, sssp_calls=calls,
                                        unique_pairs=unique_pairs,
                                        total_pairs=total_pairs))


# -- genetic ------------------------------------------------------------------

def _variant_tables(rg: RoutingGraph, nodes, cap: int):
    """Per-pair variant lists flattened into a padded link-id matrix."""
    t = rg.topology
    pairs = []
    variants: list[list[Route]] = []
    for src in nodes:
        dist = _bfs_count(rg, src)[0]
        for dst in nodes:
            if dst == src:
                continue
            vs, _ = enumerate_minimal_routes(rg, src, dst, cap, _dist=dist)
            if not vs:
                raise UnroutablePairError([(t.coord_str(src),
                                            t.coord_str(dst))])
            pairs.append((src, dst))
            variants.append(vs)
    counts = np.array([len(v) for v in variants], dtype=np.int64)
    offsets = np.zeros(len(variants), dtype=np.int64)
    np.cumsum(counts[:-1], out=offsets[1:])
    maxlen = max(len(r) for vs in variants for r in vs)
    links = np.full((int(counts.sum()), maxlen), t.n_channels, dtype=np.int64)
    row = 0
    for vs in variants:
        for r in vs:
            ls = _route_links(rg, r)
            links[row, :len(ls)] = ls
            row += 1
    return pairs, variants, counts, offsets, links


def build_rt_genetic(rg: RoutingGraph, nodes=None,
                     params: GeneticParams | None = None) -> RoutingTable:
    """Genetic search over minimal route variants, scored by deviation."""
    t = rg.topology
    params = params or GeneticParams()
    nodes = list(nodes) if nodes is not None else list(t.live_nodes)
    pairs, variants, counts, offsets, links = _variant_tables(
        rg, nodes, params.variant_cap)
    gp = perfect_channel_load(t)
    n_channels = t.n_channels
    rng = np.random.default_rng(params.seed)

    def loads_of(genes: np.ndarray) -> np.ndarray:
        rows = offsets + genes
        return np.bincount(links[rows].ravel(),
                           minlength=n_channels + 1)[:n_channels]

    def fitness(genes: np.ndarray) -> float:
        return deviation(loads_of(genes), gp, 4)

    pop_n = params.population
    pop = rng.integers(0, counts, size=(pop_n, len(pairs)), dtype=np.int64)
    fits = np.array([fitness(g) for g in pop])
    order = np.argsort(fits, kind="stable")
    pop, fits = pop[order], fits[order]
    best_fit = float(fits[0])
    best_genes = pop[0].copy()
    history = [best_fit]
    # the stagnation bar re-anchors only on significant improvements, so
    # steady slow progress keeps the search alive
    anchor = best_fit
    stagnant = 0
    generations = 0
    while stagnant < params.stagnation_limit:
        if (params.max_generations is not None
                and generations >= params.max_generations):
            break
        generations += 1
        half = pop_n // 2 + pop_n % 2
        parents = rng.integers(0, pop_n, size=(half, 2))
        cuts = np.sort(rng.integers(0, len(pairs) + 1, size=(half, 2)), axis=1)
        kids = []
        for (a, b), (c1, c2) in zip(parents, cuts):
            k1 = pop[a].copy()
            k1[c1:c2] = pop[b][c1:c2]
            k2 = pop[b].copy()
            k2[c1:c2] = pop[a][c1:c2]
            kids.extend((k1, k2))
        kids = np.array(kids[:pop_n])
        mask = rng.random(kids.shape) < params.mutation
        redraw = rng.integers(0, counts, size=kids.shape, dtype=np.int64)
        kids[mask] = redraw[mask]
        kid_fits = np.array([fitness(g) for g in kids])

        pool = np.vstack([pop, kids])
        pool_fits = np.concatenate([fits, kid_fits])
        order = np.argsort(pool_fits, kind="stable")[:pop_n]
        pop, fits = pool[order], pool_fits[order]

        gen_best = float(fits[0])
        history.append(gen_best)
        if gen_best < best_fit:
            best_fit = gen_best
            best_genes = pop[0].copy()
        if gen_best < anchor * (1.0 - params.epsilon):
            anchor = gen_best
            stagnant = 0
        else:
            stagnant += 1

    routes = {pair: variants[i][int(best_genes[i])]
              for i, pair in enumerate(pairs)}
    stats = GenerationStats("genetic", loads_of(best_genes),
                            generations=generations,
                            total_pairs=len(pairs),
                            fitness_history=history)
    return RoutingTable(t, routes, stats)
