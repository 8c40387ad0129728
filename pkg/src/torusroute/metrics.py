"""Channel loads, edge-forwarding index, deviation, and traffic patterns."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DisconnectedError, TopologyError
from .routes import RoutingTable
from .topology import Topology, sum_pair_distances

PATTERNS = ("transpose", "neighbor", "tornado", "alltoall")


@dataclass
class LoadReport:
    pi: int                    # max channel load
    min_load: int
    gamma_perfect: float
    sigma: dict[int, float]
    max_d: int
    loads: np.ndarray | None = None

    def to_json(self, extra: dict | None = None) -> str:
        doc = {
            "pi": self.pi,
            "min_load": self.min_load,
            "gamma_perfect": self.gamma_perfect,
            "sigma": {str(k): v for k, v in self.sigma.items()},
            "max_d": self.max_d,
        }
        if self.loads is not None:
            doc["per_channel"] = self.loads.tolist()
        if extra:
            doc.update(extra)
        return json.dumps(doc, sort_keys=True, indent=2)


def channel_loads(rt: RoutingTable) -> np.ndarray:
    """Number of table routes crossing each directed channel."""
    t = rt.topology
    return np.bincount(rt.link_ids(), minlength=t.n_channels)


def deviation(loads: np.ndarray, gamma_perfect: float, k: int = 4) -> float:
    """k-th-power mean deviation of channel loads from the perfect load."""
    loads = np.asarray(loads, dtype=np.float64)
    if loads.size == 0:
        raise ValueError("deviation over an empty channel set")
    if k < 1:
        raise ValueError("k must be >= 1")
    return float(np.mean(np.abs(gamma_perfect - loads) ** k) ** (1.0 / k))


def perfect_channel_load(t: Topology) -> float:
    """Total minimal route length over all ordered pairs, per channel."""
    if not t.is_connected():
        raise DisconnectedError("perfect channel load needs a connected system")
    return sum_pair_distances(t) / t.n_channels


# -- traffic patterns ---------------------------------------------------------

def _transpose_node(t: Topology, u: int) -> int:
    """Mixed-radix transpose: reversed coordinates ranked in reversed dims.

    Coincides with plain coordinate reversal when the dimension vector is a
    palindrome, and is a bijection on node ids for every dimension vector.
    """
    coords = t.coords(u)
    rev_dims = t.dims[::-1]
    rank = 0
    for c, d in zip(coords[::-1], rev_dims):
        rank = rank * d + c
    return rank


def pattern_pairs(t: Topology, name: str) -> list[tuple[int, int]]:
    """Ordered (src, dst) pairs of a synthetic communication pattern."""
    name = name.lower()
    if name not in PATTERNS:
        raise ValueError(f"unknown pattern {name!r}")
    pairs: list[tuple[int, int]] = []
    if name == "alltoall":
        for s in t.live_nodes:
            for d in t.live_nodes:
                if s != d:
                    pairs.append((s, d))
    elif name == "neighbor":
        for s in t.live_nodes:
            seen = set()
            for d in range(t.ndirs):
                v = t.neighbor_table[s, d]
                if v >= 0 and v != s and v not in seen:
                    seen.add(int(v))
                    pairs.append((s, int(v)))
    elif name == "tornado":
        shift = -(-t.dims[0] // 2) - 1  # ceil(d1/2) - 1 hops along dim 1
        if shift:
            for s in t.live_nodes:
                coords = list(t.coords(s))
                coords[0] = (coords[0] + shift) % t.dims[0]
                dst = t.node_id(coords)
                if dst == s:
                    continue
                if dst in t.failed_nodes:
                    raise TopologyError(
                        f"tornado pattern references failed node "
                        f"{t.coord_str(dst)}")
                pairs.append((s, dst))
    else:  # transpose
        for s in t.live_nodes:
            dst = _transpose_node(t, s)
            if dst == s:
                continue
            if dst in t.failed_nodes:
                raise TopologyError(
                    f"transpose pattern references failed node "
                    f"{t.coord_str(dst)}")
            pairs.append((s, dst))
    return pairs


def loads_of_pairs(rt: RoutingTable, pairs) -> np.ndarray:
    t = rt.topology
    loads = np.zeros(t.n_channels, dtype=np.int64)
    for s, d in pairs:
        r = rt.routes[(s, d)]
        node = r.src
        for step in r.steps:
            loads[t.channel_table[node, step]] += 1
            node = int(t.neighbor_table[node, step])
    return loads


def load_report(rt: RoutingTable, ks=(4,), include_loads=False) -> LoadReport:
    """Full-table report: loads, edge-forwarding index, deviation, diameter."""
    t = rt.topology
    loads = channel_loads(rt)
    gp = perfect_channel_load(t)
    max_d = max((len(r) for r in rt.routes.values()), default=0)
    return LoadReport(
        pi=int(loads.max()) if loads.size else 0,
        min_load=int(loads.min()) if loads.size else 0,
        gamma_perfect=gp,
        sigma={k: deviation(loads, gp, k) for k in ks},
        max_d=max_d,
        loads=loads if include_loads else None,
    )


def pattern_loads(rt: RoutingTable, pattern: str, ks=(4,),
                  include_loads=False) -> LoadReport:
    """Report restricted to one pattern's routes.

    The perfect load generalizes to the pattern's minimal total length over
    the channel count, so alltoall reduces to the full-table report.
    """
    t = rt.topology
    pairs = pattern_pairs(t, pattern)
    loads = loads_of_pairs(rt, pairs)
    total_min = 0
    for s, d in pairs:
        dist = t.distance(s, d)
        if dist is None:
            raise DisconnectedError(
                f"pattern pair {t.coord_str(s)}->{t.coord_str(d)} unreachable")
        total_min += dist
    gp = total_min / t.n_channels
    max_d = max((len(rt.routes[p]) for p in pairs), default=0)
    return LoadReport(
        pi=int(loads.max()) if loads.size else 0,
        min_load=int(loads.min()) if loads.size else 0,
        gamma_perfect=gp,
        sigma={k: deviation(loads, gp, k) for k in ks},
        max_d=max_d,
        loads=loads if include_loads else None,
    )
