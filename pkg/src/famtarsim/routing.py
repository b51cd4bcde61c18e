"""Link-state routing model.

Each router keeps its own cost/status database over all *directed* links.
Cost changes are flooded as versioned updates that reach other routers after
a per-hop propagation delay; every accepted update triggers a shortest-path
recomputation whose result is installed after a fixed SPF delay.  Costs are
symmetric at configuration time but maintained per direction, so congestion
can escalate one direction only (the default) or both (config switch).
"""

from __future__ import annotations

import heapq
import io
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

from .model import HOST, DirectedLink, Link, SimTime, Topology

DEFAULT_HIGH_COST = 10_000
DEFAULT_FLOOD_HOP_DELAY: SimTime = 10_000   # 10 ms per router hop
DEFAULT_SPF_DELAY: SimTime = 20_000         # 20 ms from trigger to table install


@dataclass
class RoutingConfig:
    flood_hop_delay: SimTime = DEFAULT_FLOOD_HOP_DELAY
    spf_delay: SimTime = DEFAULT_SPF_DELAY
    high_cost: int = DEFAULT_HIGH_COST
    symmetric_escalation: bool = False

    def __post_init__(self) -> None:
        if self.flood_hop_delay < 0 or self.spf_delay < 0:
            raise ValueError("routing delays must be non-negative")
        if self.high_cost <= 0:
            raise ValueError("high cost must be positive (links stay usable)")


class LinkRecord:
    """One directed link as seen by one router."""

    __slots__ = ("cost", "up", "version")

    def __init__(self, cost: int, up: bool = True, version: int = 0):
        self.cost = cost
        self.up = up
        self.version = version


class LinkStateDb:
    """A router's private copy of every directed link's cost and status."""

    def __init__(self, records: list[LinkRecord]):
        self.records = records

    @classmethod
    def from_topology(cls, topo: Topology) -> "LinkStateDb":
        return cls([LinkRecord(dl.link.base_cost) for dl in topo.directed])

    def apply_update(self, index: int, cost: int, up: bool, version: int) -> bool:
        """Apply a flooded update; stale versions are discarded (returns False)."""
        record = self.records[index]
        if version <= record.version:
            return False
        record.cost = cost
        record.up = up
        record.version = version
        return True


class LsaClock:
    """Issues strictly increasing version numbers per directed link."""

    def __init__(self, n_directed: int):
        self._versions = [0] * n_directed

    def next_version(self, index: int) -> int:
        self._versions[index] += 1
        return self._versions[index]


@dataclass(frozen=True)
class Route:
    iface: int          # egress interface index at the computing router
    next_hop: str       # neighbour node id
    next_hop_addr: int
    cost: int           # total path cost


def spf(db: LinkStateDb, source: str, topo: Topology) -> dict[str, Route]:
    """Shortest paths from ``source`` over the links ``db`` believes are up.

    Ties on total cost are broken towards the lexicographically smallest
    next-hop node identifier, which makes the table deterministic.  Hosts
    never appear as transit nodes.
    """
    records = db.records
    dist: dict[str, int] = {source: 0}
    first_hop: dict[str, str] = {}
    done: set[str] = set()
    heap: list[tuple[int, str]] = [(0, source)]
    nodes = topo.nodes

    while heap:
        d, here = heapq.heappop(heap)
        if here in done:
            continue
        done.add(here)
        if here != source and nodes[here].kind == HOST:
            continue  # traffic may end at a host but never cross one
        for dl in topo.out_links[here]:
            record = records[dl.index]
            if not record.up:
                continue
            cand = d + record.cost
            hop = dl.dst if here == source else first_hop[here]
            there = dl.dst
            old = dist.get(there)
            if old is None or cand < old:
                dist[there] = cand
                first_hop[there] = hop
                heapq.heappush(heap, (cand, there))
            elif cand == old and there not in done and hop < first_hop[there]:
                first_hop[there] = hop

    table: dict[str, Route] = {}
    for dest, hop in first_hop.items():
        if dest == source:
            continue
        dl = topo.directed_between(source, hop)
        table[dest] = Route(dl.iface_index, hop, topo.addr_of[hop], dist[dest])
    return table


def flood_plan(topo: Topology, origin: str, now: SimTime, per_hop_delay: SimTime,
               link_is_up: Optional[Callable[[Link], bool]] = None
               ) -> list[tuple[str, SimTime]]:
    """Delivery schedule for a cost-change update originated at ``origin``.

    Every other reachable router receives the update ``per_hop_delay`` times
    its hop distance (BFS over currently-up links, routers only) after
    ``now``.  Routers cut off by failures receive nothing.
    """
    up = link_is_up if link_is_up is not None else (lambda link: True)
    hops = {origin: 0}
    frontier = deque([origin])
    while frontier:
        here = frontier.popleft()
        for dl in topo.out_links[here]:
            there = dl.dst
            if there in hops or topo.nodes[there].kind == HOST:
                continue
            if not up(dl.link):
                continue
            hops[there] = hops[here] + 1
            frontier.append(there)
    return [(router, now + h * per_hop_delay)
            for router, h in sorted(hops.items()) if router != origin]


def table_csv(router: str, table: dict[str, Route], topo: Topology) -> str:
    """One router's installed routing table as CSV (for convergence checks)."""
    out = io.StringIO()
    out.write("router,destination,egress_iface,next_hop,cost\n")
    for dest in sorted(table):
        route = table[dest]
        out.write(f"{router},{dest},{route.iface},{route.next_hop},{route.cost}\n")
    return out.getvalue()
