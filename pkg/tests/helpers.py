"""Shared fixtures-in-spirit: tiny topologies and a brute-force routing oracle."""

from __future__ import annotations

import random

from famtarsim.model import HOST, ROUTER, Link, Topology
from famtarsim.routing import LinkStateDb


def line_topology(core_queue: int = 100) -> Topology:
    """H1 -- R1 -- R2 -- H2 with a 10 Mbit/s core link."""
    nodes = {"H1": HOST, "R1": ROUTER, "R2": ROUTER, "H2": HOST}
    links = [
        Link("H1-R1", "H1", "R1", 100_000_000, 100, 10, 100),
        Link("R1-R2", "R1", "R2", 10_000_000, 1000, 10, core_queue),
        Link("R2-H2", "R2", "H2", 100_000_000, 100, 10, 100),
    ]
    return Topology(nodes, links)


def diamond_topology() -> Topology:
    """Two equal-cost router paths R1-R2-R4 / R1-R3-R4 between two hosts."""
    nodes = {"H1": HOST, "R1": ROUTER, "R2": ROUTER, "R3": ROUTER,
             "R4": ROUTER, "H2": HOST}
    links = [
        Link("H1-R1", "H1", "R1", 100_000_000, 100, 10, 100),
        Link("R1-R2", "R1", "R2", 10_000_000, 1000, 10, 100),
        Link("R1-R3", "R1", "R3", 10_000_000, 1000, 10, 100),
        Link("R2-R4", "R2", "R4", 10_000_000, 1000, 10, 100),
        Link("R3-R4", "R3", "R4", 10_000_000, 1000, 10, 100),
        Link("R4-H2", "R4", "H2", 100_000_000, 100, 10, 100),
    ]
    return Topology(nodes, links)


def brute_force_costs(db: LinkStateDb, topo: Topology, source: str) -> dict[str, int]:
    """Minimum cost over *all* simple paths from ``source``, routers as transit.

    Exponential-time reference implementation used to cross-check spf on
    small graphs; records the best cost for every node it can reach.
    """
    best: dict[str, int] = {}
    on_path = {source}

    def walk(node: str, cost: int) -> None:
        for dl in topo.out_links[node]:
            rec = db.records[dl.index]
            if not rec.up or dl.dst in on_path:
                continue
            c = cost + rec.cost
            if c < best.get(dl.dst, float("inf")):
                best[dl.dst] = c
            if topo.nodes[dl.dst].kind == ROUTER:
                on_path.add(dl.dst)
                walk(dl.dst, c)
                on_path.remove(dl.dst)

    walk(source, 0)
    return best


def random_router_topology(rng: random.Random, max_nodes: int = 6) -> Topology:
    """Connected all-router graph with random costs (a spanning tree + extras)."""
    n = rng.randint(2, max_nodes)
    ids = [f"R{i + 1}" for i in range(n)]
    order = ids[:]
    rng.shuffle(order)

    pairs: set[frozenset[str]] = set()
    for i in range(1, n):
        pairs.add(frozenset((order[rng.randrange(i)], order[i])))
    possible = [frozenset((a, b)) for i, a in enumerate(ids) for b in ids[i + 1:]]
    for pair in possible:
        if pair not in pairs and rng.random() < 0.4:
            pairs.add(pair)

    links = []
    for i, pair in enumerate(sorted(pairs, key=sorted)):
        a, b = sorted(pair)
        cost = 10_000 if rng.random() < 0.15 else rng.randint(1, 20)
        links.append(Link(f"L{i}", a, b, 10_000_000, 1000, cost, 100))
    return Topology({nid: ROUTER for nid in ids}, links)
