"""Deterministic synthetic AS topologies.

``hierarchical`` mimics the internet's tiering at small scale: a fully
peered core clique, two transit tiers that buy from the tiers above them and
peer laterally, and an edge of single- and multi-homed ASes.  ``random_small``
draws arbitrary (but valid) graphs for property tests.
"""

from __future__ import annotations

import random

from .topology import ASGraph


def _build(n_nodes, p2c, p2p, clique=()) -> ASGraph:
    customers = {a: set() for a in n_nodes}
    providers = {a: set() for a in n_nodes}
    peers = {a: set() for a in n_nodes}
    for p, c in p2c:
        customers[p].add(c)
        providers[c].add(p)
    for a, b in p2p:
        peers[a].add(b)
        peers[b].add(a)
    return ASGraph(customers, peers, providers, clique)


def hierarchical(
    n: int = 2000,
    seed: int = 0,
    *,
    clique_size: int = 10,
    tier2_frac: float = 0.05,
    tier3_frac: float = 0.10,
    stub_frac: float = 0.42,
) -> ASGraph:
    """An ``n``-AS tiered graph.  Same arguments, same graph."""
    rng = random.Random(seed)
    n_t2 = max(1, int(n * tier2_frac))
    n_t3 = max(1, int(n * tier3_frac))
    n_edge = n - clique_size - n_t2 - n_t3
    if n_edge < 2:
        raise ValueError("n too small for the requested tiers")

    asn = iter(range(1, n + 1))
    clique = [next(asn) for _ in range(clique_size)]
    tier2 = [next(asn) for _ in range(n_t2)]
    tier3 = [next(asn) for _ in range(n_t3)]
    edge = [next(asn) for _ in range(n_edge)]
    nodes = clique + tier2 + tier3 + edge

    p2c: set[tuple[int, int]] = set()
    p2p: set[tuple[int, int]] = set()
    for i, a in enumerate(clique):
        for b in clique[i + 1 :]:
            p2p.add((a, b))

    def attach(node, candidates, k, weights=None):
        chosen = set()
        while len(chosen) < min(k, len(candidates)):
            chosen.add(rng.choices(candidates, weights=weights)[0])
        for p in chosen:
            p2c.add((p, node))

    for i, a in enumerate(tier2):
        upstream = clique + tier2[:i]
        attach(a, upstream, rng.choice((1, 2, 2, 3)))
    for _ in range(n_t2):
        a, b = rng.sample(tier2, 2)
        p2p.add((min(a, b), max(a, b)))

    for i, a in enumerate(tier3):
        upstream = tier2 + tier3[:i]
        w = [3] * len(tier2) + [1] * i
        attach(a, upstream, rng.choice((1, 2, 2, 3)), w)
    for _ in range(n_t3 // 2):
        a, b = rng.sample(tier3, 2)
        p2p.add((min(a, b), max(a, b)))

    transit = tier2 + tier3
    n_stub = int(n_edge * stub_frac / (1 - (clique_size + n_t2 + n_t3) / n))
    n_stub = min(n_stub, n_edge)
    for i, a in enumerate(edge):
        if i < n_stub:
            attach(a, transit, 1)
        else:
            attach(a, transit, rng.choice((1, 2, 2, 2, 3)))
    multihomed = edge[n_stub:]
    n_providers = {a: 0 for a in multihomed}
    for p, c in p2c:
        if c in n_providers:
            n_providers[c] += 1
    # single-homed edge ASes beyond the stub quota get a peer instead
    for a in multihomed:
        if n_providers[a] == 1 and len(multihomed) > 1:
            b = rng.choice(multihomed)
            if b != a:
                p2p.add((min(a, b), max(a, b)))

    # drop p2p links that duplicate a p2c link
    linked = {(min(p, c), max(p, c)) for p, c in p2c}
    p2p = {e for e in p2p if e not in linked}
    return _build(nodes, sorted(p2c), sorted(p2p), clique)


def random_small(rng: random.Random, max_nodes: int = 30, min_nodes: int = 3) -> ASGraph:
    """Random valid graph: p2c edges go from lower to higher index (acyclic)."""
    n = rng.randint(min_nodes, max_nodes)
    nodes = rng.sample(range(1, 10 * max_nodes), n)
    p2c, p2p = [], []
    density = rng.uniform(0.05, 0.3)
    for i in range(n):
        for j in range(i + 1, n):
            r = rng.random()
            if r < density:
                p2c.append((nodes[i], nodes[j]))
            elif r < density * 1.3:
                p2p.append((nodes[i], nodes[j]))
    # the relationship file format cannot express isolated ASes
    used = {a for e in p2c + p2p for a in e}
    return _build([a for a in nodes if a in used], p2c, p2p)
