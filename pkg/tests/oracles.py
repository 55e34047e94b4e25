"""Reference implementations the tests trust instead of the package.

Everything here is deliberately naive: breadth-first search over explicit
coordinate tuples, exhaustive enumeration of edge configurations, plain
fractions for expectations. No code is shared with the package beyond the
meaning of "box", so agreement between the two is evidence, not tautology.
"""

from __future__ import annotations

import itertools
from collections import deque
from fractions import Fraction


def box_sites(d: int, n: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(-n, n + 1), repeat=d))


def box_edges(d: int, n: int) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Nearest-neighbor edges of {-n..n}^d as ordered coordinate pairs."""
    edges = []
    for site in box_sites(d, n):
        for axis in range(d):
            if site[axis] < n:
                other = tuple(c + 1 if k == axis else c for k, c in enumerate(site))
                edges.append((site, other))
    return edges


def bfs_clusters(
    sites: list[tuple[int, ...]],
    open_edges: list[tuple[tuple[int, ...], tuple[int, ...]]],
) -> dict[tuple[int, ...], int]:
    """Cluster labels by BFS; labels count up in first-visit order of sites."""
    adjacency: dict[tuple[int, ...], list[tuple[int, ...]]] = {s: [] for s in sites}
    for a, b in open_edges:
        adjacency[a].append(b)
        adjacency[b].append(a)
    labels: dict[tuple[int, ...], int] = {}
    next_label = 0
    for start in sites:
        if start in labels:
            continue
        labels[start] = next_label
        queue = deque([start])
        while queue:
            site = queue.popleft()
            for other in adjacency[site]:
                if other not in labels:
                    labels[other] = next_label
                    queue.append(other)
        next_label += 1
    return labels


def cluster_sets(labels: dict[tuple[int, ...], int]) -> list[set[tuple[int, ...]]]:
    out: dict[int, set] = {}
    for site, label in labels.items():
        out.setdefault(label, set()).add(site)
    return list(out.values())


def partition_of(labels: dict[tuple[int, ...], int]) -> set[frozenset[tuple[int, ...]]]:
    """Label-independent view of a clustering, for comparing two labelers."""
    return {frozenset(c) for c in cluster_sets(labels)}


def site_square_sum(labels: dict[tuple[int, ...], int]) -> int:
    """Sum over sites of own-cluster size; equals the sum of squared sizes."""
    sizes: dict[int, int] = {}
    for label in labels.values():
        sizes[label] = sizes.get(label, 0) + 1
    return sum(sizes[label] for label in labels.values())


def enumerate_box(d: int, n: int, p: Fraction) -> dict[str, Fraction]:
    """Exact expectations over every edge configuration of a small box.

    Returns E[k_n], E[square_sum] (full window, no infinite-cluster proxy),
    and E[per-site mean cluster size]. Cost is 2^edges; keep the box tiny.
    """
    sites = box_sites(d, n)
    edges = box_edges(d, n)
    site_count = len(sites)
    expect_k = Fraction(0)
    expect_square = Fraction(0)
    for mask in range(2 ** len(edges)):
        open_edges = [e for i, e in enumerate(edges) if mask >> i & 1]
        weight = p ** len(open_edges) * (1 - p) ** (len(edges) - len(open_edges))
        labels = bfs_clusters(sites, open_edges)
        expect_k += weight * len(set(labels.values()))
        expect_square += weight * site_square_sum(labels)
    return {
        "site_count": Fraction(site_count),
        "edge_count": Fraction(len(edges)),
        "mean_k": expect_k,
        "mean_square_sum": expect_square,
        "mean_per_site_cluster_size": expect_square / site_count,
    }


def path_graph_square_sums(n: int) -> list[int]:
    """Σ_x |C(x)| for every edge configuration of the path on {-n..n}."""
    sites = box_sites(1, n)
    edges = box_edges(1, n)
    totals = []
    for mask in range(2 ** len(edges)):
        open_edges = [e for i, e in enumerate(edges) if mask >> i & 1]
        totals.append(site_square_sum(bfs_clusters(sites, open_edges)))
    return totals
