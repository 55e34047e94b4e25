"""Bernoulli bond configurations and cluster structure on a box.

Each edge of the box is open independently with probability p. Clusters are
the connected components of the open subgraph, labeled by union-find with
path compression and union by size. A boundary-touching largest cluster can
be designated as the stand-in for the infinite cluster; everything measured
"finite" excludes that stand-in.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .lattice import BoxLattice, inner_window, window_site_count
from .rng import derive_rng

PROXY_BOUNDARY_LARGEST = "boundary-largest"
PROXY_DISABLED = "disabled"
PROXY_RULES = (PROXY_BOUNDARY_LARGEST, PROXY_DISABLED)

# Half-width of the band around the d=2 critical point that the limit
# statements exclude.
NEAR_CRITICAL_BAND = 0.02
_CRITICAL_P_D2 = 0.5


class InvariantViolationError(RuntimeError):
    """An identity that must hold exactly failed; indicates a labeling bug."""


class NearCriticalWarning(UserWarning):
    """p falls in the excluded band around the d=2 critical point."""


def warn_if_near_critical(d: int, p: float) -> None:
    """Warn when (d, p) sits where the limit theorems give no guarantees."""
    if d == 2 and abs(p - _CRITICAL_P_D2) < NEAR_CRITICAL_BAND and p not in (0.0, 1.0):
        warnings.warn(
            f"p={p} is within {NEAR_CRITICAL_BAND} of the d=2 critical point 0.5; "
            "asymptotic predictions are unreliable here",
            NearCriticalWarning,
            stacklevel=3,
        )


@dataclass(frozen=True)
class EdgeConfig:
    """One sampled bond configuration.

    The open bitset is reproducible from (lattice, p, seed, stream_tag)
    alone, so a config never needs to be stored to be revisited.
    """

    lattice: BoxLattice
    open: np.ndarray = field(repr=False, compare=False)
    p: float
    seed: int
    stream_tag: str

    def open_count(self) -> int:
        return int(np.count_nonzero(self.open))


def sample_config(lattice: BoxLattice, p: float, seed: int, stream_tag: str = "graph") -> EdgeConfig:
    """Draw a Bernoulli(p) bond configuration on the given box."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    rng = derive_rng(seed, stream_tag)
    open_edges = rng.random(lattice.edge_count) < p
    open_edges.setflags(write=False)
    return EdgeConfig(lattice=lattice, open=open_edges, p=p, seed=seed, stream_tag=stream_tag)


@dataclass(frozen=True)
class ClusterLabeling:
    """Connected components of one configuration.

    Cluster ids are consecutive integers ordered by each cluster's smallest
    site index, so ids (and anything keyed by them, such as colors) are
    stable under relabeling runs and independent of edge processing order.
    """

    lattice: BoxLattice
    cluster_id: np.ndarray = field(repr=False, compare=False)
    cluster_sizes: np.ndarray = field(repr=False, compare=False)
    boundary_touching: frozenset[int]
    infinite_proxy: int | None
    finite_cluster_reps: np.ndarray = field(repr=False, compare=False)
    k_n: int
    proxy_rule: str

    def finite_sizes(self) -> np.ndarray:
        """Cluster sizes with the infinite stand-in zeroed out."""
        sizes = self.cluster_sizes.copy()
        if self.infinite_proxy is not None:
            sizes[self.infinite_proxy] = 0
        return sizes

    def proxy_site_count(self) -> int:
        """Number of box sites in the infinite stand-in (0 if none)."""
        if self.infinite_proxy is None:
            return 0
        return int(self.cluster_sizes[self.infinite_proxy])


def label_clusters(config: EdgeConfig, proxy_rule: str = PROXY_BOUNDARY_LARGEST) -> ClusterLabeling:
    """Label clusters of the open subgraph.

    Union-find with path halving and union by size; the final relabeling
    pass assigns consecutive ids in order of first site occurrence. The
    cluster count is cross-checked against the number of merging unions.
    """
    if proxy_rule not in PROXY_RULES:
        raise ValueError(f"proxy rule must be one of {PROXY_RULES}, got {proxy_rule!r}")
    lattice = config.lattice
    n_sites = lattice.site_count

    parent = list(range(n_sites))
    size = [1] * n_sites
    merges = 0
    open_u = lattice.edge_u[config.open].tolist()
    open_v = lattice.edge_v[config.open].tolist()
    for a, b in zip(open_u, open_v):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
        merges += 1

    # Resolve every site to its root by repeated pointer jumping; with
    # union by size the forest depth is logarithmic, so this terminates in
    # a handful of vectorized passes.
    roots = np.asarray(parent, dtype=np.int64)
    while True:
        jumped = roots[roots]
        if np.array_equal(jumped, roots):
            break
        roots = jumped

    uniq, first_pos, inverse = np.unique(roots, return_index=True, return_inverse=True)
    order = np.argsort(first_pos, kind="stable")
    rank = np.empty(uniq.shape[0], dtype=np.int64)
    rank[order] = np.arange(uniq.shape[0], dtype=np.int64)
    cluster_id = rank[inverse]

    k_n = int(uniq.shape[0])
    if k_n != n_sites - merges:
        raise InvariantViolationError(
            f"cluster count {k_n} != site count {n_sites} minus merges {merges}"
        )

    cluster_sizes = np.bincount(cluster_id, minlength=k_n).astype(np.int64)
    reps = np.sort(first_pos)

    boundary_ids = np.unique(cluster_id[lattice.boundary_sites])
    boundary_touching = frozenset(int(c) for c in boundary_ids)

    infinite_proxy: int | None = None
    if proxy_rule == PROXY_BOUNDARY_LARGEST and boundary_ids.size > 0:
        b_sizes = cluster_sizes[boundary_ids]
        best = boundary_ids[b_sizes == b_sizes.max()].min()
        infinite_proxy = int(best)

    if infinite_proxy is None:
        finite_reps = reps
    else:
        finite_reps = reps[np.arange(k_n) != infinite_proxy]
    finite_reps = finite_reps.copy()
    finite_reps.setflags(write=False)
    cluster_id.setflags(write=False)
    cluster_sizes.setflags(write=False)

    return ClusterLabeling(
        lattice=lattice,
        cluster_id=cluster_id,
        cluster_sizes=cluster_sizes,
        boundary_touching=boundary_touching,
        infinite_proxy=infinite_proxy,
        finite_cluster_reps=finite_reps,
        k_n=k_n,
        proxy_rule=proxy_rule,
    )


def default_window_margin(lattice: BoxLattice) -> int:
    """Default inner-window margin, ceil(4 ln side), clamped to the radius."""
    if lattice.side == 1:
        return 0
    return min(lattice.n, math.ceil(4.0 * math.log(lattice.side)))


def square_sums(labeling: ClusterLabeling, window_margin: int) -> tuple[int, int]:
    """Both exact integer routes to the windowed square sum.

    Returns (per_site, per_cluster) where per_site sums, over window sites
    outside the infinite stand-in, the size of the site's cluster piece
    inside the window, and per_cluster sums the squared piece sizes over
    finite clusters. The two are equal for any correct labeling.
    """
    window = inner_window(labeling.lattice, window_margin)
    labels = labeling.cluster_id[window]
    if labeling.infinite_proxy is not None:
        labels = labels[labels != labeling.infinite_proxy]
    piece = np.bincount(labels, minlength=labeling.k_n).astype(np.int64)
    per_cluster = int(np.dot(piece, piece))
    per_site = int(piece[labels].sum())
    return per_site, per_cluster


def square_sum_density(labeling: ClusterLabeling, window_margin: int) -> float:
    """Windowed mean of |C'(x) within the window| over window sites.

    Computed by two independent routes that must agree exactly as integers;
    any discrepancy raises rather than returning a number.
    """
    per_site, per_cluster = square_sums(labeling, window_margin)
    if per_site != per_cluster:
        raise InvariantViolationError(
            f"square-sum identity violated: per-site {per_site} != per-cluster {per_cluster}"
        )
    return per_site / window_site_count(labeling.lattice, window_margin)


@dataclass(frozen=True)
class PercolationEstimates:
    """Monte Carlo estimates of the cluster functionals of one (d, n, p)."""

    theta_hat: float
    chi_f_hat: float
    kappa_hat: float
    sigma_p2_hat: float
    square_sum_density: float
    theta_se: float
    chi_f_se: float
    kappa_se: float
    sigma_p2_se: float
    square_sum_se: float
    replicates: int
    margin: int
    proxy_rule: str


def labeling_functionals(labeling: ClusterLabeling, margin: int) -> dict[str, float]:
    """Per-configuration functional values used by the pooled estimators."""
    lattice = labeling.lattice
    window = inner_window(lattice, margin)
    labels_w = labeling.cluster_id[window]
    if labeling.infinite_proxy is not None:
        theta = float(np.count_nonzero(labels_w == labeling.infinite_proxy)) / window.shape[0]
    else:
        theta = 0.0
    chi = float(labeling.finite_sizes()[labels_w].mean())
    kappa = labeling.k_n / lattice.site_count
    ssd = square_sum_density(labeling, margin)
    return {
        "theta": theta,
        "chi_f": chi,
        "kappa": kappa,
        "square_sum_density": ssd,
        "proxy_sites": float(labeling.proxy_site_count()),
        "k_n": float(labeling.k_n),
    }


def _variance_se(values: np.ndarray, scale: float) -> float:
    """Standard error of the sample variance of values, divided by scale.

    Uses the classical formula Var(s^2) = m4/R - s^4 (R-3) / (R (R-1)) with
    the empirical fourth central moment plugged in.
    """
    r = values.shape[0]
    if r < 2:
        return float("nan")
    centered = values - values.mean()
    s2 = float(np.dot(centered, centered)) / (r - 1)
    m4 = float(np.mean(centered**4))
    var_of_var = m4 / r - s2 * s2 * (r - 3) / (r * (r - 1))
    return math.sqrt(max(0.0, var_of_var)) / scale


def _mean_se(values: np.ndarray) -> float:
    if values.shape[0] < 2:
        return float("nan")
    return float(values.std(ddof=1)) / math.sqrt(values.shape[0])


def estimate_functionals(
    lattice: BoxLattice,
    p: float,
    replicates: int,
    seed: int,
    margin: int | None = None,
    *,
    proxy_rule: str = PROXY_BOUNDARY_LARGEST,
    stream_role: str = "graph",
) -> PercolationEstimates:
    """Estimate the cluster functionals from independent configurations.

    Replicate r draws its configuration from the stream (seed, stream_role, r),
    so estimates do not depend on scheduling. The infinite-cluster density is
    the window fraction occupied by the stand-in cluster; the finite mean
    cluster size averages full-box cluster sizes over window sites.
    """
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    warn_if_near_critical(lattice.d, p)
    if margin is None:
        margin = default_window_margin(lattice)

    rows = []
    for r in range(replicates):
        config = sample_config(lattice, p, seed, f"{stream_role}:{r}")
        labeling = label_clusters(config, proxy_rule)
        rows.append(labeling_functionals(labeling, margin))

    theta = np.array([row["theta"] for row in rows])
    chi = np.array([row["chi_f"] for row in rows])
    kappa = np.array([row["kappa"] for row in rows])
    ssd = np.array([row["square_sum_density"] for row in rows])
    proxy_sites = np.array([row["proxy_sites"] for row in rows])

    if replicates >= 2:
        sigma_p2 = float(proxy_sites.var(ddof=1)) / lattice.site_count
        sigma_p2_se = _variance_se(proxy_sites, float(lattice.site_count))
    else:
        sigma_p2 = 0.0
        sigma_p2_se = float("nan")

    return PercolationEstimates(
        theta_hat=float(theta.mean()),
        chi_f_hat=float(chi.mean()),
        kappa_hat=float(kappa.mean()),
        sigma_p2_hat=sigma_p2,
        square_sum_density=float(ssd.mean()),
        theta_se=_mean_se(theta),
        chi_f_se=_mean_se(chi),
        kappa_se=_mean_se(kappa),
        sigma_p2_se=sigma_p2_se,
        square_sum_se=_mean_se(ssd),
        replicates=replicates,
        margin=margin,
        proxy_rule=proxy_rule,
    )


@dataclass(frozen=True)
class SigmaP2Estimate:
    """Variance estimate for the scaled occupied-volume fluctuations."""

    value: float
    se: float
    degenerate: bool


def estimate_sigma_p2(
    lattice: BoxLattice,
    p: float,
    replicates: int,
    seed: int,
    *,
    proxy_rule: str = PROXY_BOUNDARY_LARGEST,
    stream_role: str = "graph",
) -> SigmaP2Estimate:
    """Across-configuration variance of the stand-in cluster volume.

    Returns Var(|box sites in the stand-in|) / site_count with a variance-of-
    variance standard error. If no replicate produced a stand-in cluster the
    value is 0 and the estimate is flagged degenerate.
    """
    if replicates < 2:
        raise ValueError(f"replicates must be >= 2, got {replicates}")
    warn_if_near_critical(lattice.d, p)
    counts = np.empty(replicates, dtype=np.float64)
    any_proxy = False
    for r in range(replicates):
        config = sample_config(lattice, p, seed, f"{stream_role}:{r}")
        labeling = label_clusters(config, proxy_rule)
        if labeling.infinite_proxy is not None:
            any_proxy = True
        counts[r] = labeling.proxy_site_count()
    if not any_proxy:
        return SigmaP2Estimate(value=0.0, se=0.0, degenerate=True)
    value = float(counts.var(ddof=1)) / lattice.site_count
    se = _variance_se(counts, float(lattice.site_count))
    return SigmaP2Estimate(value=value, se=se, degenerate=False)


def connectivity_profile(
    lattice: BoxLattice,
    p: float,
    offsets: list[tuple[int, ...]],
    replicates: int,
    seed: int,
    *,
    stream_role: str = "graph",
) -> dict[tuple[int, ...], float]:
    """Empirical probability that the origin is connected to origin+offset."""
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    origin = lattice.origin
    targets = {}
    for offset in offsets:
        coords = tuple(offset)
        targets[coords] = lattice.index_of(coords)
    hits = {coords: 0 for coords in targets}
    for r in range(replicates):
        config = sample_config(lattice, p, seed, f"{stream_role}:{r}")
        labeling = label_clusters(config, PROXY_DISABLED)
        origin_label = labeling.cluster_id[origin]
        for coords, target in targets.items():
            if labeling.cluster_id[target] == origin_label:
                hits[coords] += 1
    return {coords: hits[coords] / replicates for coords in targets}
