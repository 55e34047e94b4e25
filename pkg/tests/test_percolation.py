"""Cluster labeling, exact square-sum identities, and functional estimators."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcl.lattice import build_box, inner_window, window_site_count
from dcl.percolation import (
    NEAR_CRITICAL_BAND,
    PROXY_BOUNDARY_LARGEST,
    PROXY_DISABLED,
    ClusterLabeling,
    NearCriticalWarning,
    connectivity_profile,
    default_window_margin,
    estimate_functionals,
    estimate_sigma_p2,
    label_clusters,
    labeling_functionals,
    sample_config,
    square_sum_density,
    square_sums,
)

from oracles import bfs_clusters, enumerate_box, partition_of


def _oracle_partition(lattice, open_mask):
    sites = [lattice.site_of(i) for i in range(lattice.site_count)]
    open_edges = [
        (lattice.site_of(int(u)), lattice.site_of(int(v)))
        for u, v, keep in zip(lattice.edge_u, lattice.edge_v, open_mask)
        if keep
    ]
    return bfs_clusters(sites, open_edges)


def _labeling_partition(lattice, labeling):
    groups: dict[int, set] = {}
    for i, label in enumerate(labeling.cluster_id.tolist()):
        groups.setdefault(label, set()).add(lattice.site_of(i))
    return {frozenset(g) for g in groups.values()}


@pytest.mark.parametrize("d,n,p", [(1, 4, 0.5), (2, 4, 0.3), (2, 4, 0.7), (3, 2, 0.25)])
def test_labels_match_bfs_oracle(d, n, p):
    lat = build_box(d, n)
    for rep in range(10):
        config = sample_config(lat, p, seed=11, stream_tag=f"g:{rep}")
        labeling = label_clusters(config, PROXY_DISABLED)
        oracle = bfs_clusters(
            [lat.site_of(i) for i in range(lat.site_count)],
            [
                (lat.site_of(int(u)), lat.site_of(int(v)))
                for u, v, keep in zip(lat.edge_u, lat.edge_v, config.open)
                if keep
            ],
        )
        assert _labeling_partition(lat, labeling) == partition_of(oracle)
        assert labeling.k_n == len(set(oracle.values()))


@given(
    st.integers(min_value=1, max_value=3),
    st.integers(min_value=1, max_value=3),
    st.floats(min_value=0.0, max_value=1.0),
    st.integers(min_value=0, max_value=2**31),
)
@settings(max_examples=40, deadline=None)
def test_labeling_properties(d, n, p, seed):
    lat = build_box(d, n)
    config = sample_config(lat, p, seed, "hyp")
    labeling = label_clusters(config, PROXY_BOUNDARY_LARGEST)
    ids = labeling.cluster_id
    # first-occurrence order: id 0 at site 0, each new id is previous max + 1
    assert ids[0] == 0
    seen_max = -1
    for label in ids.tolist():
        assert label <= seen_max + 1
        seen_max = max(seen_max, label)
    assert seen_max == labeling.k_n - 1
    assert labeling.cluster_sizes.sum() == lat.site_count
    counts = np.bincount(ids, minlength=labeling.k_n)
    assert (counts == labeling.cluster_sizes).all()
    if labeling.infinite_proxy is not None:
        assert labeling.infinite_proxy in labeling.boundary_touching
    # both square-sum routes agree exactly, at every legal margin
    for margin in range(lat.n + 1):
        a, b = square_sums(labeling, margin)
        assert a == b


def test_open_fraction_tracks_p():
    lat = build_box(2, 16)
    config = sample_config(lat, 0.3, seed=5, stream_tag="frac")
    frac = config.open.mean()
    assert abs(frac - 0.3) < 4 * math.sqrt(0.3 * 0.7 / lat.edge_count)


def test_coupled_monotonicity_in_p():
    lat = build_box(2, 8)
    ps = [0.1, 0.3, 0.5, 0.7, 0.9]
    configs = [sample_config(lat, p, seed=3, stream_tag="mono") for p in ps]
    for lo, hi in zip(configs, configs[1:]):
        assert (hi.open | lo.open == hi.open).all(), "open sets must be nested"
    ks = [label_clusters(c, PROXY_DISABLED).k_n for c in configs]
    assert ks == sorted(ks, reverse=True)


def test_degenerate_p0():
    lat = build_box(2, 3)
    labeling = label_clusters(sample_config(lat, 0.0, 1, "x"), PROXY_DISABLED)
    assert labeling.k_n == lat.site_count
    assert (labeling.cluster_sizes == 1).all()
    assert labeling.infinite_proxy is None
    assert square_sums(labeling, 0) == (lat.site_count, lat.site_count)
    assert square_sum_density(labeling, 0) == 1.0


def test_degenerate_p1():
    lat = build_box(2, 3)
    labeling = label_clusters(sample_config(lat, 1.0, 1, "x"), PROXY_BOUNDARY_LARGEST)
    assert labeling.k_n == 1
    assert labeling.infinite_proxy == 0
    assert labeling.proxy_site_count() == lat.site_count
    assert (labeling.finite_sizes() == 0).all()
    assert square_sum_density(labeling, 0) == 0.0
    disabled = label_clusters(sample_config(lat, 1.0, 1, "x"), PROXY_DISABLED)
    assert square_sum_density(disabled, 0) == float(lat.site_count)


def test_proxy_is_largest_boundary_cluster_smallest_id_ties():
    # Path on {-2..2}: open only the two outer edges, giving boundary
    # clusters {-2,-1} and {1,2} of equal size; the tie goes to the
    # first-seen (smaller) cluster id, the one containing -2.
    lat = build_box(1, 2)
    base = sample_config(lat, 0.0, 1, "x")
    open_mask = base.open.copy()
    open_mask[0] = True
    open_mask[3] = True
    config = base.__class__(lattice=lat, open=open_mask, p=0.5, seed=1, stream_tag="manual")
    labeling = label_clusters(config, PROXY_BOUNDARY_LARGEST)
    assert labeling.cluster_sizes[labeling.infinite_proxy] == 2
    assert labeling.infinite_proxy == labeling.cluster_id[0]


def test_square_sum_matches_enumeration_oracle():
    # Exhaustive check on the 3x3 box: every config, full window, no proxy.
    lat = build_box(2, 1)
    oracle = enumerate_box(2, 1, Fraction(1, 2))
    total = 0
    k_total = 0
    for mask in range(2**lat.edge_count):
        open_mask = np.array([(mask >> i) & 1 == 1 for i in range(lat.edge_count)])
        config = sample_config(lat, 0.5, 1, "x").__class__(
            lattice=lat, open=open_mask, p=0.5, seed=1, stream_tag="enum"
        )
        labeling = label_clusters(config, PROXY_DISABLED)
        a, b = square_sums(labeling, 0)
        assert a == b
        total += a
        k_total += labeling.k_n
    assert Fraction(total, 2**lat.edge_count) == oracle["mean_square_sum"]
    assert Fraction(k_total, 2**lat.edge_count) == oracle["mean_k"]


def test_windowed_square_sum_excludes_proxy():
    lat = build_box(2, 2)
    labeling = label_clusters(sample_config(lat, 1.0, 1, "x"), PROXY_BOUNDARY_LARGEST)
    # single cluster is the proxy, so every windowed square sum is empty
    for margin in range(3):
        assert square_sums(labeling, margin) == (0, 0)


def test_default_window_margin():
    assert default_window_margin(build_box(2, 0)) == 0
    lat = build_box(2, 32)
    assert default_window_margin(lat) == min(32, math.ceil(4 * math.log(lat.side)))
    tiny = build_box(2, 2)
    assert default_window_margin(tiny) == 2  # clamped to the radius


def test_estimates_p0_exact():
    lat = build_box(2, 4)
    est = estimate_functionals(lat, 0.0, 5, seed=2, proxy_rule=PROXY_DISABLED)
    assert est.theta_hat == 0.0
    assert est.chi_f_hat == 1.0
    assert est.kappa_hat == 1.0
    assert est.square_sum_density == 1.0
    assert est.theta_se == est.chi_f_se == est.kappa_se == 0.0


def test_estimates_p1_exact():
    lat = build_box(2, 4)
    est = estimate_functionals(lat, 1.0, 5, seed=2, proxy_rule=PROXY_BOUNDARY_LARGEST)
    assert est.theta_hat == 1.0
    assert est.chi_f_hat == 0.0
    assert est.kappa_hat == 1.0 / lat.site_count
    assert est.sigma_p2_hat == 0.0


def test_estimator_matches_enumeration_d1():
    # Exact mean per-site cluster size on the path {-2..2}, margin 0.
    oracle = enumerate_box(1, 2, Fraction(1, 2))
    expected = float(oracle["mean_per_site_cluster_size"])
    lat = build_box(1, 2)
    est = estimate_functionals(
        lat, 0.5, 4000, seed=9, margin=0, proxy_rule=PROXY_DISABLED
    )
    assert abs(est.chi_f_hat - expected) <= 3 * est.chi_f_se
    assert abs(est.square_sum_density - expected) <= 3 * est.square_sum_se


def test_estimate_replicate_validation():
    lat = build_box(1, 1)
    with pytest.raises(ValueError):
        estimate_functionals(lat, 0.5, 0, seed=1)
    with pytest.raises(ValueError):
        estimate_sigma_p2(lat, 0.5, 1, seed=1)


def test_sigma_p2_degenerate_no_proxy():
    lat = build_box(2, 3)
    est = estimate_sigma_p2(lat, 0.2, 8, seed=4, proxy_rule=PROXY_DISABLED)
    assert est.degenerate
    assert est.value == 0.0


def test_sigma_p2_p1_zero():
    lat = build_box(2, 3)
    est = estimate_sigma_p2(lat, 1.0, 8, seed=4)
    assert not est.degenerate
    assert est.value == 0.0


def test_near_critical_warning_band():
    import warnings

    from dcl.percolation import warn_if_near_critical

    lat = build_box(2, 2)
    with pytest.warns(NearCriticalWarning):
        estimate_functionals(lat, 0.5 + NEAR_CRITICAL_BAND / 2, 2, seed=1)
    with pytest.warns(NearCriticalWarning):
        warn_if_near_critical(2, 0.49)
    for d, p in ((2, 0.3), (2, 0.5 + 2 * NEAR_CRITICAL_BAND), (2, 0.0), (2, 1.0), (3, 0.49)):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            warn_if_near_critical(d, p)


def test_connectivity_profile_trivial_offsets():
    lat = build_box(2, 3)
    profile = connectivity_profile(lat, 0.0, [(0, 0), (1, 0)], replicates=20, seed=6)
    assert profile[(0, 0)] == 1.0
    assert profile[(1, 0)] == 0.0


def test_connectivity_profile_d1_adjacent_is_p():
    lat = build_box(1, 2)
    reps = 4000
    profile = connectivity_profile(lat, 0.6, [(1,)], replicates=reps, seed=7)
    se = math.sqrt(0.6 * 0.4 / reps)
    assert abs(profile[(1,)] - 0.6) <= 3 * se


def test_labeling_functionals_row_keys():
    lat = build_box(2, 4)
    labeling = label_clusters(sample_config(lat, 0.4, 3, "row"), PROXY_BOUNDARY_LARGEST)
    row = labeling_functionals(labeling, margin=1)
    assert set(row) >= {"theta", "chi_f", "kappa", "square_sum_density", "proxy_sites"}
    assert row["kappa"] == labeling.k_n / lat.site_count


def test_estimates_deterministic_in_seed():
    lat = build_box(2, 4)
    a = estimate_functionals(lat, 0.45, 20, seed=3)
    b = estimate_functionals(lat, 0.45, 20, seed=3)
    assert a == b
    c = estimate_functionals(lat, 0.45, 20, seed=4)
    assert c != a
