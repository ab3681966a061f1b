"""Estimator definitions, stream layout, bit-level determinism, and rates."""

import dataclasses
import math

import numpy as np
import pytest

from nestmc.estimators import (collapsed_estimate, inner_estimate, mc_estimate,
                               nmc_estimate, nmc_estimate_depth)
from nestmc.models import CATALOG, make_constant, make_gauss_log
from nestmc.problem import ProblemTree
from nestmc.rng import make_root, next_gaussian, next_uniform, split


def _scalar_variant(p):
    """Same model with the vectorized samplers removed (forces per-draw path)."""
    return dataclasses.replace(p, outer_batch=None, inner_batch=None)


# ---------------------------------------------------------------- mc_estimate

def test_mc_constant_integrand_exact():
    p = make_gauss_log()
    e = mc_estimate(p.outer_sampler, lambda y: 1.0, 37, make_root(0))
    assert e.value == 1.0
    assert e.n_outer == 37 and e.n_inner == 0 and e.total_draws == 37


def test_mc_uniform_second_moment():
    # y ~ Uniform(-1,1), E[y^2] = 1/3; batched for the million-draw run.
    e = mc_estimate(lambda s: 2.0 * next_uniform(s) - 1.0,
                    lambda y: y * y, 10**6, make_root(4),
                    sampler_batch=lambda b: 2.0 * b.uniforms() - 1.0)
    assert abs(e.value - 1.0 / 3.0) < 0.001


def test_mc_single_draw_definition():
    p = make_gauss_log()
    s = make_root(9)
    e = mc_estimate(p.outer_sampler, lambda y: 3.0 * y, 1, s)
    assert e.value == 3.0 * p.outer_sampler(split(s, 0))


def test_mc_batch_path_matches_scalar_path():
    sampler = lambda s: 2.0 * next_uniform(s) - 1.0
    batch = lambda b: 2.0 * b.uniforms() - 1.0
    s = make_root(12)
    a = mc_estimate(sampler, lambda y: y * y, 1000, s)
    b = mc_estimate(sampler, lambda y: y * y, 1000, s, sampler_batch=batch)
    assert a.value == b.value


def test_mc_rejects_bad_count():
    with pytest.raises(ValueError):
        mc_estimate(lambda s: 0.0, lambda y: y, 0, make_root(0))


# ------------------------------------------------------------- inner_estimate

def test_inner_constant_phi_exact():
    p = make_constant(4.0)
    assert inner_estimate(p, 0.0, 11, make_root(3)) == 4.0


def test_inner_single_draw_definition():
    p = make_gauss_log()
    s = make_root(5)
    got = inner_estimate(p, 0.25, 1, s)
    z1 = p.inner_sampler(split(s, 0), 0.25)
    assert got == p.phi(0.25, z1)


def test_inner_replication_mean_hits_gamma():
    # gamma(0) = 0.35682...; 200 replications of the M=1e5 inner mean.
    p = make_gauss_log()
    s = make_root(71)
    vals = np.array([inner_estimate(p, 0.0, 10**5, s.split(r)) for r in range(200)])
    se = np.std(vals, ddof=1) / math.sqrt(200)
    assert abs(vals.mean() - 0.35682) <= 3 * se


def test_inner_rejects_bad_count():
    with pytest.raises(ValueError):
        inner_estimate(make_gauss_log(), 0.0, 0, make_root(0))


def test_inner_batch_matches_scalar():
    p = make_gauss_log()
    q = _scalar_variant(p)
    s = make_root(6)
    for M in (1, 2, 33, 1000):
        assert inner_estimate(p, 0.4, M, s) == inner_estimate(q, 0.4, M, s)


# --------------------------------------------------------------- nmc_estimate

def test_nmc_constant_exact():
    e = nmc_estimate(make_constant(2.0), 13, 7, make_root(1))
    assert e.value == 2.0
    assert e.total_draws == 13 * 7 and e.depth_counts == (13, 7)
    assert e.degenerate_count == 0 and e.valid


def test_nmc_single_draw_definition():
    p = make_gauss_log()
    s = make_root(2)
    e = nmc_estimate(p, 1, 1, s)
    y1 = p.outer_sampler(split(split(s, 0), 0))
    z11 = p.inner_sampler(split(split(split(s, 1), 0), 0), y1)
    assert e.value == p.f(y1, p.phi(y1, z11))


def test_nmc_rejects_bad_counts():
    p = make_gauss_log()
    with pytest.raises(ValueError):
        nmc_estimate(p, 0, 5, make_root(0))
    with pytest.raises(ValueError):
        nmc_estimate(p, 5, 0, make_root(0))


def test_nmc_repeated_calls_bit_identical():
    p = make_gauss_log()
    s = make_root(42).split(3)
    assert nmc_estimate(p, 50, 20, s) == nmc_estimate(p, 50, 20, s)


@pytest.mark.parametrize("N,M", [(1, 1), (1, 9), (9, 1), (7, 70), (111, 3),
                                 (5, 70000)])
def test_nmc_batch_path_matches_scalar_path(N, M):
    p = CATALOG["linear-gauss"]()
    q = _scalar_variant(p)
    s = make_root(13)
    a = nmc_estimate(p, N, M, s)
    b = nmc_estimate(q, N, M, s)
    assert a == b


def test_nmc_degenerate_terms_excluded_and_counted():
    # f = log of a signed inner mean: some outer terms land negative.
    base = CATALOG["gauss-log"]()
    p = dataclasses.replace(
        _scalar_variant(base),
        inner_sampler=lambda s, y: next_gaussian(s),
        phi=lambda y, z: z,          # inner mean ~ N(0, 1/M): sign is a coin flip
        f=lambda y, w: np.log(w),
        gamma_exact=None, truth=None, inner_quad=None)
    e = nmc_estimate(p, 200, 4, make_root(0))
    assert 0 < e.degenerate_count < 200
    assert e.valid and np.isfinite(e.value)
    # all-degenerate estimate is flagged invalid with NaN value
    bad = dataclasses.replace(p, f=lambda y, w: np.log(np.zeros_like(w) - 1.0))
    e = nmc_estimate(bad, 8, 2, make_root(0))
    assert e.degenerate_count == 8 and not e.valid
    assert math.isnan(e.value)


def test_nmc_unbiased_under_linearity():
    # E[I_{N,M}] = I for linear f, at every small (N, M); R = 1e4.
    p = CATALOG["linear-gauss"]()
    truth = p.truth
    R = 10**4
    s = make_root(97)
    for row, (N, M) in enumerate([(N, M) for N in (1, 2, 5) for M in (1, 2, 5)]):
        row_stream = s.split(row)
        vals = np.array([nmc_estimate(p, N, M, row_stream.split(r)).value
                         for r in range(R)])
        se = np.std(vals, ddof=1) / math.sqrt(R)
        assert abs(vals.mean() - truth) <= 4 * se, (N, M)


def test_nmc_fixed_inner_bias_does_not_average_away():
    # gauss-log at M=5: the residual bias dwarfs the replication SE at N=1e5.
    p = make_gauss_log()
    s = make_root(31)
    R = 50
    vals = np.array([nmc_estimate(p, 10**5, 5, s.split(r)).value for r in range(R)])
    se = np.std(vals, ddof=1) / math.sqrt(R)
    assert abs(vals.mean() - p.truth) > 5 * se


def test_nmc_bias_positive_and_decreasing_in_M():
    p = CATALOG["bias-quad-pos"]()
    s = make_root(53)
    R, N = 400, 500
    means = []
    for row, M in enumerate((2, 4, 8, 16, 32)):
        row_stream = s.split(row)
        vals = [nmc_estimate(p, N, M, row_stream.split(r)).value for r in range(R)]
        means.append(float(np.mean(vals)))
    assert all(m > 0 for m in means)
    assert all(a > b for a, b in zip(means, means[1:]))


# --------------------------------------------------------- nmc_estimate_depth

def test_depth_one_tree_matches_mc():
    p = make_gauss_log()
    t = ProblemTree(sampler=lambda s, anc: p.outer_sampler(s),
                    integrand=lambda anc, y: y * y)
    s = make_root(19)
    e = nmc_estimate_depth(t, (64,), s)
    ref = mc_estimate(p.outer_sampler, lambda y: y * y, 64, s)
    assert e.value == ref.value
    assert e.depth_counts == (64,) and e.n_inner == 0


@pytest.mark.parametrize("N,M", [(1, 1), (6, 4), (40, 25)])
def test_depth_two_tree_bit_identical_to_nmc(N, M):
    p = _scalar_variant(make_gauss_log())
    t = ProblemTree.from_problem(p)
    s = make_root(27)
    a = nmc_estimate_depth(t, (N, M), s)
    b = nmc_estimate(p, N, M, s)
    assert a.value == b.value
    assert a.total_draws == b.total_draws == N * M
    assert a.degenerate_count == b.degenerate_count


def test_depth_three_constants_exact():
    c = 1.75
    leaf = ProblemTree(sampler=lambda s, anc: next_uniform(s),
                       integrand=lambda anc, x: c)
    mid = ProblemTree(sampler=lambda s, anc: next_uniform(s),
                      integrand=lambda anc, x, w: w, child=leaf)
    top = ProblemTree(sampler=lambda s, anc: next_uniform(s),
                      integrand=lambda anc, x, w: w, child=mid)
    e = nmc_estimate_depth(top, (3, 4, 5), make_root(0))
    assert e.value == c
    assert e.total_draws == 60 and e.depth_counts == (3, 4, 5)


def test_depth_count_mismatch_faults():
    t = ProblemTree.from_problem(make_gauss_log())
    with pytest.raises(ValueError):
        nmc_estimate_depth(t, (5,), make_root(0))
    with pytest.raises(ValueError):
        nmc_estimate_depth(t, (5, 0), make_root(0))


# --------------------------------------------------------- collapsed_estimate

def test_collapsed_constant_exact():
    assert collapsed_estimate(make_constant(3.0), 9, make_root(0)).value == 3.0


def test_collapsed_single_draw_definition():
    p = _scalar_variant(CATALOG["linear-gauss"]())
    s = make_root(14)
    e = collapsed_estimate(p, 1, s)
    sn = split(s, 0)
    y1 = p.outer_sampler(sn)
    z1 = p.inner_sampler(sn, y1)
    assert e.value == p.f(y1, p.phi(y1, z1))
    assert e.total_draws == 1 and e.n_inner == 1


def test_collapsed_requires_linear_g():
    with pytest.raises(ValueError):
        collapsed_estimate(make_gauss_log(), 10, make_root(0))


def test_collapsed_batch_matches_scalar():
    p = CATALOG["linear-gauss"]()
    q = _scalar_variant(p)
    s = make_root(15)
    for N in (1, 2, 100, 1000):
        assert collapsed_estimate(p, N, s) == collapsed_estimate(q, N, s)


def test_collapsed_replication_mean_hits_truth():
    p = CATALOG["linear-gauss"]()
    s = make_root(88)
    R = 100
    vals = np.array([collapsed_estimate(p, 10**6, s.split(r)).value
                     for r in range(R)])
    se = np.std(vals, ddof=1) / math.sqrt(R)
    assert abs(vals.mean() - p.truth) <= 3 * se


def test_collapsed_mse_scales_like_one_over_N():
    p = CATALOG["linear-gauss"]()
    s = make_root(121)
    R = 200
    pts = []
    for row, N in enumerate((10**2, 10**3, 10**4, 10**5)):
        row_stream = s.split(row)
        vals = np.array([collapsed_estimate(p, N, row_stream.split(r)).value
                         for r in range(R)])
        pts.append((N, float(np.mean((vals - p.truth) ** 2))))
    lx = np.log10([x for x, _ in pts])
    ly = np.log10([y for _, y in pts])
    slope = np.polyfit(lx, ly, 1)[0]
    assert -1.15 < slope < -0.85
