"""Acceptance criteria; each test prints one ``criterion n: PASS/FAIL`` line."""

import itertools
import math
import time

import numpy as np
import pytest
from scipy.stats import poisson

from crndist.analysis import (
    bound_mixing_birth,
    bound_mixing_decay,
    db_stationary,
    exact_point_mass_stationary,
    oracle_stationary,
    solve_detailed_balance,
    unif_error_bound,
)
from crndist.dist import FiniteDistribution, UniformBox, distance_to_spec, inf_norm_distance, marginalize
from crndist.network import ReactionNetwork
from crndist.sim import SimConfig, estimate_limit, simulate, verify, warmup
from crndist.synth import (
    synth_bimolecular,
    synth_full,
    synth_multidim_unif,
    synth_point_mass,
    synth_point_mass_mix,
    synth_prod_pois,
    synth_spanning_tree,
)

from strategies import adjacent_pairs

pytestmark = pytest.mark.acceptance

MIX_QS = [
    FiniteDistribution({(0,): 0.2, (2,): 0.5, (5,): 0.3}),
    FiniteDistribution({(1,): 0.4, (3,): 0.6}),
    FiniteDistribution({(0,): 0.5, (4,): 0.5}),
]


@pytest.fixture(scope="module", autouse=True)
def _compiled():
    warmup()


def _random_q(rng, d, m):
    max_coord = 24 if d == 1 else 6
    pts = set()
    while len(pts) < m:
        pts.add(tuple(int(v) for v in rng.integers(0, max_coord + 1, size=d)))
    w = rng.uniform(0.05, 1.0, size=m)
    return FiniteDistribution.normalized(dict(zip(sorted(pts), w)), d)


def _random_cluster(rng, d, m):
    start = tuple(int(v) for v in rng.integers(0, 4, size=d))
    states, seen = [start], {start}
    while len(states) < m:
        base = list(states[rng.integers(len(states))])
        axis = int(rng.integers(d))
        base[axis] += int(rng.choice([-1, 1]))
        nxt = tuple(base)
        if base[axis] >= 0 and nxt not in seen:
            seen.add(nxt)
            states.append(nxt)
    w = rng.uniform(0.05, 1.0, size=m)
    return FiniteDistribution.normalized(dict(zip(sorted(states), w)), d)


def _db_marginal(res):
    cert = solve_detailed_balance(res.net)
    assert cert is not None
    table = db_stationary(res.net, cert, res.init)
    return marginalize(table.dist, res.visible)


def test_c1_full_construction_exact(criterion):
    rng = np.random.default_rng(101)
    qs = [_random_q(rng, d, int(rng.integers(1, 21))) for d in (1, 2, 3) for _ in range(9)][:25]
    start = time.perf_counter()
    worst = max(inf_norm_distance(_db_marginal(synth_full(q)), q) for q in qs)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-12 and elapsed < 1.0
    criterion(1, ok, f"25 q, max dist={worst:.2e}, {elapsed:.2f}s (< 1s)")
    assert ok


def test_c2_bimolecular_and_spanning_tree(criterion):
    rng = np.random.default_rng(202)
    qs = [_random_cluster(rng, 1 + k % 3, int(rng.integers(2, 13))) for k in range(10)]
    start = time.perf_counter()
    worst, counts_ok = 0.0, True
    for q in qs:
        bi, tree = synth_bimolecular(q), synth_spanning_tree(q)
        worst = max(worst, inf_norm_distance(_db_marginal(bi), q), inf_norm_distance(_db_marginal(tree), q))
        m = len(q)
        counts_ok &= bi.reaction_count == 2 * adjacent_pairs(q.support)
        counts_ok &= tree.reaction_count == 2 * (m - 1)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-12 and counts_ok and elapsed < 1.0
    criterion(2, ok, f"10 clusters, max dist={worst:.2e}, counts ok={counts_ok}, {elapsed:.2f}s (< 1s)")
    assert ok


def test_c3_point_mass_guarantee(criterion):
    start = time.perf_counter()
    worst_gap, worst_match, worst_out, n = 0.0, 0.0, 0.0, 0
    for d in (1, 2, 3):
        for x in itertools.product(range(6), repeat=d):
            for eps in (0.5, 0.1, 0.01):
                exact = exact_point_mass_stationary(x, eps)
                worst_gap = max(worst_gap, (1.0 - exact.dist.pmf(x)) / eps)
                box = [xi + 6 if xi > 0 else 0 for xi in x]
                orc = oracle_stationary(synth_point_mass(x, eps).net, box)
                worst_match = max(worst_match, inf_norm_distance(orc.dist, exact.dist))
                worst_out = max(worst_out, orc.boundary_outflow)
                n += 1
    elapsed = time.perf_counter() - start
    ok = worst_gap < 1 and worst_match < 1e-8 and worst_out < 1e-6 and elapsed < 30
    criterion(3, ok, f"{n} cases, max (1-pi(x))/eps={worst_gap:.3f}, oracle diff={worst_match:.2e}, "
                     f"outflow={worst_out:.2e}, {elapsed:.1f}s (< 30s)")
    assert ok


UNIF_CASES = [
    ((0,), (2,), 0.5),
    ((1,), (3,), 0.2),
    ((0,), (4,), 0.1),
    ((2,), (4,), 0.05),
    ((4,), (4,), 0.05),
    ((0, 0), (1, 2), 0.5),
    ((1, 0), (2, 1), 0.2),
    ((0, 1), (3, 2), 0.1),
    ((0, 0), (2, 2), 0.05),
    ((1, 2), (4, 4), 0.05),
]


def test_c4_uniform_bound(criterion):
    start = time.perf_counter()
    slack, trend, worst_out = math.inf, 0.0, 0.0
    for a, b, delta in UNIF_CASES:
        net = synth_multidim_unif(a, b, delta).net
        orc = oracle_stationary(net, [hi + 5 for hi in b])
        dist = distance_to_spec(orc.dist, UniformBox(a, b))
        bound = unif_error_bound(a, b, delta=delta).joint
        slack = min(slack, bound - dist)
        worst_out = max(worst_out, orc.diagnostics["boundary_outflow_relative"])
        if delta == 0.05:
            trend = max(trend, dist / delta)
    elapsed = time.perf_counter() - start
    ok = slack >= 0 and trend <= 1.5 and elapsed < 60
    criterion(4, ok, f"min(bound-dist)={slack:.3e}, max dist/delta at 0.05={trend:.3f}, "
                     f"rel outflow={worst_out:.1e}, {elapsed:.1f}s (< 60s)")
    assert ok


def test_c5_product_poisson(criterion):
    start = time.perf_counter()
    worst, worst_out = 0.0, 0.0
    for c, box in (((1.0,), (25,)), ((2.0, 0.5), (25, 15))):
        orc = oracle_stationary(synth_prod_pois(c).net, box)
        for x, p in orc.dist:
            want = math.prod(poisson.pmf(xi, ci) for xi, ci in zip(x, c))
            worst = max(worst, abs(p - want))
        worst_out = max(worst_out, orc.boundary_outflow)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-8 and worst_out < 1e-6 and elapsed < 30
    criterion(5, ok, f"max pmf diff={worst:.2e}, outflow={worst_out:.2e}, {elapsed:.2f}s (< 30s)")
    assert ok


def _mix_starts(q):
    m = len(q)
    yield (0,) * (1 + m)
    yield (7,) + (0,) * m
    yield (3,) + tuple(1 if k < 2 else 0 for k in range(m))


@pytest.mark.slow
def test_c6_point_mass_mix_ergodic(criterion):
    cfg = SimConfig(t_end=1e6, seed=4242)
    start = time.perf_counter()
    worst = 0.0
    for q in MIX_QS:
        net = synth_point_mass_mix(q, 0.1).net
        ests = [estimate_limit(net, x0, cfg, replicates=8).dist for x0 in _mix_starts(q)]
        for p, r in itertools.combinations(ests, 2):
            worst = max(worst, inf_norm_distance(p, r))
    elapsed = time.perf_counter() - start
    ok = worst < 0.02 and elapsed < 300
    criterion(6, ok, f"3 q x 3 starts, max pairwise dist={worst:.4f} (< 0.02), {elapsed:.0f}s (< 300s)")
    assert ok


@pytest.mark.slow
def test_c7_delta_trend(criterion):
    cfg = SimConfig(t_end=1e6, seed=777)
    start = time.perf_counter()
    ok_trend, rows = True, []
    for q in MIX_QS:
        dists, spreads = [], []
        for delta in (0.5, 0.2, 0.1):
            rep = verify(synth_point_mass_mix(q, delta).net, q, mode="sim", cfg=cfg, replicates=8)
            dists.append(rep.distance)
            spreads.append(rep.diagnostics["spread"])
        for k in range(2):
            ok_trend &= dists[k + 1] <= dists[k] + 2 * max(spreads[k], spreads[k + 1])
        rows.append("/".join(f"{v:.3f}" for v in dists))
    elapsed = time.perf_counter() - start
    ok = ok_trend and elapsed < 600
    criterion(7, ok, f"dist at delta .5/.2/.1: {', '.join(rows)}, {elapsed:.0f}s (< 600s)")
    assert ok


def _final_law(net, x0, t, seeds):
    cfg = SimConfig(t_end=t, burn_in_fraction=0.0)
    finals = [simulate(net, x0, cfg.with_seed(s)).final_state[:1] for s in seeds]
    counts = {}
    for f in finals:
        counts[f] = counts.get(f, 0) + 1
    return FiniteDistribution.normalized(counts, 1)


@pytest.mark.slow
def test_c8_mixing_bounds(criterion):
    seeds = range(1000, 1016)
    start = time.perf_counter()
    eps = 0.1
    decay_net = synth_point_mass((0,), eps).net
    kappa1 = decay_net.reactions[0].rate
    t_decay = bound_mixing_decay(kappa1, 1.0, eps).bound
    target = FiniteDistribution({(0,): 1.0})
    decay = max(inf_norm_distance(_final_law(decay_net, (x0,), t_decay, seeds), target)
                for x0 in (1, 5, 20, 200))

    birth_net = ReactionNetwork.from_mappings(("V",), [({}, {"V": 1}, 0.1), ({"V": 2}, {"V": 1}, 20.0)])
    b = bound_mixing_birth(1, 0.1, 20.0, 0.2)
    exact = exact_point_mass_stationary((1,), 2 * 0.1 / 20.0).dist
    birth = max(inf_norm_distance(_final_law(birth_net, (x0,), b.bound, seeds), exact)
                for x0 in (0, 1, 4, 30))
    elapsed = time.perf_counter() - start
    ok = decay < eps and birth < b.level and elapsed < 300
    criterion(8, ok, f"decay t={t_decay:.3f} dist={decay:.4f} (< {eps}), birth t={b.bound:.1f} "
                     f"dist={birth:.4f} (< {b.level}), {elapsed:.1f}s (< 300s)")
    assert ok


def _db_networks():
    q1 = FiniteDistribution({(0,): 0.3, (1,): 0.7})
    q2 = FiniteDistribution({(0, 0): 0.1, (1, 0): 0.2, (1, 1): 0.3, (2, 1): 0.25, (2, 2): 0.15})
    q3 = FiniteDistribution({(0,): 0.2, (1,): 0.3, (2,): 0.1, (3,): 0.4})
    q4 = FiniteDistribution({(0,): 0.25, (3,): 0.35, (5,): 0.4})
    nets = []
    for q in (q1, q2, q3):
        for build in (synth_full, synth_bimolecular, synth_spanning_tree):
            r = build(q)
            nets.append((f"{r.method}{len(q)}", r.net, r.init))
    r = synth_full(q4)
    nets.append(("full-gapped", r.net, r.init))
    nets.append(("birth-death", ReactionNetwork.from_mappings(
        ("A",), [({}, {"A": 1}, 2.0), ({"A": 1}, {}, 1.0)]), (0,)))
    nets.append(("dimerization", ReactionNetwork.from_mappings(
        ("A", "B"), [({"A": 2}, {"B": 1}, 0.5), ({"B": 1}, {"A": 2}, 1.5)]), (12, 0)))
    nets.append(("isomer-chain", ReactionNetwork.from_mappings(
        ("A", "B", "C"), [({"A": 1}, {"B": 1}, 2.0), ({"B": 1}, {"A": 1}, 1.0),
                          ({"B": 1}, {"C": 1}, 1.0), ({"C": 1}, {"B": 1}, 3.0)]), (4, 2, 0)))
    return nets


def test_c9_db_vs_oracle(criterion):
    start = time.perf_counter()
    worst, worst_out, names = 0.0, 0.0, []
    for name, net, x0 in _db_networks():
        cert = solve_detailed_balance(net)
        assert cert is not None, name
        if name == "birth-death":
            box = (40,)
            exact = db_stationary(net, cert, x0, cap=box[0] + 1, allow_truncation=True)
        else:
            exact = db_stationary(net, cert, x0)
            box = [max(s[k] for s in exact.dist.support) for k in range(net.n_species)]
        orc = oracle_stationary(net, box, x0)
        worst = max(worst, inf_norm_distance(exact.dist, orc.dist))
        worst_out = max(worst_out, orc.boundary_outflow)
        names.append(name)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-8 and worst_out < 1e-6 and elapsed < 30
    criterion(9, ok, f"{len(names)} networks, max dist={worst:.2e}, outflow={worst_out:.1e}, "
                     f"{elapsed:.2f}s (< 30s)")
    assert ok
