import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import digamma

from crndist.analysis import (
    bound_mixing_birth,
    bound_mixing_decay,
    certificate_residual,
    db_stationary,
    exact_point_mass_stationary,
    oracle_stationary,
    reachability_class,
    solve_detailed_balance,
    unif_error_bound,
)
from crndist.analysis.oracle import truncated_generator
from crndist.dist import FiniteDistribution, inf_norm_distance, marginalize
from crndist.errors import (
    BoxTooLargeError,
    CapExceededError,
    ReducibleTruncationError,
    ThresholdError,
    ValidationError,
)
from crndist.network import ReactionNetwork, propensity, transition_map
from crndist.synth import synth_bimolecular, synth_full, synth_point_mass, synth_prod_pois

from strategies import cluster_q, finite_q


def birth_death(k_in, k_out=1.0):
    return ReactionNetwork.from_mappings(("A",), [({}, {"A": 1}, k_in), ({"A": 1}, {}, k_out)])


# -- detailed balance ------------------------------------------------------

def test_full_certificate_matches_closed_form_equilibrium():
    q = FiniteDistribution({(0,): 0.3, (1,): 0.7})
    net = synth_full(q).net
    cert = solve_detailed_balance(net)
    assert cert is not None and cert.valid
    # the equilibrium is not unique; the closed-form choice must certify too
    assert certificate_residual(net, (1.0, 0.3, 0.7)) < 1e-12
    c = np.array(cert.c)
    assert c[0] * c[2] / c[1] == pytest.approx(0.7 / 0.3, rel=1e-12)


def test_single_species_certificate():
    cert = solve_detailed_balance(birth_death(3.5))
    assert cert.c == pytest.approx((3.5,), rel=1e-12)


def test_irreversible_has_no_certificate():
    net = ReactionNetwork.from_mappings(("A", "B"), [({"A": 1}, {"B": 1}, 1.0)])
    assert solve_detailed_balance(net) is None


def test_reversible_but_unbalanced():
    # a three-cycle whose rate product is not 1 violates Kolmogorov's criterion
    net = ReactionNetwork.from_mappings(
        ("A", "B", "C"),
        [({"A": 1}, {"B": 1}, 2.0), ({"B": 1}, {"A": 1}, 1.0),
         ({"B": 1}, {"C": 1}, 2.0), ({"C": 1}, {"B": 1}, 1.0),
         ({"C": 1}, {"A": 1}, 2.0), ({"A": 1}, {"C": 1}, 1.0)],
    )
    assert solve_detailed_balance(net) is None


def test_solve_is_deterministic():
    net = synth_full(FiniteDistribution({(0, 1): 0.2, (1, 1): 0.3, (2, 0): 0.5})).net
    assert solve_detailed_balance(net) == solve_detailed_balance(net)


def test_reachability_examples():
    q = FiniteDistribution({(0,): 0.3, (1,): 0.7})
    res = synth_full(q)
    assert reachability_class(res.net, res.init) == {(0, 1, 0), (1, 0, 1)}
    ray = ReactionNetwork.from_mappings(("A",), [({}, {"A": 1}, 1.0)])
    with pytest.raises(CapExceededError):
        reachability_class(ray, (0,), cap=50)
    assert reachability_class(ReactionNetwork(("A",), (), 1), (4,)) == {(4,)}
    with pytest.raises(ValidationError):
        reachability_class(ray, (0,), cap=0)


def test_db_stationary_full_example():
    q = FiniteDistribution({(0,): 0.3, (1,): 0.7})
    res = synth_full(q)
    cert = solve_detailed_balance(res.net)
    table = db_stationary(res.net, cert, res.init)
    assert table.dist.pmf((0, 1, 0)) == pytest.approx(0.3, abs=1e-15)
    assert table.dist.pmf((1, 0, 1)) == pytest.approx(0.7, abs=1e-15)
    # with the closed-form equilibrium the normalization is exactly sum q = 1
    from crndist.analysis import DetailedBalanceCertificate

    closed = DetailedBalanceCertificate((1.0, 0.3, 0.7), 0.0)
    assert db_stationary(res.net, closed, res.init).normalization == pytest.approx(1.0, rel=1e-12)


def test_db_stationary_truncated_poisson():
    net = birth_death(3.0)
    cert = solve_detailed_balance(net)
    table = db_stationary(net, cert, (0,), cap=12, allow_truncation=True)
    w = {(v,): Fraction(3) ** v / math.factorial(v) for v in range(12)}
    z = sum(w.values())
    for x, p in w.items():
        assert table.dist.pmf(x) == pytest.approx(float(p / z), rel=1e-12)
    assert table.diagnostics["truncated"]
    with pytest.raises(CapExceededError):
        db_stationary(net, cert, (0,), cap=12)


def test_db_stationary_single_state():
    net = ReactionNetwork.from_mappings(("A",), [])
    cert = solve_detailed_balance(net)
    table = db_stationary(net, cert, (3,))
    assert table.dist.mass == {(3,): 1.0}
    assert table.normalization == pytest.approx(1.0 / 6.0)


def _check_pairwise_balance(net, table):
    for x, p in table.dist.mass.items():
        for r, rxn in enumerate(net.reactions):
            a = propensity(net, r, x)
            if a == 0:
                continue
            y = tuple(v + c for v, c in zip(x, rxn.change))
            rev = next(k for k, s in enumerate(net.reactions) if s.reactant == rxn.product and s.product == rxn.reactant)
            back = table.dist.pmf(y) * propensity(net, rev, y)
            assert p * a == pytest.approx(back, rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(finite_q(max_m=6))
def test_full_pairwise_balance(q):
    res = synth_full(q)
    table = db_stationary(res.net, solve_detailed_balance(res.net), res.init)
    _check_pairwise_balance(res.net, table)
    assert inf_norm_distance(marginalize(table.dist, res.visible), q) < 1e-12


@settings(max_examples=30, deadline=None)
@given(cluster_q(max_m=6))
def test_bimolecular_pairwise_balance(q):
    res = synth_bimolecular(q)
    table = db_stationary(res.net, solve_detailed_balance(res.net), res.init)
    _check_pairwise_balance(res.net, table)


@settings(max_examples=30, deadline=None)
@given(finite_q(max_m=6))
def test_kolmogorov_cycles(q):
    net = synth_full(q).net
    cert = solve_detailed_balance(net)
    logc = np.log(cert.c)
    m = len(q)
    rate = {}
    for r in net.reactions:
        i = r.reactant[q.dim:].index(1)
        j = r.product[q.dim:].index(1)
        rate[i, j] = r
    for cyc in itertools.permutations(range(m), min(m, 3)):
        if len(cyc) < 3:
            continue
        ratio = 0.0
        tele = 0.0
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            f, rv = rate[a, b], rate[b, a]
            ratio += math.log(f.rate / rv.rate)
            tele += float(np.dot(np.subtract(f.product, f.reactant), logc))
        assert math.expm1(ratio - tele) == pytest.approx(0.0, abs=1e-9)
        assert abs(ratio) < 1e-9


# -- truncated-generator oracle --------------------------------------------

def test_generator_rows_sum_to_zero_with_deletion():
    net = birth_death(2.0)
    states, Q, deleted, strides = truncated_generator(net, (5,))
    rowsum = np.asarray(Q.sum(axis=1)).ravel()
    assert np.allclose(rowsum, 0.0)
    assert deleted.tolist() == [0, 0, 0, 0, 0, 2.0]


def test_oracle_point_mass():
    pm = synth_point_mass((1,), 0.1)
    table = oracle_stationary(pm.net, (30,))
    exact = exact_point_mass_stationary((1,), 0.1)
    assert inf_norm_distance(table.dist, exact.dist) < 1e-8
    assert table.domain == "box"


def test_oracle_product_poisson():
    table = oracle_stationary(synth_prod_pois((1.0,)).net, (25,))
    for v in range(26):
        assert table.dist.pmf((v,)) == pytest.approx(math.exp(-1) / math.factorial(v), abs=1e-8)
    assert table.boundary_outflow < 1e-6


def test_oracle_reports_outflow():
    net = birth_death(1.0)
    table = oracle_stationary(net, (3,))
    # truncated Poisson(1) on {0..3}; births from 3 leave the box
    z = sum(1 / math.factorial(v) for v in range(4))
    assert table.boundary_outflow == pytest.approx((1 / 6) / z, rel=1e-10)
    assert table.diagnostics["boundary_outflow_relative"] > 0


def test_oracle_errors():
    with pytest.raises(ReducibleTruncationError) as info:
        oracle_stationary(ReactionNetwork(("A",), (), 1), (4,))
    assert info.value.n_closed == 5
    with pytest.raises(BoxTooLargeError):
        oracle_stationary(birth_death(1.0), (10**6,))
    with pytest.raises(ValidationError):
        oracle_stationary(birth_death(1.0), (3, 3))


def test_oracle_with_start_state_restricts_to_class():
    q = FiniteDistribution({(0,): 0.3, (2,): 0.7})
    res = synth_full(q)
    with pytest.raises(ReducibleTruncationError):
        oracle_stationary(res.net, (2, 1, 1))
    table = oracle_stationary(res.net, (2, 1, 1), res.init)
    assert table.dist.pmf((0, 1, 0)) == pytest.approx(0.3, abs=1e-12)


# -- exact point-mass law --------------------------------------------------

def test_point_mass_ratio():
    for eps in (0.5, 0.1, 0.01):
        t = exact_point_mass_stationary((1,), eps)
        assert t.dist.pmf((2,)) / t.dist.pmf((1,)) == pytest.approx(eps / 4, rel=1e-12)


def test_point_mass_at_zero():
    assert exact_point_mass_stationary((0,), 0.3).dist.mass == {(0,): 1.0}


def _rational_marginal(x, eps, d, n_terms=12):
    """Birth-death chain with birth 1 and death (2d/eps) n!/(n-x-1)! solved exactly."""
    k2 = Fraction(2 * d) / Fraction(eps)
    w = [Fraction(1)]
    for n in range(x, x + n_terms):
        death = k2 * math.perm(n + 1, x + 1)
        w.append(w[-1] / death)
    z = sum(w)
    return {x + k: float(v / z) for k, v in enumerate(w)}


@pytest.mark.parametrize("x", [(1,), (3,), (2, 0), (1, 2), (0, 4, 1)])
@pytest.mark.parametrize("eps", [0.5, 0.1])
def test_point_mass_against_rational_chain(x, eps):
    table = exact_point_mass_stationary(x, eps)
    d = len(x)
    margs = [_rational_marginal(v, Fraction(eps).limit_denominator(1000), d) if v else {0: 1.0} for v in x]
    for state in itertools.product(*(m.keys() for m in margs)):
        want = math.prod(m[s] for m, s in zip(margs, state))
        if want > 1e-13:
            assert table.dist.pmf(state) == pytest.approx(want, rel=1e-9)
        else:
            assert table.dist.pmf(state) < 1e-13
    assert 1 - table.dist.pmf(x) < eps


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=3), st.floats(0.001, 1.99))
def test_point_mass_guarantee(x, eps):
    table = exact_point_mass_stationary(x, eps)
    assert abs(math.fsum(table.dist.mass.values()) - 1) < 1e-9
    assert 1 - table.dist.pmf(tuple(x)) < eps


def test_point_mass_errors():
    for eps in (0.0, 2.0):
        with pytest.raises(ValidationError):
            exact_point_mass_stationary((1,), eps)
    with pytest.raises(ValidationError):
        exact_point_mass_stationary((1,), 0.1, tail_states=0)


# -- uniform bound ---------------------------------------------------------

def test_uniform_bound_example():
    b = unif_error_bound((1,), (1,), [(1.0, 20.0)])
    # D = 1/2! (1/1) + (1/20) * (1/1) * 3 / (4 - (1/20)^2), evaluated by hand
    D = 0.5 + (1 / 20) * 3 / (4 - (1 / 20) ** 2)
    assert b.D[0] == pytest.approx(D, rel=1e-14)
    assert D == pytest.approx(0.5375, abs=1e-4)
    assert b.norm[0] == pytest.approx(D / 20, rel=1e-14)
    assert b.norm[0] == pytest.approx(0.0269, abs=1e-4)
    exact = exact_point_mass_stationary((1,), 0.1)
    assert 1 - exact.dist.pmf((1,)) <= b.norm[0]


def test_uniform_bound_zero_coordinate():
    b = unif_error_bound((0, 1), (0, 2), [(1.0, 10.0), (1.0, 10.0)])
    assert b.pointwise[0] == 0.0 and b.norm[0] == 0.0


def test_uniform_bound_monotone_in_k2():
    vals = [unif_error_bound((1,), (3,), [(1.0, k2)]).norm[0] for k2 in (10.0, 20.0, 40.0)]
    assert vals[0] > vals[1] > vals[2]


def test_uniform_bound_general_r():
    # r = 4, b = 4: D = (1/5!)(1/4 + 1/6) + rho((1/16) 6/((5!)^2 - rho^2) + (1/(5! 6!)) (1 - rho^2)/(1 - rho))
    k1, k2 = 2.0, 3.0
    rho = k1 / k2
    D = (1 / 120) * (1 / 4 + 1 / 6) + rho * ((1 / 16) * 6 / (120**2 - rho**2) + (1 / (120 * 720)) * (1 - rho**2) / (1 - rho))
    b = unif_error_bound((1,), (4,), [(k1, k2)])
    assert b.D[0] == pytest.approx(D, rel=1e-13)
    assert b.norm[0] == pytest.approx(rho * 4 * D, rel=1e-13)
    # rho == 1 makes the geometric factor r - 2
    D1 = (1 / 120) * (1 / 4 + 1 / 6) + ((1 / 16) * 6 / (120**2 - 1) + 2 / (120 * 720))
    assert unif_error_bound((1,), (4,), [(1.0, 1.0)]).D[0] == pytest.approx(D1, rel=1e-13)


def test_uniform_bound_precondition():
    with pytest.raises(ValidationError):
        unif_error_bound((1,), (1,), [(10.0, 1.0)])
    with pytest.raises(ValidationError):
        unif_error_bound((1,), (1,))


def test_uniform_bound_from_delta():
    assert unif_error_bound((1,), (2,), delta=0.1) == unif_error_bound((1,), (2,), [(1.0, 20.0)])


# -- mixing bounds ---------------------------------------------------------

def _decay_closed_form(k1, k2):
    s = (k1 - k2) / k2
    if s == 0:
        return math.pi**2 / 6 / k2
    return (digamma(1 + s) + np.euler_gamma) / s / k2


def test_decay_zeta_example():
    b = bound_mixing_decay(1.0, 1.0, 0.1)
    assert b.bound == pytest.approx(10 * math.pi**2 / 6, abs=1e-10)
    assert round(b.bound, 4) == 16.4493


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 50), st.floats(0.05, 50), st.floats(0.01, 1.0))
def test_decay_matches_digamma(k1, k2, eps):
    b = bound_mixing_decay(k1, k2, eps)
    assert b.bound * eps == pytest.approx(_decay_closed_form(k1, k2), rel=1e-11, abs=1e-12)


def test_decay_scaling_and_limit():
    assert bound_mixing_decay(2.0, 3.0, 0.2).bound == pytest.approx(bound_mixing_decay(2.0, 3.0, 0.4).bound * 2)
    big = bound_mixing_decay(2.0, 1e9, 0.5).bound
    assert big == pytest.approx(1 / (0.5 * 2.0), rel=1e-6)
    for eps in (0.0, 1.5):
        with pytest.raises(ValidationError):
            bound_mixing_decay(1.0, 1.0, eps)


def test_birth_threshold_error():
    with pytest.raises(ThresholdError) as info:
        bound_mixing_birth(1, 1.0, 20.0, 0.5)
    assert info.value.threshold == pytest.approx(1 - math.exp(-1), rel=1e-12)
    assert "0.632" in str(info.value)


def test_birth_valid_example():
    b = bound_mixing_birth(1, 0.1, 20.0, 0.2)
    e = math.exp(-0.1)
    want = max(e / (20 * (e - 1 + 0.2)), 1 / (0.1 * 0.2))
    assert b.bound == pytest.approx(want, rel=1e-12)
    assert b.bound == pytest.approx(50.0)
    assert b.level == pytest.approx(0.4)
    assert b.threshold == pytest.approx(1 - math.exp(-0.1))
    doc = b.to_dict()
    assert doc["kind"] == "birth" and doc["valid"] is True


def test_birth_second_branch():
    assert bound_mixing_birth(3, 1.0, 20.0, 0.1).bound == pytest.approx(30.0)


def test_birth_small_k2_case():
    # k2 (x+1)! <= k1 switches to the 2 k1 / k2 threshold
    with pytest.raises(ThresholdError) as info:
        bound_mixing_birth(1, 4.0, 1.0, 0.9)
    assert info.value.threshold == pytest.approx(8.0)
