import numpy as np
import pytest
from scipy import stats

from rbnlab.network import (BooleanNetwork, InputSpaceTooLarge, NetworkSpec, NodeRole, Wiring,
                            build_random_network, dumps, evaluate, evaluate_patterns,
                            find_attractor, input_space, loads, network_from_key,
                            realized_function, step, trajectory, truth_table)

from oracles import binomial_pmf, py_evaluate, py_fingerprint, py_step

XOR3 = (0, 1, 1, 0, 1, 0, 0, 1)


def xor_node():
    """One output node reading the three inputs through a parity table."""
    return BooleanNetwork(1, 3, 1, [(0, 3), (1, 3), (2, 3)], (XOR3,))


def constant(bit, n_inputs=3):
    return BooleanNetwork(1, n_inputs, 1, np.zeros((0, 2), int), ((bit,),))


# -- construction ---------------------------------------------------------------

def test_eighteen_node_example_has_45_links_none_into_inputs():
    net = build_random_network(NetworkSpec(18, 2.5, 3, 1), np.random.default_rng(0))
    assert net.n_links == 45
    assert not np.any(net.links[:, 1] < 3)
    assert net.n_total == 21


def test_zero_connectivity_node_has_one_entry_table():
    net = build_random_network(NetworkSpec(1, 0.0, 1, 1), np.random.default_rng(5))
    assert net.n_links == 0
    assert net.luts[0].shape == (1,)
    out = truth_table(net)
    assert np.all(out == out[0])


@pytest.mark.parametrize("n, k", [(20, 2.0), (7, 1.5), (10, 0.25), (33, 3.3)])
def test_exact_wiring_link_count_and_mean_in_degree(n, k):
    net = build_random_network(NetworkSpec(n, k, 3, 1), np.random.default_rng(1))
    expected = int(np.floor(n * k + 0.5))
    assert net.n_links == expected
    assert net.in_degrees.mean() == expected / n


def test_rejects_bad_specs():
    with pytest.raises(ValueError):
        NetworkSpec(0, 2.0)
    with pytest.raises(ValueError):
        NetworkSpec(3, 2.0, 3, 4)
    with pytest.raises(ValueError):
        NetworkSpec(3, -1.0)


def test_binomial_in_degree_matches_analytic_distribution():
    # each of L candidate links survives with p = 1/2 and lands on one of N nodes
    n, k, draws = 20, 2.0, 10_000
    spec = NetworkSpec(n, k, 3, 1, Wiring.BINOMIAL)
    rng = np.random.default_rng(7)
    degs = np.array([build_random_network(spec, rng).in_degrees[0] for _ in range(draws)])
    n_links = spec.n_links
    p = 0.5 / n
    top = 6
    observed = [np.sum(degs == d) for d in range(top)] + [np.sum(degs >= top)]
    pmf = [binomial_pmf(n_links, p, d) for d in range(top)]
    expected = np.array(pmf + [1 - sum(pmf)]) * draws
    assert stats.chisquare(observed, expected).pvalue > 1e-3


def test_binomial_wiring_halves_link_count_on_average():
    spec = NetworkSpec(20, 2.0, 3, 1, Wiring.BINOMIAL)
    rng = np.random.default_rng(3)
    counts = [build_random_network(spec, rng).n_links for _ in range(2000)]
    # Binomial(40, 1/2): mean 20, sd sqrt(10); mean of 2000 has sd ~0.07
    assert abs(np.mean(counts) - 20) < 0.35


def test_same_key_same_network():
    spec = NetworkSpec(12, 2.5, 3, 1)
    a = network_from_key(spec, 12345)
    b = network_from_key(spec, 12345)
    assert a == b
    assert network_from_key(spec, 12346) != a


def test_same_seed_same_network():
    spec = NetworkSpec(12, 2.5, 3, 1, feedforward=True)
    a = build_random_network(spec, np.random.default_rng(9))
    b = build_random_network(spec, np.random.default_rng(9))
    assert a == b


def test_feedforward_construction_respects_order():
    spec = NetworkSpec(30, 3.0, 4, 2, feedforward=True)
    net = build_random_network(spec, np.random.default_rng(2))
    assert np.all(net.order[net.links[:, 0]] < net.order[net.links[:, 1]])
    assert net.n_links == 90


def test_roles():
    net = build_random_network(NetworkSpec(5, 1.0, 2, 2), np.random.default_rng(0))
    assert [net.role(j) for j in range(7)] == [NodeRole.INPUT] * 2 + [NodeRole.COMPUTE] * 3 \
        + [NodeRole.OUTPUT] * 2


def test_network_validation():
    with pytest.raises(ValueError, match="destination"):
        BooleanNetwork(1, 1, 1, [(1, 0)], ((0,),))
    with pytest.raises(ValueError, match="LUT length"):
        BooleanNetwork(1, 1, 1, [(0, 1)], ((0,),))
    with pytest.raises(ValueError, match="order"):
        BooleanNetwork(2, 1, 1, [(2, 1)], ((0, 1), (0,)), order=[0, 1, 2])


# -- dynamics -------------------------------------------------------------------

def test_constant_zero_table_gives_zero():
    net = BooleanNetwork(1, 1, 1, [(0, 1), (1, 1)], ((0, 0, 0, 0),))
    for s in ([0, 0], [1, 1], [0, 1], [1, 0]):
        assert step(net, s)[1] == 0


def test_identity_self_loop_holds_one():
    net = BooleanNetwork(1, 1, 1, [(1, 1)], ((0, 1),))
    traj = trajectory(net, [0, 1], 10)
    assert np.all(traj[:, 1] == 1)


def test_two_not_cycle_returns_after_two_steps():
    # nodes 1 and 2 negate each other
    net = BooleanNetwork(2, 1, 1, [(2, 1), (1, 2)], ((1, 0), (1, 0)))
    assert list(trajectory(net, [0, 0, 1], 2)[2][1:]) == [0, 1]
    assert list(trajectory(net, [0, 0, 0], 2)[2][1:]) == [0, 0]
    assert find_attractor(net, [0, 0, 0]) == (0, 2)


def test_two_not_cycle_matches_state_graph():
    net = BooleanNetwork(2, 1, 1, [(2, 1), (1, 2)], ((1, 0), (1, 0)))
    graph = {(a, b): tuple(step(net, [0, a, b])[1:]) for a in (0, 1) for b in (0, 1)}
    assert graph == {(0, 0): (1, 1), (1, 1): (0, 0), (0, 1): (0, 1), (1, 0): (1, 0)}


def test_step_matches_oracle():
    rng = np.random.default_rng(11)
    for _ in range(20):
        net = build_random_network(NetworkSpec(8, 2.0, 2, 1), rng)
        state = rng.integers(0, 2, net.n_total)
        expected = py_step([tuple(map(int, l)) for l in net.links],
                           [list(t) for t in net.luts], 2, list(state))
        assert list(step(net, state)) == expected


def test_constant_one_output():
    net = constant(1)
    assert np.all(truth_table(net) == 1)


def test_xor_node_realises_parity():
    net = xor_node()
    assert evaluate(net, [1, 0, 1])[0] == 0
    assert evaluate(net, [1, 1, 1])[0] == 1
    assert list(truth_table(net).ravel()) == list(XOR3)


def test_exactly_half_activity_counts_as_one():
    # output node toggles every step; N = 2 so the window holds one 1 and one 0
    net = BooleanNetwork(2, 1, 1, [(2, 2)], ((0,), (1, 0)))
    assert evaluate(net, [0])[0] == 1


def test_evaluate_matches_oracle_on_random_networks():
    rng = np.random.default_rng(4)
    for _ in range(30):
        spec = NetworkSpec(int(rng.integers(2, 9)), float(rng.uniform(0.5, 3)), 3,
                           int(rng.integers(1, 3)))
        net = build_random_network(spec, rng)
        links = [tuple(map(int, l)) for l in net.links]
        luts = [list(t) for t in net.luts]
        for bits in input_space(3):
            assert list(evaluate(net, bits)) == py_evaluate(
                links, luts, 3, spec.n_nodes, spec.n_outputs, list(bits))


def test_random_initial_trials_pool_activity():
    net = xor_node()
    out = evaluate_patterns(net, input_space(3), trials=4, rng=np.random.default_rng(0))
    assert list(out.ravel()) == list(XOR3)


def test_explicit_initial_state_is_used():
    # node 1 holds its value through a self-loop and drives the output
    net = BooleanNetwork(2, 1, 1, [(1, 1), (1, 2)], ((0, 1), (0, 1)))
    assert evaluate(net, [0], init=[1, 0])[0] == 1
    assert evaluate(net, [0])[0] == 0


# -- fingerprints -----------------------------------------------------------------

def test_constant_zero_fingerprint():
    assert realized_function(constant(0)) == 0


def test_xor_fingerprint_is_105():
    assert realized_function(xor_node()) == 0b01101001 == 105


def test_fingerprint_is_extensional():
    a = xor_node()
    # same parity through a chain: node 3 = in0 xor in1, node 4 = node3 xor in2
    b = BooleanNetwork(2, 3, 1, [(0, 3), (1, 3), (3, 4), (2, 4)],
                       ((0, 1, 1, 0), (0, 1, 1, 0)))
    assert realized_function(a) == realized_function(b)


def test_fingerprint_matches_oracle():
    rng = np.random.default_rng(8)
    for _ in range(20):
        net = build_random_network(NetworkSpec(6, 2.0, 3, 2), rng)
        expected = py_fingerprint([tuple(map(int, l)) for l in net.links],
                                  [list(t) for t in net.luts], 3, 6, 2)
        assert realized_function(net) == expected


def test_input_space_too_large():
    net = constant(0, n_inputs=21)
    with pytest.raises(InputSpaceTooLarge):
        realized_function(net)
    with pytest.raises(InputSpaceTooLarge):
        truth_table(constant(0, n_inputs=5), cap=16)


# -- serialisation -------------------------------------------------------------------

@pytest.mark.parametrize("ff", [False, True])
def test_text_round_trip(ff):
    net = build_random_network(NetworkSpec(15, 3.0, 3, 2, feedforward=ff),
                               np.random.default_rng(6))
    text = dumps(net)
    assert text.splitlines()[0] == f"15 3 2 {'feedforward' if ff else 'recurrent'}"
    back = loads(text)
    assert back == net
    assert dumps(back) == text


def test_text_round_trip_wide_table():
    net = BooleanNetwork(1, 8, 1, [(j, 8) for j in range(8)],
                         (np.random.default_rng(0).integers(0, 2, 256),))
    assert loads(dumps(net)) == net


def test_loads_rejects_garbage():
    with pytest.raises(ValueError):
        loads("1 1\n")
    with pytest.raises(ValueError):
        loads("1 1 1 recurrent\n0 1\n")
