import json

import numpy as np
import pytest

from rbnlab import entropy as ent
from rbnlab.entropy import (FunctionHistogram, PowerLawFit, argmax_lowest, bootstrap_se,
                            ensemble_keys, entropy, fingerprints, fit_power_law,
                            landscape_to_csv, max_entropy_k, refinement_grid, sample_ensemble,
                            entropy_cell)
from rbnlab.network import NetworkSpec, Wiring, network_from_key, realized_function

from oracles import exact_function_distribution, shannon_bits

PAPER_A, PAPER_B, PAPER_C = 14.06, -0.83, 2.32
SCALING_N = (5, 10, 20, 50, 100, 200, 500, 1000, 2000)


def hist(counts):
    return FunctionHistogram(dict(enumerate(counts)))


def test_uniform_over_256_is_eight_bits():
    assert entropy(hist([1] * 256)) == 8.0


def test_single_function_is_zero_bits():
    assert entropy(hist([17])) == 0.0


def test_two_equal_counts_is_one_bit():
    assert entropy(hist([1, 1])) == 1.0


def test_entropy_matches_oracle_formula():
    counts = [5, 1, 9, 2, 2]
    assert entropy(hist(counts)) == pytest.approx(
        shannon_bits([c / sum(counts) for c in counts]), abs=1e-12)


def test_empty_histogram_rejected():
    with pytest.raises(ValueError):
        entropy(FunctionHistogram())


def test_histogram_update_accumulates():
    h = FunctionHistogram()
    h.update([3, 3, 7])
    h.update([7, 7])
    assert h.counts == {3: 2, 7: 3}
    assert h.samples == 5


def test_bootstrap_se_is_zero_for_single_function_and_positive_otherwise():
    assert bootstrap_se(hist([100]), rng=np.random.default_rng(0)) == 0.0
    assert bootstrap_se(hist([50, 50]), rng=np.random.default_rng(0)) > 0.0


def test_link_free_node_realises_only_constants():
    h = sample_ensemble(1, 0.0, 3, 1000, seed=0)
    assert set(h.counts) <= {0, 255}
    assert h.samples == 1000
    # Binomial(1000, 1/2) has sd ~15.8
    assert abs(h.counts.get(0, 0) - 500) < 4 * 15.8


def test_one_sample_has_zero_entropy():
    h = sample_ensemble(20, 2.0, 3, 1, seed=1)
    assert h.samples == 1 and entropy(h) == 0.0


@pytest.mark.parametrize("wiring, outputs", [(Wiring.EXACT, 1), (Wiring.BINOMIAL, 1),
                                             (Wiring.EXACT, 2)])
def test_fingerprints_equal_materialised_networks(wiring, outputs):
    spec = NetworkSpec(12, 2.5, 3, outputs, wiring)
    keys = ensemble_keys(spec, 4, 0, 200)
    expected = [realized_function(network_from_key(spec, int(k))) for k in keys]
    assert fingerprints(spec, keys) == expected


def test_keys_do_not_depend_on_chunking():
    spec = NetworkSpec(10, 2.0, 3, 1)
    whole = ensemble_keys(spec, 9, 0, 100)
    parts = np.concatenate([ensemble_keys(spec, 9, 0, 37), ensemble_keys(spec, 9, 37, 63)])
    assert np.array_equal(whole, parts)


def test_sampling_is_schedule_independent(monkeypatch):
    a = sample_ensemble(15, 3.0, 3, 3000, seed=2)
    monkeypatch.setattr(ent, "_CHUNK", 123)
    b = sample_ensemble(15, 3.0, 3, 3000, seed=2)
    assert a.counts == b.counts


def test_sampled_entropy_approaches_exact_enumeration():
    exact = shannon_bits(exact_function_distribution().values())
    for samples in (2_000, 20_000):
        h = sample_ensemble(2, 1.0, 1, samples, seed=samples)
        se = bootstrap_se(h, rng=np.random.default_rng(0))
        assert abs(entropy(h) - exact) < 3 * se + 1e-9


def test_landscape_csv_columns():
    cell = entropy_cell(5, 1.0, 3, 50, seed=0)
    lines = landscape_to_csv([cell]).splitlines()
    assert lines[0] == "N,K,I,samples,entropy_bits"
    assert lines[1].startswith("5,1.0,3,50,")


def test_argmax_ties_go_to_lower_k():
    assert argmax_lowest([3.0, 1.0, 2.0], [5.0, 5.0, 4.0]) == 1
    assert argmax_lowest([1.0, 2.0], [1.0, 2.0]) == 1


def test_refinement_grid():
    assert refinement_grid(2.5, 0.1, 0.5) == [2.0, 2.1, 2.2, 2.3, 2.4, 2.5, 2.6, 2.7, 2.8,
                                              2.9, 3.0]
    assert refinement_grid(0.2, 0.1, 0.5) == [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]


def test_max_entropy_search_returns_best_cell():
    res = max_entropy_k(8, [0.5, 1.0, 1.5], n_inputs=3, samples=300, seed=3, refine_step=0.25)
    best = max(c.entropy_bits for c in res.cells)
    assert res.s_star == best
    assert res.k_star in [c.k for c in res.cells]
    assert len(res.cells) > 3


# -- power law ---------------------------------------------------------------------

def synthetic(a=PAPER_A, b=PAPER_B, c=PAPER_C, ns=SCALING_N):
    return [(n, a * n ** b + c) for n in ns]


def test_noise_free_recovery_within_one_percent():
    fit = fit_power_law(synthetic())
    assert fit.a == pytest.approx(PAPER_A, rel=0.01)
    assert fit.b == pytest.approx(PAPER_B, rel=0.01)
    assert fit.c == pytest.approx(PAPER_C, rel=0.01)
    assert not fit.degenerate and fit.n_points == len(SCALING_N)


def test_paper_coefficients_predict_n20():
    fit = PowerLawFit(PAPER_A, PAPER_B, PAPER_C, 0.0, 0)
    assert float(fit.predict(20)) == pytest.approx(3.49, abs=0.01)


def test_constant_data_is_degenerate():
    fit = fit_power_law([(n, 2.5) for n in SCALING_N])
    assert fit.degenerate
    assert fit.a == pytest.approx(0.0, abs=1e-12)
    assert fit.c == 2.5


def test_fit_never_worse_than_grid():
    rng = np.random.default_rng(5)
    pts = [(n, k + rng.normal(0, 0.1)) for n, k in synthetic()]
    fit = fit_power_law(pts)
    n, k = np.array(pts).T
    floor, span = k.min(), k.max() - k.min()
    _, grid_err = ent._grid_candidate(n, k, floor - span * np.geomspace(1e-4, 10.0, 400))
    assert fit.residual <= grid_err + 1e-12


def test_fit_input_errors():
    with pytest.raises(ValueError):
        fit_power_law([(20, 3.0)] * 5)
    with pytest.raises(ValueError):
        fit_power_law(synthetic(ns=(5, 10, 20)))


def test_fit_json_round_trip():
    fit = fit_power_law(synthetic())
    d = json.loads(fit.to_json())
    assert {"a", "b", "c", "residual", "n_points"} <= set(d)
    assert PowerLawFit.from_json(fit.to_json()) == fit
