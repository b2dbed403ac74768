from fractions import Fraction

import pytest

from rbnlab.evolution import RunRecord, Termination
from rbnlab.metrics import (MEASURES, MeasurePoint, aggregate, cumulative, curve_from_csv,
                            curve_to_csv, first_reaching, is_perfect, perfection_tolerance,
                            sample_sizes)

from oracles import trapezoid


def record(f, g, s=0.5):
    return RunRecord(seed=0, s=s, f_final=f, g_final=g, generations=1,
                     terminated_by=Termination.GMAX, elitism=True,
                     best_f=[f], mean_f=[f], std_f=[0.0])


def point(s, y, measure="beta"):
    vals = {m: 0.0 for m in MEASURES}
    vals[measure] = y
    return MeasurePoint(s=s, r=1, **vals)


def test_four_run_example():
    runs = [record(1, 1), record(1, 0.5), record(0.5, 0.5), record(1, 1)]
    p = aggregate(runs)
    assert p.alpha == 0.75
    assert p.alpha_prime == 0.5
    assert Fraction(p.delta).limit_denominator(100) == Fraction(2, 3)
    assert p.delta == 2 / 3
    assert p.beta == 0.875
    assert p.beta_prime == 0.75
    assert p.r == 4 and p.s == 0.5


def test_all_perfect_runs():
    p = aggregate([record(1, 1)] * 5)
    assert all(p.get(m) == 1 for m in MEASURES)


def test_full_space_training_gives_delta_one():
    # on s = 1 the sample is the whole space, so f and g coincide
    runs = [record(x, x, s=1.0) for x in (1.0, 0.75, 1.0, 0.5)]
    assert aggregate(runs).delta == 1.0


def test_delta_undefined_without_perfect_training():
    p = aggregate([record(0.5, 0.5), record(0.75, 1.0)])
    assert p.delta is None
    assert p.alpha == 0 and p.alpha_prime == 0.5


def test_tolerance_absorbs_float_noise():
    assert perfection_tolerance(8) == 1 / 16
    assert is_perfect(1 - 1e-12, 8)
    assert not is_perfect(1 - 1 / 8, 8)
    p = aggregate([record(1 - 1e-12, 1 - 1e-12)], m=8, space=8)
    assert p.alpha == 1 and p.delta == 1


def test_aggregate_errors():
    with pytest.raises(ValueError):
        aggregate([])
    with pytest.raises(ValueError):
        aggregate([record(1, 1, s=0.5), record(1, 1, s=0.25)])
    with pytest.raises(ValueError):
        point(0.5, 1.0).get("gamma")


def test_constant_curve_area():
    curve = [point(s / 10, 1.0) for s in range(1, 11)]
    assert cumulative(curve, "beta").value == pytest.approx(0.9, abs=1e-12)


def test_linear_curve_is_exact():
    assert cumulative([point(0.0, 0.0), point(1.0, 1.0)], "beta").value == 0.5
    xs = [0.1, 0.3, 0.35, 0.8, 1.0]
    area = cumulative([point(x, 2 * x + 1) for x in xs], "beta").value
    assert area == pytest.approx((1.0 + 1.0) - (0.01 + 0.1), abs=1e-12)


def test_square_on_three_points_overestimates():
    curve = [point(s, s * s) for s in (0.0, 0.5, 1.0)]
    assert cumulative(curve, "beta").value == 0.375


def test_area_matches_oracle_and_ignores_order():
    xs = [0.9, 0.1, 0.5, 0.3]
    ys = [0.2, 0.7, 0.1, 0.4]
    curve = [point(x, y) for x, y in zip(xs, ys)]
    pairs = sorted(zip(xs, ys))
    expected = trapezoid([p[0] for p in pairs], [p[1] for p in pairs])
    assert cumulative(curve, "beta").value == pytest.approx(expected, abs=1e-15)


def test_undefined_delta_points_are_joined_over():
    curve = [point(0.0, 0.0, "delta"), point(0.5, None, "delta"), point(1.0, 1.0, "delta")]
    area = cumulative(curve, "delta")
    assert area.value == 0.5 and area.dropped == 1


def test_cumulative_errors():
    with pytest.raises(ValueError):
        cumulative([point(0.5, 1.0)], "beta")
    with pytest.raises(ValueError):
        cumulative([point(0.5, 1.0), point(0.5, 0.0)], "beta")
    with pytest.raises(ValueError):
        cumulative([point(0.5, None, "delta"), point(1.0, 1.0, "delta")], "delta")


def test_first_reaching():
    curve = [point(0.25, 0.2, "delta"), point(0.5, None, "delta"), point(0.75, 0.95, "delta"),
             point(1.0, 1.0, "delta")]
    assert first_reaching(curve, "delta", 0.9) == 0.75
    assert first_reaching(curve, "delta", 1.5) is None


def test_sample_sizes():
    assert sample_sizes(8) == list(range(1, 9))
    # 1 + 4 * 3.875 = 16.5 rounds half to even
    assert sample_sizes(32, 9) == [1, 5, 9, 13, 16, 20, 24, 28, 32]
    grid = sample_sizes(1024)
    assert grid[0] == 1 and grid[-1] == 1024 and len(grid) == 32
    with pytest.raises(ValueError):
        sample_sizes(0)


def test_curve_csv_round_trip():
    curve = [aggregate([record(1, 1, 0.25), record(0.5, 0.75, 0.25)]),
             aggregate([record(0.5, 0.5, 1.0)])]
    text = curve_to_csv(curve)
    assert text.splitlines()[0] == "s,r,alpha,alpha_prime,delta,beta,beta_prime"
    assert text.splitlines()[2].split(",")[4] == ""
    assert curve_from_csv(text) == curve
