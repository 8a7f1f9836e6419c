import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellmrf.bell import SOURCE_FIRED, BellConfig, grid_model
from bellmrf.mrf import (
    ANGLE,
    BOOL,
    PI,
    SPIN,
    AlphaPolynomial,
    AlphaWeight,
    Angle,
    Factor,
    GridSpec,
    NormalizationError,
    OutcomeClass,
    UnassignedVariableError,
    Variable,
    event_probability_grid,
    indicator,
    merge_classes,
    normalize_classes,
    partition_function_bruteforce,
    partition_function_grid,
    product_relative_probability,
    reduce_leading_order,
    total_mass,
)


def const(names, value):
    return Factor(tuple(names), lambda *v, grid=None: value)


# -- Angle --------------------------------------------------------------------


@given(st.floats(-50, 50, allow_nan=False))
def test_angle_canonical_range(x):
    a = Angle(x)
    assert 0.0 <= a.value < PI
    assert math.isclose(math.cos(a.value) ** 2, math.cos(x) ** 2, abs_tol=1e-9)


def test_angle_arithmetic_wraps():
    assert Angle(3.0) + 0.5 == Angle(3.5 - PI)
    assert (Angle(0.1) - 0.2).value == pytest.approx(PI - 0.1)
    assert Angle(0.3).orthogonal().value == pytest.approx(0.3 + PI / 2)


def test_angle_bin_wraparound():
    n = 8
    just_below_pi = PI - 0.4 * (PI / n)
    assert Angle(just_below_pi).bin(n) == 0
    assert Angle(just_below_pi).equal_on_grid(0.0, n)
    assert Angle(just_below_pi).snap_distance(n) == pytest.approx(0.4 * PI / n)


# -- alpha bookkeeping ---------------------------------------------------------


def test_alpha_weight_algebra():
    w = AlphaWeight(2.0, 1) * AlphaWeight(3.0, 2)
    assert (w.coeff, w.power) == (6.0, 3)
    assert (AlphaWeight(1.0, 3) + AlphaWeight(0.5, 3)).coeff == 1.5
    with pytest.raises(ValueError):
        AlphaWeight(1.0, 1) + AlphaWeight(1.0, 2)
    with pytest.raises(ValueError):
        AlphaWeight(-1.0, 0)


def test_alpha_polynomial_merges_and_sorts():
    p = AlphaPolynomial([AlphaWeight(1, 4), AlphaWeight(2, 3), AlphaWeight(3, 3)])
    assert [t.power for t in p.terms] == [3, 4]
    assert p.coeff(3) == 5
    assert p.leading.power == 3
    assert p.evaluate(0.1) == pytest.approx(5e-3 + 1e-4)
    assert AlphaPolynomial([AlphaWeight(0, 1), AlphaWeight(2, 2)]).min_power == 2


# -- relative probability -----------------------------------------------------


def test_product_examples():
    a = {"x": 0}
    assert product_relative_probability([const(["x"], 1.0)] * 3, a) == 1.0
    assert product_relative_probability([const(["x"], 2.0), const(["x"], 0.0)], a) == 0.0
    fs = [const(["x"], 2.0), const(["x"], 3.0), const(["x"], 0.5)]
    assert product_relative_probability(fs, a) == 3.0
    assert product_relative_probability(fs[::-1], a) == 3.0


def test_product_unassigned_names_variable():
    with pytest.raises(UnassignedVariableError, match="y"):
        product_relative_probability([const(["x", "y"], 1.0)], {"x": 1})


def test_partition_trivial_examples():
    g = GridSpec(16)
    b = Variable("b", BOOL)
    assert partition_function_grid([const(["b"], 1.0)], [b], g) == 2.0
    for n in (4, 9, 180):
        t = Variable("t", ANGLE)
        z = partition_function_grid([const(["t"], 1.0)], [t], GridSpec(n))
        assert z == pytest.approx(PI, rel=1e-14)


def test_empty_admissible_set_and_normalization_error():
    g = GridSpec(8)
    b = Variable("b", BOOL)
    f = [const(["b"], 0.0)]
    assert partition_function_grid(f, [b], g) == 0.0
    with pytest.raises(NormalizationError):
        event_probability_grid(f, [b], g, None, {"b": 1})


def test_event_is_condition_and_complement():
    g = GridSpec(6)
    vs = [Variable("b", BOOL), Variable("s", SPIN), Variable("t", ANGLE, gate="b")]
    fs = [Factor(("b", "t"), lambda b, t, grid=None: 1.0 + b + (0 if t is None else math.cos(float(t)) ** 2))]
    assert event_probability_grid(fs, vs, g, {"b": 1}, {"b": 1}) == pytest.approx(1.0)
    assert event_probability_grid(fs, vs, g, {"b": 1}, {"b": 0}) == 0.0


def test_union_events_use_inclusion_exclusion():
    g = GridSpec(4)
    vs = [Variable("x", BOOL), Variable("y", BOOL)]
    fs = [Factor(("x", "y"), lambda x, y, grid=None: 1.0 + x + 2 * y)]
    # weights: (0,0)=1 (1,0)=2 (0,1)=3 (1,1)=4, total 10
    p = event_probability_grid(fs, vs, g, None, [{"x": 1}, {"y": 1}])
    assert p == pytest.approx(9 / 10)
    ind = indicator(("x", "y"), lambda x, y: x or y)
    assert event_probability_grid(fs, vs, g, None, ind) == pytest.approx(0.9)


def _toy_model(n):
    """A gated, delta-coupled model small enough for brute force."""
    g = GridSpec(n, 0.1)
    vs = [
        Variable("gs", BOOL),
        Variable("gd", BOOL),
        Variable("d", SPIN),
        Variable("ts", ANGLE),
        Variable("td", ANGLE, gate="gd"),
    ]
    tune = 2 * PI / n

    def pol(gs, ts, gd, td, grid=None):
        if gd == 1 and td is not None:
            return grid.delta(td, ts) * math.cos(float(ts) - tune) ** 2 + grid.alpha
        return grid.alpha * math.sin(float(ts) - tune) ** 2 * gs

    fs = [
        Factor(("gs", "ts", "gd", "td"), pol),
        Factor(("d", "gs"), lambda d, gs, grid=None: 1.0 + 0.5 * d * gs),
    ]
    return g, vs, fs


@pytest.mark.parametrize("n", [4, 5, 8])
def test_einsum_matches_bruteforce(n):
    g, vs, fs = _toy_model(n)
    brute = partition_function_bruteforce(fs, vs, g)
    assert partition_function_grid(fs, vs, g) == pytest.approx(brute, rel=1e-12)
    brute_c = partition_function_bruteforce(fs, vs, g, lambda a: a["gs"] == 1 and a["d"] == 1)
    assert partition_function_grid(fs, vs, g, {"gs": 1, "d": 1}) == pytest.approx(brute_c, rel=1e-12)


def test_bell_grid_matches_bruteforce_small_n():
    cfg = BellConfig(0.0, PI / 4, "mrf1", 0.05)
    g = GridSpec(4, 0.05)
    model = grid_model(cfg, g)
    brute = partition_function_bruteforce(
        model.factors, model.variables, g, lambda a: all(a[k] == v for k, v in SOURCE_FIRED.items())
    )
    assert model.partition_function() == pytest.approx(brute, rel=1e-12)


def test_mrf1_partition_at_fine_resolution():
    # leading order 4 alpha^3
    cfg = BellConfig(0.0, PI / 4, "mrf1", 1e-3)
    z = grid_model(cfg, GridSpec(720, 1e-3)).partition_function()
    assert z == pytest.approx(4e-9, rel=1e-2)


def test_mrf1_coincidence_at_fine_resolution():
    cfg = BellConfig(0.0, PI / 4, "mrf1", 1e-3)
    model = grid_model(cfg, GridSpec(720, 1e-3))
    assert model.probability("double_coincidence") == pytest.approx(0.25, abs=1e-3)


def test_measure_consistency_under_refinement():
    # tunings on every grid, so only the measure conventions change with n
    cfg = BellConfig(0.0, PI / 3, "mrf1", 1e-3)
    z = {n: grid_model(cfg, GridSpec(n, 1e-3)).partition_function() for n in (180, 360, 720)}
    for lo, hi in ((180, 360), (360, 720)):
        assert abs(z[hi] - z[lo]) / z[hi] < 1.0 / lo


# -- class route --------------------------------------------------------------


def _cls(label, coeff, power):
    return OutcomeClass(label, AlphaPolynomial.of(coeff, power))


def test_reduce_leading_order_examples():
    cs = [_cls("a", 3, 3), _cls("b", 2, 3), _cls("c", 1, 4)]
    kept = reduce_leading_order(cs)
    assert [c.label for c in kept] == ["a", "b"]
    assert reduce_leading_order(kept)[0].mass == kept[0].mass
    assert [c.label for c in reduce_leading_order(kept)] == ["a", "b"]
    assert reduce_leading_order([]) == []
    one = [_cls("x", 1, 2)]
    assert reduce_leading_order(one)[0].label == "x"


def test_reduce_truncates_mixed_masses():
    c = OutcomeClass("m", AlphaPolynomial([AlphaWeight(1, 3), AlphaWeight(7, 4)]))
    (r,) = reduce_leading_order([c])
    assert r.mass == AlphaPolynomial.of(1, 3)


def test_normalize_classes():
    cs = [_cls("hit", 1, 3), _cls("miss", 3, 3)]
    assert normalize_classes(cs, lambda s: True) == 1.0
    assert normalize_classes(cs, lambda s: s == "hit") == 0.25
    with pytest.raises(ValueError):
        normalize_classes([_cls("a", 1, 3), _cls("b", 1, 4)], lambda s: True)
    with pytest.raises(NormalizationError):
        normalize_classes([_cls("a", 0, 3)], lambda s: True)


def test_merge_and_total():
    cs = [_cls("x/L", 1, 3), _cls("x/R", 1, 3), _cls("y", 2, 3)]
    merged = merge_classes(cs, lambda s: s.split("/")[0])
    assert [(c.label, c.mass.coeff(3)) for c in merged] == [("x", 2), ("y", 2)]
    assert total_mass(cs).coeff(3) == 4


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=5), st.randoms())
def test_product_invariant_under_reordering(values, rnd):
    fs = [const(["x"], v) for v in values]
    shuffled = list(fs)
    rnd.shuffle(shuffled)
    a = product_relative_probability(fs, {"x": 0})
    b = product_relative_probability(shuffled, {"x": 0})
    assert a == pytest.approx(b, rel=1e-12, abs=0)


def test_negative_factor_table_rejected():
    g = GridSpec(4)
    with pytest.raises(ValueError):
        partition_function_grid([Factor(("b",), lambda b, grid=None: -1.0)], [Variable("b")], g)
    with pytest.raises(ValueError):
        GridSpec(3)
    assert np.isfinite(GridSpec(4).step)
