import math

import numpy as np
import pytest

from bellmrf.mrf import PI
from bellmrf.symbolic import (
    Delta,
    DegenerateAnglesError,
    SymbolicFactor,
    Term,
    Trig,
    _integrate_period,
    enumerate_outcome_classes,
    solve_class,
)


def test_trig_values():
    assert Trig("cos2", "x", 0.3)(0.3) == pytest.approx(1.0)
    assert Trig("sin2", "x", 0.0)(PI / 2) == pytest.approx(1.0)


@pytest.mark.parametrize("k", [0, 1, 2, 3, 5])
def test_period_rule_is_exact(k):
    rng = np.random.default_rng(k)
    trigs = [Trig(rng.choice(["cos2", "sin2"]), "x", rng.uniform(0, PI)) for _ in range(k)]
    offs = list(rng.uniform(0, PI, size=k))
    fine = np.linspace(0, PI, 200001)[:-1]
    vals = np.ones_like(fine)
    for t, o in zip(trigs, offs):
        vals *= t(fine + o)
    reference = vals.mean() * PI
    assert _integrate_period(trigs, offs) == pytest.approx(reference, rel=1e-9, abs=1e-12)


def test_single_cos2_integrates_to_half_pi():
    assert _integrate_period([Trig("cos2", "x")], [0.0]) == pytest.approx(PI / 2)


def test_delta_chain_pins_angles():
    terms = [
        Term("a", deltas=(Delta("x", None, 0.4),)),
        Term("b", deltas=(Delta("y", "x", PI / 2),), trig=(Trig("cos2", "y", 0.4),)),
    ]
    # y lands orthogonal to the cos^2 anchor
    solved = solve_class(terms, ["x", "y"])
    assert solved is None or solved[0] < 1e-30
    terms[1] = Term("b", deltas=(Delta("y", "x", 0.0),), trig=(Trig("cos2", "y", 0.1),))
    coeff, constraints, free = solve_class(terms, ["x", "y"])
    assert coeff == pytest.approx(math.cos(0.3) ** 2)
    assert free == []
    assert len(constraints) == 2


def test_free_angle_is_integrated():
    terms = [Term("a", coeff=2.0, trig=(Trig("sin2", "x", 0.2),))]
    coeff, _, free = solve_class(terms, ["x"])
    assert coeff == pytest.approx(PI)
    assert free == ["x"]


def test_contradiction_vanishes():
    terms = [Term("a", deltas=(Delta("x", None, 0.1), Delta("x", None, 0.5)))]
    assert solve_class(terms, ["x"]) is None


def test_redundant_delta_is_degenerate():
    terms = [Term("a", deltas=(Delta("x", None, 0.1),)), Term("b", deltas=(Delta("x", None, 0.1 + PI),))]
    with pytest.raises(DegenerateAnglesError):
        solve_class(terms, ["x"])


def test_redundant_delta_with_zero_weight_is_dropped():
    terms = [
        Term("a", deltas=(Delta("x", None, 0.1),), trig=(Trig("sin2", "x", 0.1),)),
        Term("b", deltas=(Delta("x", None, 0.1),)),
    ]
    assert solve_class(terms, ["x"]) is None


def test_absent_angle_kills_term():
    assert solve_class([Term("a", deltas=(Delta("gone", None, 0.0),))], ["x"]) is None


def test_enumeration_respects_condition_and_gate():
    f = SymbolicFactor(
        "f",
        [
            Term("off", 1.0, 0, (("g", 0),)),
            Term("on", 1.0, 1, (("g", 1),), (), (Trig("cos2", "t", 0.0),)),
        ],
    )
    classes = enumerate_outcome_classes([f], {"g": (0, 1)}, {"t": "g"}, {}, lambda v, ts: ts[0].tag)
    masses = {c.label: (c.mass.min_power, c.mass.leading.coeff) for c in classes}
    assert masses["off"] == (0, 1.0)
    assert masses["on"][0] == 1
    assert masses["on"][1] == pytest.approx(PI / 2)
    only_on = enumerate_outcome_classes([f], {"g": (0, 1)}, {"t": "g"}, {"g": 1}, lambda v, ts: ts[0].tag)
    assert [c.label for c in only_on] == ["on"]
