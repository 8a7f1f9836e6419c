"""Component models for the two-polarizer Bell circuit.

Per channel X in {L, R} the outcome variables are

* ``gamma_src_X`` / ``theta_src_X``: photon on the source side of the
  polarizer and its polarization;
* ``gamma_det_X`` / ``theta_det_X``: photon between polarizer and counter;
  the angle exists only when ``gamma_det_X == 1``;
* ``d_src_X`` / ``d_det_X`` (expanded model only): time direction, +1 or -1.

Probabilities are conditional on the source firing
(``gamma_src_L == gamma_src_R == 1``).

Two readings of the printed polarizer equations are used here.  In the
transparent model the pattern ``gamma_+(1 - gamma_+)`` is read as
``gamma_src(1 - gamma_det)`` and ``gamma_+(1 - gamma_-)`` as
``(1 - gamma_src)gamma_det``.  In the expanded model the pass terms also pin
the outgoing angle to the tuning (projection); without that pin the
literal factor gives a coincidence rate independent of the tunings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import kernels
from .kqed import outcome_probabilities
from .mrf import (
    BOOL,
    PI,
    SPIN,
    ANGLE,
    AlphaPolynomial,
    AlphaWeight,
    Angle,
    Factor,
    GridSpec,
    OutcomeClass,
    Variable,
    canonical,
    event_probability_grid,
    merge_classes,
    normalize_classes,
    partition_function_grid,
    reduce_leading_order,
    total_mass,
)
from .symbolic import (
    DegenerateAnglesError,
    Delta,
    SymbolicFactor,
    Term,
    Trig,
    enumerate_outcome_classes,
)

Model = Literal["mrf1", "mrf2", "kqed"]
MODELS = ("mrf1", "mrf2", "kqed")

DOUBLE = "double_coincidence"
KLYSHKO_ABSORB = "klyshko_absorption"
ANTI_DOUBLE = "anti_double_absorption"
ANTI_SINGLE = "anti_single"
SUBSETS = (DOUBLE, KLYSHKO_ABSORB, ANTI_DOUBLE, ANTI_SINGLE)

SIDES = ("L", "R")

# uniform counter-angle measure (pi) times the three factor-of-two time-direction
# weights: source (1 - D_L D_R) and each polarizer's (1 +- D)
MRF2_SCALE = 1.0 / (8.0 * PI)


def _tol_delta(x: float, y: float, offset: float, grid: GridSpec | None) -> float:
    if grid is not None:
        return grid.delta(x, y, offset)
    r = canonical(float(x) - float(y) - offset)
    return 1.0 if min(r, PI - r) < 1e-9 else 0.0


def _cos2(x: float) -> float:
    return math.cos(x) ** 2


def _sin2(x: float) -> float:
    return math.sin(x) ** 2


# ---------------------------------------------------------------------------
# scalar component models
# ---------------------------------------------------------------------------


def counter_factor(gamma_det: int, theta_det: Angle | float | None = None) -> AlphaWeight:
    """Counter model: 1 with no photon, alpha (per unit angle) with one.

    The dtheta of the detected photon is the measure of ``theta_det`` itself,
    so it is not repeated here.  Independent of the polarization.
    """
    if gamma_det not in (0, 1):
        raise ValueError(f"gamma_det must be 0 or 1, got {gamma_det!r}")
    return AlphaWeight(1.0, 0) if gamma_det == 0 else AlphaWeight(1.0, 1)


def source_factor_mrf1(theta_src_L, theta_src_R, grid: GridSpec | None = None) -> float:
    """delta(theta_src_L - theta_src_R); ``1/step`` on a grid, 1 when ``grid`` is None."""
    return _tol_delta(theta_src_L, theta_src_R, 0.0, grid)


def polarizer_factor_mrf1(
    gamma_src: int,
    theta_src,
    gamma_det: int,
    theta_det,
    theta_tune,
    grid: GridSpec | None = None,
) -> AlphaPolynomial:
    """Transparent-model polarizer as a polynomial in alpha.

    Delta functions evaluate to ``1/grid.step`` (or 1 without a grid).
    ``theta_det`` is ignored (may be None) when ``gamma_det == 0``.
    """
    if (gamma_src == 1 and theta_src is None) or (gamma_det == 1 and theta_det is None):
        return AlphaPolynomial([])  # a present photon needs an angle; no mass otherwise
    t = float(theta_tune)
    terms = []
    if gamma_src == 1 and gamma_det == 1:
        s, d = float(theta_src), float(theta_det)
        anchor = _tol_delta(d, s, 0.0, grid) * _tol_delta(s, t, 0.0, grid)
        terms.append(AlphaWeight(anchor, 0))
        classical = _cos2(s - t) * _tol_delta(s, d, 0.0, grid) + _cos2(d - t) * _tol_delta(s, t, 0.0, grid)
        terms.append(AlphaWeight(classical, 1))
    elif gamma_src == 1 and gamma_det == 0:
        s = float(theta_src)
        terms.append(AlphaWeight(_tol_delta(s, t, PI / 2, grid), 1))
        terms.append(AlphaWeight(_sin2(s - t), 2))
    elif gamma_src == 0 and gamma_det == 1:
        d = float(theta_det)
        terms.append(AlphaWeight(_tol_delta(d, t, PI / 2, grid), 1))
        terms.append(AlphaWeight(_sin2(d - t), 2))
    return AlphaPolynomial(terms)


def source_factor_mrf2(theta_src_L, theta_src_R, d_L: int, d_R: int, grid: GridSpec | None = None) -> float:
    """delta(theta_L - theta_R) * (1 - d_L d_R): photons leave in opposite time directions."""
    return _tol_delta(theta_src_L, theta_src_R, 0.0, grid) * (1 - d_L * d_R)


def polarizer_factor_mrf2(
    gamma_src: int,
    theta_src,
    gamma_det: int,
    theta_det,
    d: int,
    theta_tune,
    grid: GridSpec | None = None,
    projection: bool = False,
) -> AlphaPolynomial:
    """Expanded-model polarizer; ``d`` is the shared time direction of both legs.

    With ``projection=True`` the pass terms carry delta(outgoing - tune): the
    forward photon leaves on the detector side at the tuning angle, the
    backward photon on the source side.
    """
    if d not in (-1, 1):
        raise ValueError(f"d must be -1 or +1, got {d!r}")
    if (gamma_src == 1 and theta_src is None) or (gamma_det == 1 and theta_det is None):
        return AlphaPolynomial([])  # a present photon needs an angle; no mass otherwise
    t = float(theta_tune)
    s = None if theta_src is None else float(theta_src)
    dd = None if theta_det is None else float(theta_det)
    g_s, g_d = gamma_src, gamma_det
    pass_w = 0.0
    absorb_w = 0.0
    if g_s * g_d:
        fwd = _cos2(s - t) * (1 + d)
        bwd = _cos2(dd - t) * (1 - d)
        if projection:
            fwd *= _tol_delta(dd, t, 0.0, grid)
            bwd *= _tol_delta(s, t, 0.0, grid)
        pass_w = fwd + bwd
    if g_s * (1 - g_d):
        absorb_w += _sin2(s - t) * (1 + d)
    if (1 - g_s) * g_d:
        absorb_w += _sin2(dd - t) * (1 - d)
    return AlphaPolynomial([AlphaWeight(pass_w, 0), AlphaWeight(absorb_w, 1)])


# ---------------------------------------------------------------------------
# configuration and results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BellConfig:
    theta_a: float
    theta_b: float
    model: str = "mrf1"
    alpha: float = 1e-3

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if not 0 < self.alpha <= 0.1:
            raise ValueError(f"alpha must lie in (0, 0.1], got {self.alpha}")
        object.__setattr__(self, "theta_a", canonical(self.theta_a))
        object.__setattr__(self, "theta_b", canonical(self.theta_b))

    @property
    def phi(self) -> float:
        return canonical(abs(self.theta_a - self.theta_b))

    def snapped(self, n: int) -> BellConfig:
        return BellConfig(
            Angle(self.theta_a).snap(n).value, Angle(self.theta_b).snap(n).value, self.model, self.alpha
        )


@dataclass(frozen=True)
class BellRates:
    coincidence: float
    klyshko_absorb: float
    anti_double_absorb: float
    anti_single: float
    degenerate: bool = False

    def as_dict(self) -> dict[str, float]:
        return {
            DOUBLE: self.coincidence,
            KLYSHKO_ABSORB: self.klyshko_absorb,
            ANTI_DOUBLE: self.anti_double_absorb,
            ANTI_SINGLE: self.anti_single,
        }

    @property
    def total(self) -> float:
        return self.coincidence + self.klyshko_absorb + self.anti_double_absorb + self.anti_single


# ---------------------------------------------------------------------------
# symbolic models
# ---------------------------------------------------------------------------


def _v(prefix: str, side: str) -> str:
    return f"{prefix}_{side}"


def _counter_terms(side: str) -> SymbolicFactor:
    g = _v("gamma_det", side)
    return SymbolicFactor(
        f"counter_{side}",
        [Term(f"none/{side}", 1.0, 0, ((g, 0),)), Term(f"count/{side}", 1.0, 1, ((g, 1),))],
    )


def mrf1_symbolic(config: BellConfig) -> list[SymbolicFactor]:
    factors = [_counter_terms("L"), _counter_terms("R")]
    factors.append(
        SymbolicFactor("source", [Term("src", deltas=(Delta("theta_src_L", "theta_src_R"),))])
    )
    for side, tune in (("L", config.theta_a), ("R", config.theta_b)):
        gs, gd = _v("gamma_src", side), _v("gamma_det", side)
        ts, td = _v("theta_src", side), _v("theta_det", side)
        both = ((gs, 1), (gd, 1))
        src_only = ((gs, 1), (gd, 0))
        det_only = ((gs, 0), (gd, 1))
        factors.append(
            SymbolicFactor(
                f"polarizer_{side}",
                [
                    Term(f"A/{side}", 1.0, 0, both, (Delta(td, ts), Delta(ts, None, tune))),
                    Term(f"B1/{side}", 1.0, 1, src_only, (Delta(ts, None, tune + PI / 2),)),
                    Term(f"B2/{side}", 1.0, 1, det_only, (Delta(td, None, tune + PI / 2),)),
                    Term(f"C1/{side}", 1.0, 1, both, (Delta(ts, td),), (Trig("cos2", ts, tune),)),
                    Term(f"C2/{side}", 1.0, 1, both, (Delta(ts, None, tune),), (Trig("cos2", td, tune),)),
                    Term(f"D1/{side}", 1.0, 2, src_only, (), (Trig("sin2", ts, tune),)),
                    Term(f"D2/{side}", 1.0, 2, det_only, (), (Trig("sin2", td, tune),)),
                ],
            )
        )
    return factors


def _mrf1_label(values, terms) -> str:
    anchors = [t.tag for t in terms if t.tag[0] in "AB"]
    detections = values["gamma_det_L"] + values["gamma_det_R"]
    if len(anchors) != 1:
        return "other"
    kind, side = anchors[0].split("/")
    if kind == "A":
        name = {2: DOUBLE, 1: KLYSHKO_ABSORB}.get(detections)
    else:
        name = {0: ANTI_DOUBLE, 1: ANTI_SINGLE}.get(detections)
    return f"{name}/{side}" if name else "other"


_BELL_DISCRETE = {"gamma_src_L": (0, 1), "gamma_det_L": (0, 1), "gamma_src_R": (0, 1), "gamma_det_R": (0, 1)}
_BELL_ANGLES = {
    "theta_src_L": None,
    "theta_det_L": "gamma_det_L",
    "theta_src_R": None,
    "theta_det_R": "gamma_det_R",
}
SOURCE_FIRED = {"gamma_src_L": 1, "gamma_src_R": 1}


def mrf1_all_classes(config: BellConfig) -> list[OutcomeClass]:
    """Every nonvanishing transparent-model class, per channel and to all orders."""
    return enumerate_outcome_classes(
        mrf1_symbolic(config), _BELL_DISCRETE, _BELL_ANGLES, SOURCE_FIRED, _mrf1_label
    )


def _subset(label: str) -> str:
    return label.split("/")[0]


def _ordered(classes: list[OutcomeClass]) -> list[OutcomeClass]:
    rank = {name: i for i, name in enumerate(SUBSETS)}
    return sorted(classes, key=lambda c: rank.get(c.label, len(rank)))


def enumerate_classes_mrf1(config: BellConfig) -> list[OutcomeClass]:
    """The four leading-order (alpha^3) subsets of the transparent model.

    Raises DegenerateAnglesError when the tunings are parallel or orthogonal.
    """
    leading = reduce_leading_order(mrf1_all_classes(config))
    return _ordered(merge_classes(leading, _subset))


def mrf2_symbolic(config: BellConfig) -> list[SymbolicFactor]:
    factors = [_counter_terms("L"), _counter_terms("R")]
    src = Delta("theta_src_L", "theta_src_R")
    factors.append(
        SymbolicFactor(
            "source",
            [
                Term("src+-", 2.0, 0, (("d_src_L", 1), ("d_src_R", -1)), (src,)),
                Term("src-+", 2.0, 0, (("d_src_L", -1), ("d_src_R", 1)), (src,)),
            ],
        )
    )
    for side, tune in (("L", config.theta_a), ("R", config.theta_b)):
        gs, gd = _v("gamma_src", side), _v("gamma_det", side)
        ts, td = _v("theta_src", side), _v("theta_det", side)
        ds, dd = _v("d_src", side), _v("d_det", side)
        factors.append(
            SymbolicFactor(
                f"tie_{side}",
                [Term(f"tie+/{side}", 1.0, 0, ((ds, 1), (dd, 1))), Term(f"tie-/{side}", 1.0, 0, ((ds, -1), (dd, -1)))],
            )
        )
        factors.append(
            SymbolicFactor(
                f"polarizer_{side}",
                [
                    Term(f"P+/{side}", 2.0, 0, ((gs, 1), (gd, 1), (ds, 1)),
                         (Delta(td, None, tune),), (Trig("cos2", ts, tune),)),
                    Term(f"P-/{side}", 2.0, 0, ((gs, 1), (gd, 1), (ds, -1)),
                         (Delta(ts, None, tune),), (Trig("cos2", td, tune),)),
                    Term(f"Abs+/{side}", 2.0, 1, ((gs, 1), (gd, 0), (ds, 1)), (), (Trig("sin2", ts, tune),)),
                    Term(f"Abs-/{side}", 2.0, 1, ((gs, 0), (gd, 1), (ds, -1)), (), (Trig("sin2", td, tune),)),
                ],
            )
        )
    return factors


def _mrf2_label(values, terms) -> str:
    backward = [s for s in SIDES if values[f"d_src_{s}"] == -1]
    detections = values["gamma_det_L"] + values["gamma_det_R"]
    if len(backward) != 1:
        return "other"
    name = {2: DOUBLE, 1: KLYSHKO_ABSORB}.get(detections)
    return f"{name}/{backward[0]}" if name else "other"


_MRF2_DISCRETE = dict(_BELL_DISCRETE, d_src_L=(-1, 1), d_det_L=(-1, 1), d_src_R=(-1, 1), d_det_R=(-1, 1))


def mrf2_klyshko_classes(config: BellConfig) -> list[OutcomeClass]:
    """Per-channel Klyshko classes of the expanded model, in units of ``MRF2_SCALE``."""
    classes = enumerate_outcome_classes(
        mrf2_symbolic(config), _MRF2_DISCRETE, _BELL_ANGLES, SOURCE_FIRED, _mrf2_label
    )
    for c in classes:
        c.mass = c.mass * MRF2_SCALE
    return classes


def enumerate_classes_mrf2(config: BellConfig) -> list[OutcomeClass]:
    """The expanded model's four subsets at order alpha^2.

    The factors generate only the Klyshko classes.  Each antiKlyshko class is
    the time-reversed partner of a Klyshko class and carries the same mass:
    double absorption pairs with double coincidence, single counting with
    Klyshko absorption.
    """
    klyshko = reduce_leading_order(mrf2_klyshko_classes(config))
    anti = []
    for c in klyshko:
        name, side = c.label.split("/")
        partner = ANTI_DOUBLE if name == DOUBLE else ANTI_SINGLE
        anti.append(OutcomeClass(f"{partner}/{side}", c.mass, list(c.constraints),
                                 dict(c.boolean_assignment), list(c.free_angles)))
    return _ordered(merge_classes(klyshko + anti, _subset))


def continuous_limit_rates(phi: float) -> BellRates:
    """The four subset rates as smooth functions of phi (degenerate fallback)."""
    c2 = math.cos(phi) ** 2
    s2 = math.sin(phi) ** 2
    return BellRates(0.5 * c2, 0.5 * s2, 0.5 * c2, 0.5 * s2, degenerate=True)


def rates_from_classes(classes: list[OutcomeClass]) -> BellRates:
    fields = [normalize_classes(classes, lambda label, n=name: label == n) for name in SUBSETS]
    return BellRates(*fields)


def bell_rates(config: BellConfig) -> BellRates:
    """Coincidence and absorption rates per emitted pair, for any model."""
    if config.model == "kqed":
        p = outcome_probabilities(config.theta_a, config.theta_b)
        single = 0.5 * (p["pass_absorb"] + p["absorb_pass"])
        return BellRates(p["pass_pass"], single, p["absorb_absorb"], single)
    enumerate_ = enumerate_classes_mrf1 if config.model == "mrf1" else enumerate_classes_mrf2
    try:
        classes = enumerate_(config)
    except DegenerateAnglesError:
        return continuous_limit_rates(config.phi)
    return rates_from_classes(classes)


def partition_coefficient(config: BellConfig) -> tuple[float, int]:
    """Leading-order partition function as (coefficient, alpha power)."""
    enumerate_ = enumerate_classes_mrf1 if config.model == "mrf1" else enumerate_classes_mrf2
    z = total_mass(enumerate_(config))
    lead = z.leading
    return lead.coeff, lead.power


# ---------------------------------------------------------------------------
# grid models
# ---------------------------------------------------------------------------


@dataclass
class BellGridModel:
    config: BellConfig
    grid: GridSpec
    variables: list[Variable]
    factors: list[Factor]
    condition: dict
    events: dict
    snap_distance: tuple[float, float]

    def partition_function(self) -> float:
        return partition_function_grid(self.factors, self.variables, self.grid, self.condition)

    def probability(self, event) -> float:
        if isinstance(event, str):
            event = self.events[event]
        return event_probability_grid(self.factors, self.variables, self.grid, self.condition, event)


def _bell_variables(with_d: bool) -> list[Variable]:
    out = []
    for side in SIDES:
        out += [
            Variable(f"gamma_src_{side}", BOOL),
            Variable(f"theta_src_{side}", ANGLE),
            Variable(f"gamma_det_{side}", BOOL),
            Variable(f"theta_det_{side}", ANGLE, gate=f"gamma_det_{side}"),
        ]
        if with_d:
            out += [Variable(f"d_src_{side}", SPIN), Variable(f"d_det_{side}", SPIN)]
    return out


def _counter_grid_factor(side: str, alpha: float, with_d: bool) -> Factor:
    def table(grid):
        t = np.zeros((2, grid.n + 1))
        t[0, grid.n] = 1.0
        t[1, : grid.n] = alpha
        if with_d:
            t = np.repeat(t[:, :, None], 2, axis=2)
        return t

    def evaluate(g, theta, *d, grid=None):
        return counter_factor(g, theta).evaluate(alpha)

    names = (f"gamma_det_{side}", f"theta_det_{side}") + ((f"d_det_{side}",) if with_d else ())
    return Factor(names, evaluate, table, label=f"counter_{side}")


def grid_model(
    config: BellConfig, grid: GridSpec, projection: bool = True, backend: str | None = None
) -> BellGridModel:
    """Discretize a transparent or expanded model onto ``grid``.

    Tunings are snapped to the nearest bin; ``snap_distance`` records by how
    much.  ``projection`` only affects the expanded model.  ``backend`` picks
    the polarizer tabulation: None (default kernels), "python", "compiled",
    or "naive" to evaluate the scalar factor cell by cell.
    """
    if config.model == "kqed":
        raise ValueError("the reference calculation has no grid model")
    naive = backend == "naive"
    kern = None if naive else kernels.backend(backend)
    n = grid.n
    alpha = grid.alpha
    snapped = config.snapped(n)
    a, b = snapped.theta_a, snapped.theta_b
    tunes = {"L": a, "R": b}
    bins = {s: Angle(t).bin(n) for s, t in tunes.items()}
    orth = {s: Angle(t + PI / 2).bin(n) for s, t in tunes.items()}
    with_d = config.model == "mrf2"
    variables = _bell_variables(with_d)
    factors = [_counter_grid_factor(s, alpha, with_d) for s in SIDES]

    if not with_d:
        factors.append(
            Factor(
                ("theta_src_L", "theta_src_R"),
                lambda x, y, grid=None: source_factor_mrf1(x, y, grid),
                lambda g: np.eye(g.n) / g.step,
                label="source",
            )
        )
        for side in SIDES:
            tune = tunes[side]

            def evaluate(gs, ts, gd, td, grid=None, tune=tune):
                return polarizer_factor_mrf1(gs, ts, gd, td, tune, grid).evaluate(grid.alpha)

            def table(g, side=side):
                return kern.mrf1_polarizer_table(g.n, bins[side], orth[side], g.alpha)

            factors.append(
                Factor(
                    (f"gamma_src_{side}", f"theta_src_{side}", f"gamma_det_{side}", f"theta_det_{side}"),
                    evaluate, None if naive else table, label=f"polarizer_{side}",
                )
            )
        events = {
            DOUBLE: {"gamma_det_L": 1, "gamma_det_R": 1},
            KLYSHKO_ABSORB: [
                {"gamma_det_L": 1, "gamma_det_R": 0, "theta_src_L": bins["L"]},
                {"gamma_det_L": 0, "gamma_det_R": 1, "theta_src_R": bins["R"]},
            ],
            ANTI_DOUBLE: {"gamma_det_L": 0, "gamma_det_R": 0},
            ANTI_SINGLE: [
                {"gamma_det_L": 1, "gamma_det_R": 0, "theta_src_R": orth["R"]},
                {"gamma_det_L": 0, "gamma_det_R": 1, "theta_src_L": orth["L"]},
            ],
        }
    else:
        def src_table(g):
            t = np.zeros((g.n, g.n, 2, 2))
            t[:, :, 0, 1] = t[:, :, 1, 0] = np.eye(g.n) * (2.0 / g.step)
            return t

        factors.append(
            Factor(
                ("theta_src_L", "theta_src_R", "d_src_L", "d_src_R"),
                lambda x, y, dl, dr, grid=None: source_factor_mrf2(x, y, dl, dr, grid),
                src_table,
                label="source",
            )
        )
        for side in SIDES:
            tune = tunes[side]

            def evaluate(gs, ts, gd, td, d, grid=None, tune=tune):
                return polarizer_factor_mrf2(gs, ts, gd, td, d, tune, grid, projection).evaluate(grid.alpha)

            def table(g, side=side):
                return kern.mrf2_polarizer_table(g.n, bins[side], g.alpha, projection)

            factors.append(
                Factor(
                    (f"gamma_src_{side}", f"theta_src_{side}", f"gamma_det_{side}", f"theta_det_{side}",
                     f"d_src_{side}"),
                    evaluate, None if naive else table, label=f"polarizer_{side}",
                )
            )
            factors.append(
                Factor(
                    (f"d_src_{side}", f"d_det_{side}"),
                    lambda x, y, grid=None: float(x == y),
                    lambda g: np.eye(2),
                    label=f"tie_{side}",
                )
            )
        events = {
            DOUBLE: {"gamma_det_L": 1, "gamma_det_R": 1},
            KLYSHKO_ABSORB: [{"gamma_det_L": 1, "gamma_det_R": 0}, {"gamma_det_L": 0, "gamma_det_R": 1}],
        }
    snaps = (Angle(config.theta_a).snap_distance(n), Angle(config.theta_b).snap_distance(n))
    return BellGridModel(snapped, grid, variables, factors, dict(SOURCE_FIRED), events, snaps)


def grid_rates(
    config: BellConfig, grid: GridSpec, projection: bool = True, backend: str | None = None
) -> dict[str, float]:
    """Grid-route probabilities of each subset event.

    For the expanded model only the Klyshko sector exists on the grid, so the
    two entries are shares of that sector.
    """
    model = grid_model(config, grid, projection, backend)
    return {name: model.probability(ev) for name, ev in model.events.items()}
