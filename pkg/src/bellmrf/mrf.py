"""Relative probabilities, partition functions and leading-order reduction.

Two routes compute the same quantities:

* the *grid* route tabulates every factor on a discretized outcome space and
  contracts the factor network exactly (variable elimination via ``einsum``);
  :func:`partition_function_bruteforce` enumerates the same sum literally and
  is only practical for small grids;
* the *class* route works with :class:`OutcomeClass` objects whose masses are
  exact :class:`AlphaPolynomial` values.

Delta functions on the grid are ``1/step`` when their argument falls on the
zero bin, and every present angle variable carries the measure ``step``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

PI = math.pi


class UnassignedVariableError(KeyError):
    """A factor referenced a variable missing from the assignment."""

    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"variable {self.name!r} is not assigned"


class NormalizationError(ZeroDivisionError):
    """The conditioning event carries no mass, so nothing can be normalized."""


# ---------------------------------------------------------------------------
# angles
# ---------------------------------------------------------------------------


def canonical(value: float) -> float:
    """Reduce a direction angle into [0, pi)."""
    r = math.fmod(float(value), PI)
    if r < 0.0:
        r += PI
    if r >= PI:  # fmod rounding at the upper edge
        r = 0.0
    return r


@dataclass(frozen=True)
class Angle:
    """Polarization direction; directions are identified mod pi."""

    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", canonical(self.value))

    def __float__(self) -> float:
        return self.value

    def __add__(self, other: Angle | float) -> Angle:
        return Angle(self.value + float(other))

    __radd__ = __add__

    def __sub__(self, other: Angle | float) -> Angle:
        return Angle(self.value - float(other))

    def __rsub__(self, other: float) -> Angle:
        return Angle(float(other) - self.value)

    def orthogonal(self) -> Angle:
        return Angle(self.value + PI / 2)

    def bin(self, n: int) -> int:
        return int(round(self.value / (PI / n))) % n

    def snap(self, n: int) -> Angle:
        return Angle(self.bin(n) * PI / n)

    def snap_distance(self, n: int) -> float:
        """Signed distance from this angle to its nearest grid bin."""
        d = self.bin(n) * PI / n - self.value
        # wraparound: bin 0 may be nearest to an angle just below pi
        if d < -PI / 2:
            d += PI
        return d

    def equal_on_grid(self, other: Angle | float, n: int) -> bool:
        return self.bin(n) == Angle(float(other)).bin(n)


def grid_angle(k: int, n: int) -> Angle:
    return Angle(k * PI / n)


# ---------------------------------------------------------------------------
# alpha bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AlphaWeight:
    """``coeff * alpha**power``."""

    coeff: float
    power: int = 0

    def __post_init__(self):
        if self.coeff < 0:
            raise ValueError(f"negative coefficient {self.coeff}")
        if self.power < 0 or int(self.power) != self.power:
            raise ValueError(f"alpha power must be a nonnegative integer, got {self.power}")

    def __mul__(self, other: AlphaWeight | float) -> AlphaWeight:
        if isinstance(other, AlphaWeight):
            return AlphaWeight(self.coeff * other.coeff, self.power + other.power)
        return AlphaWeight(self.coeff * float(other), self.power)

    __rmul__ = __mul__

    def __add__(self, other: AlphaWeight) -> AlphaWeight:
        if other.power != self.power:
            raise ValueError(
                f"cannot add alpha^{self.power} and alpha^{other.power}; use AlphaPolynomial"
            )
        return AlphaWeight(self.coeff + other.coeff, self.power)

    def evaluate(self, alpha: float) -> float:
        return self.coeff * alpha**self.power


class AlphaPolynomial:
    """Finite sum of :class:`AlphaWeight` terms with distinct powers."""

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[AlphaWeight] = ()):
        acc: dict[int, float] = {}
        for t in terms:
            acc[t.power] = acc.get(t.power, 0.0) + t.coeff
        self.terms: tuple[AlphaWeight, ...] = tuple(
            AlphaWeight(acc[p], p) for p in sorted(acc)
        )

    @classmethod
    def of(cls, coeff: float, power: int = 0) -> AlphaPolynomial:
        return cls([AlphaWeight(coeff, power)])

    def __repr__(self) -> str:
        body = " + ".join(f"{t.coeff:g}*a^{t.power}" for t in self.terms) or "0"
        return f"AlphaPolynomial({body})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AlphaPolynomial):
            return NotImplemented
        return self.nonzero().terms == other.nonzero().terms

    def __add__(self, other: AlphaPolynomial | AlphaWeight) -> AlphaPolynomial:
        extra = other.terms if isinstance(other, AlphaPolynomial) else (other,)
        return AlphaPolynomial(self.terms + tuple(extra))

    __radd__ = __add__

    def __mul__(self, other: AlphaPolynomial | AlphaWeight | float) -> AlphaPolynomial:
        if isinstance(other, AlphaPolynomial):
            return AlphaPolynomial(a * b for a in self.terms for b in other.terms)
        return AlphaPolynomial(t * other for t in self.terms)

    __rmul__ = __mul__

    def nonzero(self) -> AlphaPolynomial:
        return AlphaPolynomial(t for t in self.terms if t.coeff > 0)

    def coeff(self, power: int) -> float:
        for t in self.terms:
            if t.power == power:
                return t.coeff
        return 0.0

    @property
    def leading(self) -> AlphaWeight | None:
        for t in self.terms:
            if t.coeff > 0:
                return t
        return None

    @property
    def min_power(self) -> int | None:
        lead = self.leading
        return None if lead is None else lead.power

    def truncate(self, power: int) -> AlphaPolynomial:
        """Keep only the ``alpha**power`` term."""
        return AlphaPolynomial.of(self.coeff(power), power)

    def evaluate(self, alpha: float) -> float:
        return sum(t.evaluate(alpha) for t in self.terms)


# ---------------------------------------------------------------------------
# grid route
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    n: int
    alpha: float = 1e-3

    def __post_init__(self):
        if self.n < 4:
            raise ValueError(f"grid needs at least 4 bins per pi, got n={self.n}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    @property
    def step(self) -> float:
        return PI / self.n

    def delta(self, x: Angle | float, y: Angle | float = 0.0, offset: float = 0.0) -> float:
        """Grid delta of ``x - y - offset`` (mod pi)."""
        if Angle(float(x)).bin(self.n) == Angle(float(y) + offset).bin(self.n):
            return 1.0 / self.step
        return 0.0


BOOL = "bool"
SPIN = "spin"
ANGLE = "angle"


@dataclass(frozen=True)
class Variable:
    """An outcome variable of the circuit.

    ``gate`` names a Boolean; when set, the angle exists only while that
    Boolean is 1 and is otherwise ``None`` (no photon, no polarization).
    """

    name: str
    kind: str = BOOL
    gate: str | None = None

    def __post_init__(self):
        if self.kind not in (BOOL, SPIN, ANGLE):
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.gate is not None and self.kind != ANGLE:
            raise ValueError("only angle variables can be gated")

    def domain(self, grid: GridSpec) -> list:
        if self.kind == BOOL:
            return [0, 1]
        if self.kind == SPIN:
            return [-1, 1]
        values: list = [grid_angle(k, grid.n) for k in range(grid.n)]
        if self.gate is not None:
            values.append(None)
        return values

    def size(self, grid: GridSpec) -> int:
        if self.kind != ANGLE:
            return 2
        return grid.n + (self.gate is not None)

    def measure(self, grid: GridSpec) -> np.ndarray:
        w = np.ones(self.size(grid))
        if self.kind == ANGLE:
            w[: grid.n] = grid.step
        return w

    def index(self, value: Any, grid: GridSpec) -> int:
        """Position of ``value`` in :meth:`domain` (angles given as bins or radians)."""
        if self.kind == BOOL:
            if value not in (0, 1):
                raise ValueError(f"{self.name}: Boolean value expected, got {value!r}")
            return int(value)
        if self.kind == SPIN:
            if value not in (-1, 1):
                raise ValueError(f"{self.name}: value must be -1 or +1, got {value!r}")
            return 0 if value == -1 else 1
        if value is None:
            if self.gate is None:
                raise ValueError(f"{self.name} is never absent")
            return grid.n
        if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
            return int(value) % grid.n
        return Angle(float(value)).bin(grid.n)


@dataclass
class Factor:
    """A component model ``p_i*`` over its neighbour variables.

    ``evaluate(values, grid)`` maps the neighbours' values (same order as
    ``variables``) to a nonnegative number.  ``table(grid)``, when given,
    returns the whole factor as an array over the neighbours' domains and is
    used by the grid contraction instead of cell-by-cell evaluation.
    """

    variables: tuple[str, ...]
    evaluate: Callable[..., float]
    table: Callable[[GridSpec], np.ndarray] | None = None
    label: str = ""

    def __post_init__(self):
        self.variables = tuple(self.variables)

    def __call__(self, assignment: Mapping[str, Any], grid: GridSpec | None = None) -> float:
        try:
            values = [assignment[v] for v in self.variables]
        except KeyError as exc:
            raise UnassignedVariableError(exc.args[0]) from None
        return float(self.evaluate(*values, grid=grid))

    def tabulate(self, variables: Mapping[str, Variable], grid: GridSpec) -> np.ndarray:
        if self.table is not None:
            return np.asarray(self.table(grid), dtype=float)
        domains = [variables[v].domain(grid) for v in self.variables]
        out = np.empty([len(d) for d in domains])
        for idx in itertools.product(*(range(len(d)) for d in domains)):
            out[idx] = self.evaluate(*(d[i] for d, i in zip(domains, idx)), grid=grid)
        return out


def indicator(variables: Sequence[str], predicate: Callable[..., bool], label: str = "") -> Factor:
    """0/1 factor, e.g. a conditioning event written as a predicate."""
    return Factor(tuple(variables), lambda *vals, grid=None: float(bool(predicate(*vals))), label=label)


def product_relative_probability(
    factors: Iterable[Factor], assignment: Mapping[str, Any], grid: GridSpec | None = None
) -> float:
    """Product of all factor values at one outcome."""
    total = 1.0
    factors = list(factors)
    # look up every neighbour first so a missing variable is always reported
    for f in factors:
        for v in f.variables:
            if v not in assignment:
                raise UnassignedVariableError(v)
    for f in factors:
        value = f(assignment, grid)
        if value < 0:
            raise ValueError(f"factor {f.label or f.variables} returned negative value {value}")
        if value == 0.0:
            return 0.0
        total *= value
    return total


# An event is a clamp dict {variable: value}, a list of clamp dicts (their
# union), or an indicator Factor.
Event = Any


def _clamp_terms(event: Event) -> list[tuple[int, dict[str, Any] | Factor]]:
    """Expand an event into signed conjunctions (inclusion-exclusion)."""
    if event is None:
        return [(1, {})]
    if isinstance(event, Factor):
        return [(1, event)]
    if isinstance(event, Mapping):
        return [(1, dict(event))]
    disjuncts = [dict(d) for d in event]
    out: list[tuple[int, dict[str, Any]]] = []
    for r in range(1, len(disjuncts) + 1):
        sign = 1 if r % 2 else -1
        for combo in itertools.combinations(disjuncts, r):
            merged: dict[str, Any] | None = {}
            for d in combo:
                for k, v in d.items():
                    if k in merged and merged[k] != v:
                        merged = None
                        break
                    merged[k] = v
                if merged is None:
                    break
            if merged is not None:
                out.append((sign, merged))
    return out


def _contract(
    factors: Sequence[Factor],
    variables: Sequence[Variable],
    grid: GridSpec,
    clamps: Sequence[Mapping[str, Any] | Factor],
) -> float:
    by_name = {v.name: v for v in variables}
    if len(by_name) != len(variables):
        raise ValueError("duplicate variable names")
    axis = {v.name: i for i, v in enumerate(variables)}
    weights = {v.name: v.measure(grid) for v in variables}
    extra: list[Factor] = []
    for clamp in clamps:
        if isinstance(clamp, Factor):
            extra.append(clamp)
            continue
        for name, value in clamp.items():
            if name not in by_name:
                raise UnassignedVariableError(name)
            mask = np.zeros_like(weights[name])
            mask[by_name[name].index(value, grid)] = 1.0
            weights[name] = weights[name] * mask
    operands: list = []
    for f in list(factors) + extra:
        for v in f.variables:
            if v not in by_name:
                raise UnassignedVariableError(v)
        table = f.tabulate(by_name, grid)
        if np.any(table < 0):
            raise ValueError(f"factor {f.label or f.variables} has negative entries")
        operands += [table, [axis[v] for v in f.variables]]
    for v in variables:
        operands += [weights[v.name], [axis[v.name]]]
        if v.gate is not None:
            operands += [_gate_table(grid), [axis[v.gate], axis[v.name]]]
    return float(np.einsum(*operands, [], optimize="greedy"))


def _gate_table(grid: GridSpec) -> np.ndarray:
    g = np.zeros((2, grid.n + 1))
    g[0, grid.n] = 1.0
    g[1, : grid.n] = 1.0
    return g


def _event_mass(factors, variables, grid, condition, event) -> float:
    total = 0.0
    for sign_c, cond in _clamp_terms(condition):
        for sign_e, ev in _clamp_terms(event):
            total += sign_c * sign_e * _contract(factors, variables, grid, [cond, ev])
    return total


def partition_function_grid(
    factors: Sequence[Factor],
    variables: Sequence[Variable],
    grid: GridSpec,
    condition: Event = None,
) -> float:
    """Total relative probability of the conditioning event on the grid."""
    return max(_event_mass(factors, variables, grid, condition, None), 0.0)


def event_probability_grid(
    factors: Sequence[Factor],
    variables: Sequence[Variable],
    grid: GridSpec,
    condition: Event,
    event: Event,
) -> float:
    z = partition_function_grid(factors, variables, grid, condition)
    if not z > 0.0:
        raise NormalizationError(
            "conditioning event has zero mass on this grid; is the grid too coarse "
            "for the delta constraints?"
        )
    mass = _event_mass(factors, variables, grid, condition, event)
    return min(max(mass / z, 0.0), 1.0)


def partition_function_bruteforce(
    factors: Sequence[Factor],
    variables: Sequence[Variable],
    grid: GridSpec,
    condition: Callable[[Mapping[str, Any]], bool] | None = None,
) -> float:
    """Literal enumeration of every grid assignment; small grids only."""
    names = [v.name for v in variables]
    domains = [v.domain(grid) for v in variables]
    total = 0.0
    for values in itertools.product(*domains):
        assignment = dict(zip(names, values))
        weight = 1.0
        admissible = True
        for v in variables:
            value = assignment[v.name]
            if v.gate is not None and (value is None) != (assignment[v.gate] == 0):
                admissible = False
                break
            if v.kind == ANGLE and value is not None:
                weight *= grid.step
        if not admissible:
            continue
        if condition is not None and not condition(assignment):
            continue
        p = product_relative_probability(factors, assignment, grid)
        total += p * weight
    return total


# ---------------------------------------------------------------------------
# class route
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Constraint:
    """``left = right + offset`` (mod pi); ``right=None`` means the constant 0."""

    left: str
    right: str | None
    offset: float = 0.0

    def __str__(self) -> str:
        rhs = self.right or "0"
        return f"{self.left} = {rhs} + {self.offset:.6g}" if self.offset else f"{self.left} = {rhs}"


@dataclass
class OutcomeClass:
    label: str
    mass: AlphaPolynomial
    constraints: list[Constraint] = field(default_factory=list)
    boolean_assignment: dict[str, int] = field(default_factory=dict)
    free_angles: list[str] = field(default_factory=list)


def reduce_leading_order(classes: Sequence[OutcomeClass]) -> list[OutcomeClass]:
    """Classes carrying the globally smallest alpha power, truncated to it."""
    powers = [c.mass.min_power for c in classes if c.mass.min_power is not None]
    if not powers:
        return []
    p = min(powers)
    out = []
    for c in classes:
        if c.mass.coeff(p) > 0:
            out.append(
                OutcomeClass(c.label, c.mass.truncate(p), list(c.constraints),
                             dict(c.boolean_assignment), list(c.free_angles))
            )
    return out


def merge_classes(classes: Sequence[OutcomeClass], key: Callable[[str], str]) -> list[OutcomeClass]:
    """Sum class masses sharing ``key(label)``; first-seen order."""
    merged: dict[str, OutcomeClass] = {}
    for c in classes:
        k = key(c.label)
        if k in merged:
            merged[k].mass = merged[k].mass + c.mass
        else:
            merged[k] = OutcomeClass(k, c.mass, list(c.constraints),
                                     dict(c.boolean_assignment), list(c.free_angles))
    return list(merged.values())


def total_mass(classes: Sequence[OutcomeClass]) -> AlphaPolynomial:
    return sum((c.mass for c in classes), AlphaPolynomial())


def normalize_classes(classes: Sequence[OutcomeClass], event: Callable[[str], bool]) -> float:
    """Share of the total coefficient carried by the classes selected by ``event``."""
    powers = {c.mass.min_power for c in classes if c.mass.min_power is not None}
    if len(powers) > 1:
        raise ValueError(f"classes mix alpha powers {sorted(powers)}; reduce first")
    total = sum(t.coeff for c in classes for t in c.mass.terms)
    if not total > 0:
        raise NormalizationError("classes carry no mass")
    selected = sum(t.coeff for c in classes if event(c.label) for t in c.mass.terms)
    return selected / total
