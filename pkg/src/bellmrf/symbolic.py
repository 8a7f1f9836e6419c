"""Exact outcome-class enumeration for factor models built from delta terms.

Each factor is written as a sum of :class:`Term` objects: a coefficient, a
power of alpha, the discrete values the term requires, delta constraints
between angles, and cos^2/sin^2 weights.  Multiplying one term from every
factor gives a candidate class; its deltas are solved with a union-find over
angle offsets, pinned angles are substituted, and whatever angles stay free
are integrated exactly over [0, pi).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .mrf import PI, AlphaPolynomial, Constraint, OutcomeClass

_ZERO = "<zero>"
_ANGLE_TOL = 1e-9


class DegenerateAnglesError(ValueError):
    """A delta constraint became redundant, so a class mass is infinite.

    Happens at tunings such as theta_a == theta_b, where distinct delta
    anchors collapse onto each other.
    """


@dataclass(frozen=True)
class Delta:
    """delta(left - right - offset); ``right=None`` anchors ``left`` at ``offset``."""

    left: str
    right: str | None = None
    offset: float = 0.0


@dataclass(frozen=True)
class Trig:
    """cos^2 or sin^2 of ``var - shift`` (``var=None`` for a constant)."""

    kind: str
    var: str | None
    shift: float = 0.0

    def __call__(self, theta: float | np.ndarray):
        c = np.cos(theta - self.shift)
        return c * c if self.kind == "cos2" else 1.0 - c * c


@dataclass(frozen=True)
class Term:
    tag: str
    coeff: float = 1.0
    power: int = 0
    pattern: tuple[tuple[str, int], ...] = ()
    deltas: tuple[Delta, ...] = ()
    trig: tuple[Trig, ...] = ()

    def matches(self, values: Mapping[str, int]) -> bool:
        return all(values[k] == v for k, v in self.pattern)


@dataclass
class SymbolicFactor:
    name: str
    terms: list[Term] = field(default_factory=list)


def _residual(x: float) -> float:
    r = math.fmod(x, PI)
    if r < 0:
        r += PI
    return min(r, PI - r)


class _OffsetUnionFind:
    def __init__(self, names):
        self.parent = {n: n for n in names}
        self.pot = {n: 0.0 for n in names}  # value(node) - value(parent)

    def find(self, x):
        if self.parent[x] == x:
            return x, 0.0
        root, p = self.find(self.parent[x])
        self.parent[x] = root
        self.pot[x] += p
        return root, self.pot[x]

    def union(self, left, right, offset) -> str:
        """Impose value(left) = value(right) + offset.

        Returns "merged", "redundant" (already implied) or "contradiction".
        """
        rl, pl = self.find(left)
        rr, pr = self.find(right)
        if rl == rr:
            return "redundant" if _residual(pl - pr - offset) < _ANGLE_TOL else "contradiction"
        if rl == _ZERO:
            self.parent[rr] = rl
            self.pot[rr] = pl - offset - pr
        else:
            self.parent[rl] = rr
            self.pot[rl] = pr + offset - pl
        return "merged"


def _integrate_period(trigs: Sequence[Trig], offsets: Sequence[float]) -> float:
    """Exact integral over [0, pi) of a product of shifted cos^2/sin^2.

    The integrand is a trigonometric polynomial in 2*theta of degree
    len(trigs); an equally weighted rule with more nodes than that degree
    integrates it exactly.
    """
    if not trigs:
        return PI
    m = 2 * len(trigs) + 2
    theta = np.arange(m) * (PI / m)
    values = np.ones(m)
    for t, off in zip(trigs, offsets):
        values = values * t(theta + off)
    return float(values.sum() * (PI / m))


def solve_class(
    terms: Sequence[Term], present: Sequence[str]
) -> tuple[float, list[Constraint], list[str]] | None:
    """Integrated coefficient of one term product, or None if it vanishes.

    Raises DegenerateAnglesError when a delta is implied by the others.
    """
    uf = _OffsetUnionFind(list(present) + [_ZERO])
    constraints = []
    redundant = []
    for t in terms:
        for d in t.deltas:
            for name in (d.left, d.right):
                if name is not None and name not in uf.parent:
                    return None  # the term refers to an absent photon
            status = uf.union(d.left, d.right or _ZERO, d.offset)
            constraints.append(Constraint(d.left, d.right, d.offset))
            if status == "contradiction":
                return None
            if status == "redundant":
                redundant.append(constraints[-1])
    coeff = 1.0
    free: dict[str, tuple[list[Trig], list[float]]] = {}
    for t in terms:
        coeff *= t.coeff
        for tr in t.trig:
            if tr.var is None:
                coeff *= float(tr(0.0))
                continue
            if tr.var not in uf.parent:
                return None
            root, pot = uf.find(tr.var)
            if root == _ZERO:
                coeff *= float(tr(pot))
            else:
                fs, offs = free.setdefault(root, ([], []))
                fs.append(tr)
                offs.append(pot)
    roots = sorted({uf.find(v)[0] for v in present} - {_ZERO})
    for r in roots:
        fs, offs = free.get(r, ([], []))
        coeff *= _integrate_period(fs, offs)
    if coeff == 0.0:
        return None
    if redundant:
        if coeff < 1e-12:
            return None  # vanishing weight on a coincident anchor
        # delta(0): infinite mass
        raise DegenerateAnglesError(
            f"constraint {redundant[0]} is implied by the others in {[x.tag for x in terms]}"
        )
    return coeff, constraints, roots


def enumerate_outcome_classes(
    factors: Sequence[SymbolicFactor],
    discrete: Mapping[str, Sequence[int]],
    angles: Mapping[str, str | None],
    condition: Mapping[str, int],
    label: Callable[[Mapping[str, int], Sequence[Term]], str],
) -> list[OutcomeClass]:
    """Every nonvanishing term product consistent with ``condition``.

    ``discrete`` maps Boolean/spin variables to their domains; ``angles``
    maps each angle variable to its gating Boolean (or None).
    """
    names = list(discrete)
    out: list[OutcomeClass] = []
    domains = [[condition[n]] if n in condition else list(discrete[n]) for n in names]
    for values in itertools.product(*domains):
        assignment = dict(zip(names, values))
        present = [a for a, gate in angles.items() if gate is None or assignment[gate] == 1]
        choices = [[t for t in f.terms if t.matches(assignment)] for f in factors]
        for combo in itertools.product(*choices):
            solved = solve_class(combo, present)
            if solved is None:
                continue
            coeff, constraints, free = solved
            power = sum(t.power for t in combo)
            out.append(
                OutcomeClass(
                    label=label(assignment, combo),
                    mass=AlphaPolynomial.of(coeff, power),
                    constraints=constraints,
                    boolean_assignment=assignment,
                    free_angles=free,
                )
            )
    return out
