"""Three-photon GHZ source measured by three ideal polarizers.

States are complex arrays of shape (2, 2, 2) indexed by the polarization of
photons a, b, c in the {0, pi/2} basis (index 0 = horizontal, 1 = vertical).
A photon that has passed a polarizer tuned to theta is left in
|theta> = cos(theta)|0> + sin(theta)|pi/2>, still written in that basis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

PHOTONS = ("a", "b", "c")
_AXIS = {p: i for i, p in enumerate(PHOTONS)}
CASCADE_TOL = 1e-12
ZERO_PROB = 1e-15  # below this a branch is rounding noise


@dataclass
class TriphotonState:
    amplitudes: np.ndarray
    measured: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(2, 2, 2)

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def amplitude(self, pa: int, pb: int, pc: int) -> complex:
        return complex(self.amplitudes[pa, pb, pc])


@dataclass
class CollapseBranch:
    pass_probability: float
    passed_state: TriphotonState | None
    absorbed_probability: float
    absorbed_state: TriphotonState | None = None


def ghz_state() -> TriphotonState:
    psi = np.zeros((2, 2, 2), dtype=complex)
    psi[0, 0, 1] = psi[1, 1, 0] = 1 / math.sqrt(2)
    return TriphotonState(psi)


def rebase_coefficients(theta):
    """Components of |0> and |pi/2> along (|theta>, |theta + pi/2>)."""
    c, s = math.cos(float(theta)), math.sin(float(theta))
    return (c, -s), (s, c)


def _ket(theta) -> np.ndarray:
    return np.array([math.cos(float(theta)), math.sin(float(theta))])


def _project(psi: np.ndarray, photon: str, theta) -> tuple[np.ndarray, np.ndarray]:
    """Split ``psi`` into the parts with ``photon`` along theta and theta + pi/2."""
    (c0, b0), (c1, b1) = rebase_coefficients(theta)
    axis = _AXIS[photon]
    comp = np.moveaxis(psi, axis, 0)
    along = c0 * comp[0] + c1 * comp[1]
    across = b0 * comp[0] + b1 * comp[1]
    passed = np.moveaxis(np.einsum("i,jk->ijk", _ket(theta), along), 0, axis)
    blocked = np.moveaxis(np.einsum("i,jk->ijk", _ket(float(theta) + math.pi / 2), across), 0, axis)
    return passed, blocked


def collapse_at_polarizer(state: TriphotonState, photon: str, theta_p) -> CollapseBranch:
    """Projective measurement of one photon by an ideal polarizer tuned to ``theta_p``."""
    if photon not in _AXIS:
        raise ValueError(f"photon must be one of {PHOTONS}, got {photon!r}")
    if photon in state.measured:
        raise ValueError(f"photon {photon} has already been measured")
    norm2 = state.norm2
    if not norm2 > 0:
        raise ValueError("cannot collapse a zero-norm state")
    passed, blocked = _project(state.amplitudes, photon, theta_p)
    p_pass = float(np.vdot(passed, passed).real) / norm2
    p_pass = min(max(p_pass, 0.0), 1.0)
    measured = state.measured | {photon}
    passed_state = blocked_state = None
    if p_pass > ZERO_PROB:
        passed_state = TriphotonState(passed / math.sqrt(p_pass * norm2), measured)
    if p_pass < 1 - ZERO_PROB:
        blocked_state = TriphotonState(blocked / math.sqrt((1 - p_pass) * norm2), measured)
    return CollapseBranch(p_pass, passed_state, 1.0 - p_pass, blocked_state)


def c_ab(theta_a, theta_b) -> float:
    """Probability that b passes given a passed."""
    ca, sa = math.cos(theta_a), math.sin(theta_a)
    cb, sb = math.cos(theta_b), math.sin(theta_b)
    return ca * ca * cb * cb + sa * sa * sb * sb


def triple_rate_closed(theta_a, theta_b, theta_c) -> float:
    ca, sa = math.cos(theta_a), math.sin(theta_a)
    cb, sb = math.cos(theta_b), math.sin(theta_b)
    cc, sc = math.cos(theta_c), math.sin(theta_c)
    return 0.5 * (ca * cb * sc + sa * sb * cc) ** 2


def triple_rate_cascade(theta_a, theta_b, theta_c, order=("a", "b", "c")) -> float:
    """Product of the three pass probabilities along the collapse chain.

    Orders other than a, b, c are experimental.
    """
    angles = {"a": theta_a, "b": theta_b, "c": theta_c}
    state = ghz_state()
    rate = 1.0
    for photon in order:
        branch = collapse_at_polarizer(state, photon, angles[photon])
        rate *= branch.pass_probability
        if branch.passed_state is None:
            return 0.0
        state = branch.passed_state
    return rate


def triple_rate_collapse(theta_a, theta_b, theta_c) -> float:
    """Triple coincidences per emitted triplet; closed form checked against the cascade."""
    closed = triple_rate_closed(theta_a, theta_b, theta_c)
    chained = triple_rate_cascade(theta_a, theta_b, theta_c)
    if abs(closed - chained) > CASCADE_TOL:
        raise ArithmeticError(f"closed form {closed!r} and cascade {chained!r} disagree")
    return closed


def branch_distribution(theta_a, theta_b, theta_c, order=("a", "b", "c")) -> dict:
    """Probabilities of all eight pass (True) / absorb (False) outcomes.

    Keys are (a, b, c) tuples regardless of the measurement order.
    """
    angles = {"a": theta_a, "b": theta_b, "c": theta_c}
    out = {}
    for outcome in itertools.product((True, False), repeat=3):
        state = ghz_state()
        prob = 1.0
        for photon, passed in zip(order, (outcome[_AXIS[p]] for p in order)):
            branch = collapse_at_polarizer(state, photon, angles[photon])
            prob *= branch.pass_probability if passed else branch.absorbed_probability
            state = branch.passed_state if passed else branch.absorbed_state
            if state is None:
                prob = 0.0
                break
        out[outcome] = prob
    return out


def conjectured_mrf_triple_rate(theta_a, theta_b, theta_c, k=0.5) -> float:
    """Speculative MRF alternative, k cos^2(theta_c - theta_b - theta_a)."""
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    return k * math.cos(theta_c - theta_b - theta_a) ** 2


# ---------------------------------------------------------------------------
# density matrices
# ---------------------------------------------------------------------------


def density(state: TriphotonState) -> np.ndarray:
    v = state.amplitudes.reshape(8)
    return np.outer(v, v.conj())


def collapse_density(rho: np.ndarray, photon: str, theta_b) -> tuple[float, np.ndarray, np.ndarray]:
    """Measurement map on an 8x8 density matrix.

    Returns ``(c_b, rho_pass, rho_block)`` with the two normalized
    post-measurement states; the mixture is ``c_b rho_pass + (1-c_b) rho_block``.
    """
    u = _ket(theta_b)
    proj = np.outer(u, u)
    ops = [np.eye(2)] * 3
    ops[_AXIS[photon]] = proj
    big = np.kron(np.kron(ops[0], ops[1]), ops[2])
    comp = np.eye(8) - big
    tr = float(np.trace(rho).real)
    c_b = float(np.trace(big @ rho @ big).real) / tr
    out = []
    for op, w in ((big, c_b), (comp, 1 - c_b)):
        part = op @ rho @ op
        out.append(part / (w * tr) if w > ZERO_PROB else np.zeros_like(part))
    return c_b, out[0], out[1]


@dataclass
class PolarizerDensity:
    """Single mode inside a polarizer; basis (|0>, |pi/2>, |vacuum>)."""

    matrix: np.ndarray
    g: float = 1.0
    dt: float = 1.0

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.shape != (3, 3):
            raise ValueError(f"expected a 3x3 density matrix, got shape {self.matrix.shape}")
        if not (self.g > 0 and self.dt > 0):
            raise ValueError("g and dt must be positive")
        if not np.allclose(self.matrix, self.matrix.conj().T, atol=1e-12):
            raise ValueError("density matrix is not Hermitian")
        if np.linalg.eigvalsh(self.matrix).min() < -1e-12:
            raise ValueError("density matrix is not positive semidefinite")

    @classmethod
    def photon(cls, theta, g=1.0, dt=1.0) -> PolarizerDensity:
        v = np.array([math.cos(theta), math.sin(theta), 0.0])
        return cls(np.outer(v, v), g, dt)


def annihilator(theta) -> np.ndarray:
    """a(theta) on the single-photon-or-vacuum space: |vac><theta|."""
    a = np.zeros((3, 3), dtype=complex)
    a[2, 0] = math.cos(theta)
    a[2, 1] = math.sin(theta)
    return a


def master_equation_exact(rho: PolarizerDensity, theta_p) -> np.ndarray:
    a = annihilator(float(theta_p) + math.pi / 2)
    m = rho.matrix
    return m + rho.g * rho.dt * (a @ m @ a.conj().T)


def master_equation_step(rho: PolarizerDensity, theta_p) -> PolarizerDensity:
    """Evolve d(rho)/dt = g a rho a^dagger for ``rho.dt``, a absorbing theta_p + pi/2.

    Integrated through the exponential of the vectorized generator.
    """
    a = annihilator(float(theta_p) + math.pi / 2)
    # column-stacking: vec(A X B) = (B^T kron A) vec(X)
    generator = rho.g * np.kron(a.conj(), a)
    vec = rho.matrix.reshape(-1, order="F")
    out = (expm(generator * rho.dt) @ vec).reshape(3, 3, order="F")
    out = 0.5 * (out + out.conj().T)
    return PolarizerDensity(out, rho.g, rho.dt)
