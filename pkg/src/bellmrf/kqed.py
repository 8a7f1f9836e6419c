"""Copenhagen reference calculation for the biphoton circuit.

The two-photon wave function is the 2x2 matrix ``psi[i, j] = Psi(i, j)`` over
x/y polarization components; the left operator acts on the row index, the
right operator on the column index.
"""

import numpy as np


def rotation(phi):
    """O(2) rotation acting on a polarization vector."""
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, s], [-s, c]])


def projector(theta):
    """Ideal polarizer passing polarization ``theta``: u u^T with u = (cos, sin)."""
    u = np.array([np.cos(float(theta)), np.sin(float(theta))])
    return np.outer(u, u)


def initial_biphoton():
    return np.eye(2, dtype=complex) / np.sqrt(2.0)


def square_norm(psi):
    return float(np.real(np.trace(psi @ psi.conj().T)))


def apply_polarizers(psi, theta_a, theta_b):
    return projector(theta_a) @ psi @ projector(theta_b)


def coincidence_rate_kqed(theta_a, theta_b):
    """Coincidences per emitted pair, Tr(psi+ psi+^H)."""
    return square_norm(apply_polarizers(initial_biphoton(), theta_a, theta_b))


def absorption_probability(theta_in, theta_tune):
    return float(np.sin(float(theta_in) - float(theta_tune)) ** 2)


def outcome_probabilities(theta_a, theta_b):
    """Probabilities of the four pass/absorb outcomes of the two polarizers.

    Keys are ``"<left>_<right>"`` with each side ``pass`` or ``absorb``.
    """
    psi0 = initial_biphoton()
    eye = np.eye(2)
    ops = {"pass": (projector(theta_a), projector(theta_b))}
    ops["absorb"] = (eye - ops["pass"][0], eye - ops["pass"][1])
    out = {}
    for left in ("pass", "absorb"):
        for right in ("pass", "absorb"):
            out[f"{left}_{right}"] = square_norm(ops[left][0] @ psi0 @ ops[right][1])
    return out
