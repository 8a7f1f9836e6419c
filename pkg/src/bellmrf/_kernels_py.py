"""Pure-Python (numpy) grid tabulation kernels.

Fallback for the compiled ``_kernels`` extension; both must produce
bit-identical tables.  Table axes follow the factor's variable order, with
the detector-side angle axis carrying one extra slot (index ``n``) for "no
photon".  Spin axes are ordered (-1, +1).
"""

import numpy as np


def _trig_tables(n):
    k = np.arange(n) * (np.pi / n)
    c = np.cos(k)
    s = np.sin(k)
    return c * c, s * s


def mrf1_polarizer_table(n, tune, orth, alpha):
    """Transparent-model polarizer over (gamma_src, theta_src, gamma_det, theta_det)."""
    inv = n / np.pi
    cos2, sin2 = _trig_tables(n)
    k = np.arange(n)
    rel = (k - tune) % n
    out = np.zeros((2, n, 2, n + 1))

    same = k[:, None] == k[None, :]
    src_on_tune = (k == tune)[:, None]
    both = np.where(same & src_on_tune, inv * inv, 0.0)
    both += np.where(same, alpha * cos2[rel][:, None] * inv, 0.0)
    both += np.where(src_on_tune, alpha * cos2[rel][None, :] * inv, 0.0)
    out[1, :, 1, :n] = both

    absorb = np.where(k == orth, alpha * inv, 0.0)
    absorb += alpha * alpha * sin2[rel]
    out[1, :, 0, n] = absorb
    out[0, :, 1, :n] = absorb[None, :]
    return out


def mrf2_polarizer_table(n, tune, alpha, projection):
    """Expanded-model polarizer over (gamma_src, theta_src, gamma_det, theta_det, d)."""
    inv = n / np.pi
    cos2, sin2 = _trig_tables(n)
    k = np.arange(n)
    rel = (k - tune) % n
    out = np.zeros((2, n, 2, n + 1, 2))

    fwd = np.broadcast_to(2.0 * cos2[rel][:, None], (n, n)).copy()
    bwd = np.broadcast_to(2.0 * cos2[rel][None, :], (n, n)).copy()
    if projection:
        fwd = np.where((k == tune)[None, :], fwd * inv, 0.0)
        bwd = np.where((k == tune)[:, None], bwd * inv, 0.0)
    out[1, :, 1, :n, 1] = fwd
    out[1, :, 1, :n, 0] = bwd
    out[1, :, 0, n, 1] = 2.0 * alpha * sin2[rel]
    out[0, :, 1, :n, 0] = (2.0 * alpha * sin2[rel])[None, :]
    return out
