import numpy as np
import pytest

from bellmrf.kqed import (
    absorption_probability,
    apply_polarizers,
    coincidence_rate_kqed,
    initial_biphoton,
    outcome_probabilities,
    projector,
    rotation,
    square_norm,
)

PI = np.pi
rng = np.random.default_rng(20240611)
RANDOM_ANGLES = rng.uniform(-PI, 2 * PI, size=(120, 2))


def test_rotation_examples():
    np.testing.assert_allclose(rotation(0.0), np.eye(2))
    np.testing.assert_allclose(rotation(PI / 2), [[0, 1], [-1, 0]], atol=1e-15)
    for a, b in RANDOM_ANGLES[:20]:
        np.testing.assert_allclose(rotation(a) @ rotation(b), rotation(a + b), atol=1e-12)
        np.testing.assert_allclose(rotation(a) @ rotation(a).T, np.eye(2), atol=1e-12)


def test_projector_examples():
    np.testing.assert_allclose(projector(0.0), [[1, 0], [0, 0]])
    np.testing.assert_allclose(projector(PI / 4), [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)
    for t in RANDOM_ANGLES[:, 0]:
        m = projector(t)
        np.testing.assert_allclose(m @ m, m, atol=1e-12)
        np.testing.assert_allclose(m, m.T)
        assert np.trace(m) == pytest.approx(1.0)
        np.testing.assert_allclose(m + projector(t + PI / 2), np.eye(2), atol=1e-12)
        np.testing.assert_allclose(m @ projector(t + PI / 2), np.zeros((2, 2)), atol=1e-12)


def test_initial_state():
    psi = initial_biphoton()
    assert square_norm(psi) == pytest.approx(1.0)
    assert psi[0, 1] == 0 and psi[1, 0] == 0
    assert psi[0, 0] == pytest.approx(2**-0.5)


def test_apply_polarizers_examples():
    out = apply_polarizers(initial_biphoton(), 0.0, 0.0)
    np.testing.assert_allclose(out, [[2**-0.5, 0], [0, 0]], atol=1e-15)
    assert square_norm(apply_polarizers(initial_biphoton(), 0.3, 0.3 + PI / 2)) == pytest.approx(0.0, abs=1e-30)
    once = apply_polarizers(initial_biphoton(), 0.4, 1.1)
    np.testing.assert_allclose(apply_polarizers(once, 0.4, 1.1), once, atol=1e-15)


def test_klyshko_amplitude():
    for a, b in RANDOM_ANGLES[:20]:
        np.testing.assert_allclose(
            apply_polarizers(initial_biphoton(), a, b), 2**-0.5 * projector(a) @ projector(b), atol=1e-15
        )


def test_rate_examples():
    assert coincidence_rate_kqed(0.0, 0.0) == pytest.approx(0.5)
    assert coincidence_rate_kqed(0.0, PI / 2) == pytest.approx(0.0, abs=1e-15)
    assert coincidence_rate_kqed(0.2, 0.2 + PI / 3) == pytest.approx(0.125)


def test_rate_closed_forms():
    for phi in np.linspace(0, PI, 1000):
        assert abs(0.5 * np.cos(phi) ** 2 - 0.25 * (1 + np.cos(2 * phi))) <= 1e-15
    for a, b in RANDOM_ANGLES:
        assert abs(coincidence_rate_kqed(a, b) - 0.5 * np.cos(a - b) ** 2) <= 1e-12


def test_norm_never_increases():
    psi = initial_biphoton()
    for a, b in RANDOM_ANGLES[:30]:
        nxt = apply_polarizers(psi, a, b)
        assert square_norm(nxt) <= square_norm(psi) + 1e-15
        psi = nxt


def test_absorption_probability():
    assert absorption_probability(0.7, 0.7) == 0.0
    assert absorption_probability(0.7 + PI / 2, 0.7) == pytest.approx(1.0)
    assert absorption_probability(PI / 6, 0.0) == pytest.approx(0.25)


def test_outcomes_partition_unity():
    for a, b in RANDOM_ANGLES[:30]:
        p = outcome_probabilities(a, b)
        assert sum(p.values()) == pytest.approx(1.0, abs=1e-12)
        assert p["pass_pass"] == pytest.approx(coincidence_rate_kqed(a, b))
        assert p["absorb_absorb"] == pytest.approx(p["pass_pass"])
