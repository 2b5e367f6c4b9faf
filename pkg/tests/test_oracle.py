import numpy as np
import pytest

from ifqaoa import oracle
from ifqaoa.engine import QaoaParams
from ifqaoa.theta import projection_factor, theta_direct


def register_distribution(g, M):
    """Ancilla distribution after phase estimation on a single basis state."""
    state = oracle.full_state(np.array([1.0 + 0j]), M)
    oracle.qpe_forward(state, [g])
    return np.abs(state.amplitudes[:, 0]) ** 2


@pytest.mark.parametrize("g", [-4, -1, 0, 3])
def test_integer_value_written_in_twos_complement(g):
    M = 3
    dist = register_distribution(g, M)
    expected = np.zeros(8)
    expected[g % 8] = 1.0
    np.testing.assert_allclose(dist, expected, atol=1e-12)


def test_zero_constraint_keeps_register_clear():
    state = oracle.full_state(np.full(4, 0.5 + 0j), 3)
    oracle.qpe_forward(state, np.zeros(4))
    np.testing.assert_allclose(np.abs(state.amplitudes[0]), 0.5, atol=1e-12)
    assert np.allclose(state.amplitudes[1:], 0)


@pytest.mark.parametrize("g", [0.3, -2.75, 5.5])
def test_non_integer_distribution(g):
    M = 4
    K = 1 << M
    k = np.arange(K)
    z = np.arange(K)
    expected = np.abs(np.exp(2j * np.pi * np.outer(g - z, k) / K).sum(axis=1) / K) ** 2
    np.testing.assert_allclose(register_distribution(g, M), expected, atol=1e-12)


def test_qpe_inverse_undoes_forward():
    rng = np.random.default_rng(0)
    main = rng.normal(size=4) + 1j * rng.normal(size=4)
    main /= np.linalg.norm(main)
    state = oracle.full_state(main, 3)
    g = rng.uniform(-4, 3, 4)
    oracle.qpe_forward(state, g)
    oracle.qpe_inverse(state, g)
    np.testing.assert_allclose(state.amplitudes[0], main, atol=1e-12)


def test_controlled_cost_branches():
    # N = 2, M = 3: g = (2, -1, 0, -3) feasible for x = 0 and x = 2
    f = np.array([-1.0, -2.0, -3.0, -4.0])
    g = np.array([2, -1, 0, -3])
    state = oracle.full_state(np.full(4, 0.5 + 0j), 3)
    oracle.qpe_forward(state, g)
    oracle.controlled_cost(state, f, 0.7)
    for x in range(4):
        z = g[x] % 8
        expected = 0.5 * (np.exp(-0.7j * f[x]) if g[x] >= 0 else 1.0)
        assert state.amplitudes[z, x] == pytest.approx(expected, abs=1e-12)


def test_controlled_cost_identity_and_all_feasible():
    f = np.array([-1.0, -2.0])
    state = oracle.full_state(np.array([0.6, 0.8 + 0j]), 2)
    before = state.amplitudes.copy()
    oracle.controlled_cost(state, f, 0.0)
    np.testing.assert_array_equal(state.amplitudes, before)
    oracle.controlled_cost(state, f, 0.5)
    np.testing.assert_allclose(state.amplitudes[0], before[0] * np.exp(-0.5j * f))


def test_measurement_probabilities():
    main = np.full(4, 0.5 + 0j)
    out, prob = oracle.oracle_layer(main, np.array([-1.0, -2.0, -3.0, -4.0]), [np.array([2, -1, 0, -3])], (3,), 1.3)
    assert prob == pytest.approx(1.0)
    _, prob = oracle.oracle_layer(main, np.zeros(4), [np.array([0.5, -0.5, 1.5, -2.5])], (3,), 0.0)
    assert prob == pytest.approx(1.0)
    single = np.array([1.0 + 0j])
    _, prob = oracle.oracle_layer(single, np.array([-2.0]), [np.array([-0.3])], (4,), 0.9)
    assert prob == pytest.approx(abs(projection_factor(-1.8, theta_direct(-0.3, 4))) ** 2, abs=1e-12)


def test_vanishing_branch_raises():
    state = oracle.full_state(np.array([1.0 + 0j]), 2)
    state.amplitudes[0] = 0
    with pytest.raises(RuntimeError):
        oracle.measure_ancilla_zero(state)


def test_full_circuit_trivial_angles():
    main, probs = oracle.full_layer_oracle(np.array([-1.0, -2.0, -3.0, 0.0]), np.array([1, 0, -1, 2]), QaoaParams([0.0], [0.0]), 3)
    np.testing.assert_allclose(main, 0.5)
    assert probs == [pytest.approx(1.0)]


def test_qubit_cap():
    with pytest.raises(ValueError):
        oracle.full_state(np.ones(1 << 10), 5)
