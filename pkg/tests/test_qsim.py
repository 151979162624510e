import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdigit import qsim

import oracles


def random_state(n, rng):
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return qsim.Statevector(n, amps / np.linalg.norm(amps))


class TestAmplitudeEmbed:
    def test_basis_vector(self):
        v = np.zeros(1024)
        v[0] = 1.0
        state = qsim.amplitude_embed(v)
        assert state.n_qubits == 10
        exp = qsim.expectations(state)
        np.testing.assert_allclose(exp[:10], 1.0, atol=1e-12)

    def test_uniform_vector_any_scale(self):
        for scale in (1.0, 37.5):
            state = qsim.amplitude_embed(np.full(4, scale))
            np.testing.assert_allclose(np.abs(state.amps), 0.5, atol=1e-12)
            np.testing.assert_allclose(qsim.expectations(state), 0.0, atol=1e-12)

    def test_eps_division_formula(self):
        # before the exact renorm, the embed divides by (||v|| + 1e-8)
        rng = np.random.default_rng(5)
        v = rng.normal(size=16)
        norm = np.linalg.norm(v)
        raw = v / (norm + 1e-8)
        expected_norm = norm / (norm + 1e-8)
        assert np.isclose(np.linalg.norm(raw), expected_norm, atol=1e-14)
        # final state is the same direction, renormalized to exactly 1
        state = qsim.amplitude_embed(v)
        np.testing.assert_allclose(state.amps.real, raw / np.linalg.norm(raw),
                                   atol=1e-12)
        assert abs(state.norm() - 1.0) < 1e-12

    def test_bad_length(self):
        with pytest.raises(ValueError):
            qsim.amplitude_embed(np.ones(5))

    def test_all_zero(self):
        with pytest.raises(ValueError):
            qsim.amplitude_embed(np.zeros(8))


class TestGates:
    def test_ry_zero_is_identity(self):
        rng = np.random.default_rng(0)
        state = random_state(3, rng)
        before = state.amps.copy()
        qsim.apply_ry(state, 1, 0.0)
        np.testing.assert_allclose(state.amps, before, atol=1e-15)

    def test_ry_pi_flips_zero_state(self):
        state = qsim.Statevector.zero_state(1)
        qsim.apply_ry(state, 0, np.pi)
        np.testing.assert_allclose(state.amps, [0.0, 1.0], atol=1e-12)
        assert qsim.expectations(state)[0] == pytest.approx(-1.0)

    def test_ry_matches_dense(self):
        rng = np.random.default_rng(1)
        state = random_state(3, rng)
        dense = oracles.single_qubit_op(oracles.ry_matrix(0.7), 3, 1) @ state.amps
        qsim.apply_ry(state, 1, 0.7)
        np.testing.assert_allclose(state.amps, dense, atol=1e-12)

    def test_rz_zero_is_identity(self):
        rng = np.random.default_rng(2)
        state = random_state(2, rng)
        before = state.amps.copy()
        qsim.apply_rz(state, 0, 0.0)
        np.testing.assert_allclose(state.amps, before, atol=1e-15)

    def test_rz_invisible_to_z_observables_on_basis_state(self):
        state = qsim.Statevector.zero_state(3)
        before = qsim.expectations(state).copy()
        for q in range(3):
            qsim.apply_rz(state, q, 1.1 + q)
        np.testing.assert_allclose(qsim.expectations(state), before, atol=1e-12)

    def test_rz_matches_dense(self):
        rng = np.random.default_rng(3)
        state = random_state(2, rng)
        dense = oracles.single_qubit_op(oracles.rz_matrix(1.3), 2, 1) @ state.amps
        qsim.apply_rz(state, 1, 1.3)
        np.testing.assert_allclose(state.amps, dense, atol=1e-12)

    def test_cnot_basis_states(self):
        # |10> -> |11>  (qubit 0 is the MSB)
        state = qsim.Statevector(2, np.array([0, 0, 1, 0], dtype=complex))
        qsim.apply_cnot(state, 0, 1)
        np.testing.assert_allclose(state.amps, [0, 0, 0, 1], atol=1e-15)
        state = qsim.Statevector.zero_state(2)
        qsim.apply_cnot(state, 0, 1)
        np.testing.assert_allclose(state.amps, [1, 0, 0, 0], atol=1e-15)

    def test_cnot_ring_matches_dense(self):
        rng = np.random.default_rng(4)
        state = random_state(4, rng)
        dense = state.amps.copy()
        for q in range(4):
            dense = oracles.cnot_matrix(4, q, (q + 1) % 4) @ dense
            qsim.apply_cnot(state, q, (q + 1) % 4)
        np.testing.assert_allclose(state.amps, dense, atol=1e-12)

    def test_cnot_control_equals_target(self):
        state = qsim.Statevector.zero_state(2)
        with pytest.raises(ValueError):
            qsim.apply_cnot(state, 1, 1)

    def test_qubit_out_of_range(self):
        state = qsim.Statevector.zero_state(2)
        with pytest.raises(IndexError):
            qsim.apply_ry(state, 2, 0.1)


class TestLayer:
    def test_zero_angles_reduce_to_cnot_ring(self):
        rng = np.random.default_rng(6)
        state = random_state(3, rng)
        ref = qsim.Statevector(3, state.amps.copy())
        params = qsim.CircuitParams(np.zeros((1, 3)), np.zeros((1, 3)))
        qsim.apply_layer(state, params, 0)
        for q in range(3):
            qsim.apply_cnot(ref, q, (q + 1) % 3)
        np.testing.assert_allclose(state.amps, ref.amps, atol=1e-14)

    def test_depth1_n2_matches_dense(self):
        rng = np.random.default_rng(7)
        params = qsim.CircuitParams(rng.normal(size=(1, 2)), rng.normal(size=(1, 2)))
        state = random_state(2, rng)
        dense = oracles.layer_matrix(2, params.thetas[0], params.phis[0]) @ state.amps
        qsim.apply_layer(state, params, 0)
        np.testing.assert_allclose(state.amps, dense, atol=1e-12)

    def test_double_zero_angle_layer_n2_against_oracle(self):
        # the n=2 ring is CNOT(0,1), CNOT(1,0); its square is checked, not assumed
        rng = np.random.default_rng(8)
        state = random_state(2, rng)
        dense_layer = oracles.layer_matrix(2, np.zeros(2), np.zeros(2))
        expected = dense_layer @ dense_layer @ state.amps
        params = qsim.CircuitParams(np.zeros((2, 2)), np.zeros((2, 2)))
        qsim.apply_layer(state, params, 0)
        qsim.apply_layer(state, params, 1)
        np.testing.assert_allclose(state.amps, expected, atol=1e-14)

    def test_layer_out_of_range(self):
        params = qsim.CircuitParams(np.zeros((2, 2)), np.zeros((2, 2)))
        with pytest.raises(IndexError):
            qsim.apply_layer(qsim.Statevector.zero_state(2), params, 2)


class TestRunCircuit:
    def test_depth_zero_returns_embedded_state(self):
        v = np.random.default_rng(9).normal(size=8)
        params = qsim.CircuitParams(np.zeros((0, 3)), np.zeros((0, 3)))
        state = qsim.run_circuit(v, params)
        np.testing.assert_allclose(state.amps, qsim.amplitude_embed(v).amps)

    def test_optimal_config_consumes_100_angles(self):
        rng = np.random.default_rng(10)
        params = qsim.CircuitParams.random(5, 10, rng)
        assert params.n_params == 100
        state = qsim.run_circuit(rng.normal(size=1024), params)
        assert abs(state.norm() - 1.0) < 1e-10

    def test_n3_d2_matches_dense_product(self):
        rng = np.random.default_rng(11)
        params = qsim.CircuitParams.random(2, 3, rng)
        v = rng.normal(size=8)
        state = qsim.run_circuit(v, params)
        expected = oracles.circuit_matrix(3, params) @ qsim.amplitude_embed(v).amps
        np.testing.assert_allclose(state.amps, expected, atol=1e-12)


class TestExpectations:
    def test_basis_state_parities(self):
        # |01>: qubit 0 (MSB) = 0, qubit 1 = 1
        state = qsim.Statevector(2, np.array([0, 1, 0, 0], dtype=complex))
        z0, z1, z0z1 = qsim.expectations(state)
        assert (z0, z1, z0z1) == (1.0, -1.0, -1.0)

    def test_uniform_superposition_all_zero(self):
        state = qsim.Statevector(2, np.full(4, 0.5, dtype=complex))
        np.testing.assert_allclose(qsim.expectations(state), 0.0, atol=1e-14)

    def test_random_state_matches_trace_oracle(self):
        rng = np.random.default_rng(12)
        state = random_state(4, rng)
        got = qsim.expectations(state)
        obs = qsim.ObservableSet.canonical(4)
        k = 0
        for q in obs.singles:
            ref = oracles.expectation_trace(state.amps, oracles.z_diag(4, q))
            assert got[k] == pytest.approx(ref, abs=1e-12)
            k += 1
        for i, j in obs.pairs:
            diag = oracles.z_diag(4, i) * oracles.z_diag(4, j)
            ref = oracles.expectation_trace(state.amps, diag)
            assert got[k] == pytest.approx(ref, abs=1e-12)
            k += 1

    def test_canonical_ordering_and_sizes(self):
        obs = qsim.ObservableSet.canonical(10)
        assert len(obs.singles) == 10
        assert len(obs.pairs) == 45
        assert obs.pairs[0] == (0, 1)
        assert obs.pairs[1] == (0, 2)
        assert obs.pairs[-1] == (8, 9)
        assert obs.pairs == sorted(obs.pairs)
        assert qsim.n_observables(10) == 55

    def test_ordering_reproducible(self):
        rng = np.random.default_rng(13)
        state = random_state(4, rng)
        a = qsim.expectations(state)
        b = qsim.expectations(qsim.Statevector(4, state.amps.copy()))
        assert a.tobytes() == b.tobytes()


class TestInvariants:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 4), st.integers(1, 3), st.integers(0, 10_000))
    def test_norm_preserved_and_unitarity(self, n, depth, seed):
        rng = np.random.default_rng(seed)
        params = qsim.CircuitParams.random(depth, n, rng)
        v = rng.normal(size=1 << n)
        state = qsim.run_circuit(v, params)
        assert abs(np.sum(np.abs(state.amps) ** 2) - 1.0) <= 1e-10
        expected = oracles.circuit_matrix(n, params) @ qsim.amplitude_embed(v).amps
        np.testing.assert_allclose(state.amps, expected, atol=1e-10)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(2, 5), st.integers(0, 10_000))
    def test_expectation_bounds(self, n, seed):
        rng = np.random.default_rng(seed)
        state = random_state(n, rng)
        exp = qsim.expectations(state)
        assert np.all(exp >= -1.0 - 1e-12)
        assert np.all(exp <= 1.0 + 1e-12)
