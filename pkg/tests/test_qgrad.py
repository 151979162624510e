import numpy as np
import pytest

from qdigit import qgrad, qsim


def weighted_energy(v, params, w):
    state = qsim.run_circuit(v, params)
    return float(qsim.expectations_batch(state.amps, state.n_qubits) @ w)


def finite_diff(v, params, w, h=1e-4):
    """Central differences through the full embed -> circuit -> measure map."""
    d_thetas = np.zeros_like(params.thetas)
    d_phis = np.zeros_like(params.phis)
    for arr, out in ((params.thetas, d_thetas), (params.phis, d_phis)):
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + h
            plus = weighted_energy(v, params, w)
            arr[idx] = orig - h
            minus = weighted_energy(v, params, w)
            arr[idx] = orig
            out[idx] = (plus - minus) / (2 * h)
    d_input = np.zeros_like(v)
    for i in range(v.size):
        orig = v[i]
        v[i] = orig + h
        plus = weighted_energy(v, params, w)
        v[i] = orig - h
        minus = weighted_energy(v, params, w)
        v[i] = orig
        d_input[i] = (plus - minus) / (2 * h)
    return d_thetas, d_phis, d_input


def random_instance(rng, n_max=4, d_max=3):
    n = int(rng.integers(2, n_max + 1))
    d = int(rng.integers(1, d_max + 1))
    params = qsim.CircuitParams.random(d, n, rng)
    v = rng.normal(size=1 << n)
    w = rng.normal(size=qsim.n_observables(n))
    return v, params, w


class TestParameterShift:
    def test_zero_weights_zero_gradient(self):
        rng = np.random.default_rng(0)
        params = qsim.CircuitParams.random(2, 3, rng)
        g = qgrad.grad_params_parameter_shift(
            rng.normal(size=8), params, np.zeros(qsim.n_observables(3)))
        assert not g.d_thetas.any()
        assert not g.d_phis.any()

    def test_single_ry_closed_form(self):
        # RY(theta) on |0>, observable Z: E = cos(theta), dE/dtheta = -sin(theta)
        for theta in (0.3, np.pi / 2, 2.1):
            params = qsim.CircuitParams(np.array([[theta]]), np.zeros((1, 1)))
            g = qgrad.grad_params_parameter_shift(
                np.array([1.0, 0.0]), params, np.array([1.0]))
            assert g.d_thetas[0, 0] == pytest.approx(-np.sin(theta), abs=1e-12)
        # at theta = pi/2 the gradient is exactly -1
        params = qsim.CircuitParams(np.array([[np.pi / 2]]), np.zeros((1, 1)))
        g = qgrad.grad_params_parameter_shift(
            np.array([1.0, 0.0]), params, np.array([1.0]))
        assert g.d_thetas[0, 0] == pytest.approx(-1.0, abs=1e-12)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        v, params, w = random_instance(rng, n_max=3, d_max=2)
        ps = qgrad.grad_params_parameter_shift(v, params, w)
        fd_th, fd_ph, _ = finite_diff(v.copy(), params, w)
        np.testing.assert_allclose(ps.d_thetas, fd_th, atol=1e-5)
        np.testing.assert_allclose(ps.d_phis, fd_ph, atol=1e-5)

    def test_weight_shape_check(self):
        params = qsim.CircuitParams.random(1, 2, np.random.default_rng(0))
        with pytest.raises(ValueError):
            qgrad.grad_params_parameter_shift(np.ones(4), params, np.ones(5))


class TestAdjoint:
    def test_agrees_with_parameter_shift_20_instances(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            v, params, w = random_instance(rng)
            ps = qgrad.grad_params_parameter_shift(v, params, w)
            adj = qgrad.grad_adjoint(v, params, w)
            np.testing.assert_allclose(adj.d_thetas, ps.d_thetas, atol=1e-9)
            np.testing.assert_allclose(adj.d_phis, ps.d_phis, atol=1e-9)

    def test_input_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            v, params, w = random_instance(rng, n_max=3, d_max=2)
            adj = qgrad.grad_adjoint(v, params, w)
            _, _, fd_in = finite_diff(v.copy(), params, w)
            np.testing.assert_allclose(adj.d_input, fd_in, atol=1e-5)

    def test_input_gradient_radial_direction_vanishes(self):
        # the normalized embed is scale invariant up to eps, so d_input _|_ v
        rng = np.random.default_rng(4)
        for _ in range(5):
            v, params, w = random_instance(rng)
            adj = qgrad.grad_adjoint(v, params, w)
            radial = abs(float(adj.d_input @ v)) / np.linalg.norm(v)
            assert radial <= 1e-6 * max(np.linalg.norm(adj.d_input), 1e-30)

    def test_basis_vector_zero_angle_directional_derivative(self):
        # perturbing v along itself only rescales; the embed absorbs it
        v = np.zeros(8)
        v[0] = 1.0
        params = qsim.CircuitParams(np.zeros((1, 3)), np.zeros((1, 3)))
        w = np.zeros(qsim.n_observables(3))
        w[0] = 1.0  # <Z_0>
        adj = qgrad.grad_adjoint(v, params, w)
        assert abs(adj.d_input @ v) < 1e-7

    def test_linearity_in_weights(self):
        rng = np.random.default_rng(5)
        v, params, _ = random_instance(rng)
        n_obs = qsim.n_observables(params.n_qubits)
        w1, w2 = rng.normal(size=n_obs), rng.normal(size=n_obs)
        g1 = qgrad.grad_adjoint(v, params, w1)
        g2 = qgrad.grad_adjoint(v, params, w2)
        g12 = qgrad.grad_adjoint(v, params, 2.0 * w1 - 3.0 * w2)
        np.testing.assert_allclose(
            g12.d_thetas, 2.0 * g1.d_thetas - 3.0 * g2.d_thetas, atol=1e-10)
        np.testing.assert_allclose(
            g12.d_input, 2.0 * g1.d_input - 3.0 * g2.d_input, atol=1e-10)

    def test_batched_backward_sums_angle_grads(self):
        rng = np.random.default_rng(6)
        n, d = 3, 2
        params = qsim.CircuitParams.random(d, n, rng)
        v = rng.normal(size=(4, 1 << n))
        d_exp = rng.normal(size=(4, qsim.n_observables(n)))
        d_th, d_ph, d_v = qgrad.circuit_backward_batch(v, params, d_exp)
        acc_th = np.zeros_like(params.thetas)
        acc_ph = np.zeros_like(params.phis)
        for b in range(4):
            g = qgrad.grad_adjoint(v[b], params, d_exp[b])
            acc_th += g.d_thetas
            acc_ph += g.d_phis
            np.testing.assert_allclose(d_v[b], g.d_input, atol=1e-12)
        np.testing.assert_allclose(d_th, acc_th, atol=1e-12)
        np.testing.assert_allclose(d_ph, acc_ph, atol=1e-12)
