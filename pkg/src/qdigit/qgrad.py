"""Exact gradients through the variational circuit.

Two routes:

* ``grad_params_parameter_shift`` — the textbook shift identity
  dE/dtheta = [E(theta + pi/2) - E(theta - pi/2)] / 2, evaluated by full
  re-simulation per angle. Slow; kept as the independent oracle.
* ``grad_adjoint`` — one forward pass plus one reverse sweep that yields
  every angle gradient and the gradient with respect to the raw
  (pre-normalization) embedding input. Production path.

The weighted observable sum is folded into a single diagonal before the
sweep, so the backward cost does not depend on the observable count.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .qsim import (
    EMBED_EPS,
    CircuitParams,
    cnot_kernel,
    embed_batch,
    expectations_batch,
    layer_kernel,
    n_observables,
    ry_kernel,
    rz_kernel,
    run_circuit,
    _canonical_sign_matrix,
)


@dataclass
class QuantumGradients:
    d_thetas: np.ndarray            # [depth, n_qubits]
    d_phis: np.ndarray              # [depth, n_qubits]
    d_input: np.ndarray | None      # [2^n] w.r.t. the pre-normalization input


def _weighted_expectation(v: np.ndarray, params: CircuitParams,
                          obs_weights: np.ndarray) -> float:
    state = run_circuit(v, params)
    return float(expectations_batch(state.amps, state.n_qubits) @ obs_weights)


def grad_params_parameter_shift(v: np.ndarray, params: CircuitParams,
                                obs_weights: np.ndarray) -> QuantumGradients:
    """Angle gradients of E = sum_k w_k <O_k> by the shift rule. Oracle only."""
    obs_weights = np.asarray(obs_weights, dtype=np.float64)
    if obs_weights.shape != (n_observables(params.n_qubits),):
        raise ValueError("observable weight vector has wrong length")
    d_thetas = np.zeros_like(params.thetas)
    d_phis = np.zeros_like(params.phis)
    for which, out in (("thetas", d_thetas), ("phis", d_phis)):
        base = getattr(params, which)
        for idx in np.ndindex(base.shape):
            shifted = base.copy()
            shifted[idx] = base[idx] + math.pi / 2
            plus = _weighted_expectation(
                v, _with(params, which, shifted), obs_weights)
            shifted[idx] = base[idx] - math.pi / 2
            minus = _weighted_expectation(
                v, _with(params, which, shifted), obs_weights)
            out[idx] = 0.5 * (plus - minus)
    return QuantumGradients(d_thetas, d_phis, None)


def _with(params: CircuitParams, which: str, arr: np.ndarray) -> CircuitParams:
    if which == "thetas":
        return CircuitParams(arr, params.phis)
    return CircuitParams(params.thetas, arr)


def embed_input_jacobian_vjp(v: np.ndarray, d_embedded: np.ndarray,
                             epsilon: float = EMBED_EPS) -> np.ndarray:
    """Pull a gradient w.r.t. the embedded amplitudes back to the raw input.

    Uses the exact Jacobian of v -> v / (||v|| + eps):
    d a_i / d v_j = delta_ij / s - v_i v_j / (||v|| s^2), s = ||v|| + eps.
    Works on batched rows (last axis is the vector dimension).
    """
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    s = norms + epsilon
    radial = np.sum(v * d_embedded, axis=-1, keepdims=True)
    return d_embedded / s - v * radial / (norms * s * s)


def adjoint_sweep(embedded: np.ndarray, params: CircuitParams,
                  diag_eff: np.ndarray):
    """Reverse sweep over batched states.

    Args:
        embedded: [B, 2^n] complex unit-norm embedded states.
        params: shared circuit angles.
        diag_eff: [B, 2^n] real diagonal of the per-sample weighted observable.

    Returns:
        (d_thetas, d_phis, d_embedded): per-angle gradients of shape
        [B, depth, n_qubits] and the [B, 2^n] real gradient w.r.t. the
        embedded amplitudes.
    """
    n = params.n_qubits
    batch = embedded.shape[0]
    psi = np.ascontiguousarray(embedded, dtype=np.complex128).copy()
    for layer in range(params.depth):
        layer_kernel(psi, n, params.thetas[layer], params.phis[layer])

    lam = np.ascontiguousarray(diag_eff * psi)
    b = psi  # reuse: b walks backwards through the circuit
    d_thetas = np.zeros((batch, params.depth, n))
    d_phis = np.zeros((batch, params.depth, n))

    for layer in reversed(range(params.depth)):
        if n > 1:
            for q in reversed(range(n)):
                ctrl, tgt = q, (q + 1) % n
                cnot_kernel(b, n, ctrl, tgt)
                cnot_kernel(lam, n, ctrl, tgt)
        for q in reversed(range(n)):
            phi = params.phis[layer, q]
            rz_kernel(b, n, q, -phi)
            shifted = rz_kernel(b.copy(), n, q, phi + math.pi)
            d_phis[:, layer, q] = np.real(np.sum(np.conj(lam) * shifted, axis=-1))
            rz_kernel(lam, n, q, -phi)

            theta = params.thetas[layer, q]
            ry_kernel(b, n, q, -theta)
            shifted = ry_kernel(b.copy(), n, q, theta + math.pi)
            d_thetas[:, layer, q] = np.real(np.sum(np.conj(lam) * shifted, axis=-1))
            ry_kernel(lam, n, q, -theta)

    # E = a^T Re(U^dag O U) a for real embedded a, so dE/da = 2 Re(lambda)
    d_embedded = 2.0 * np.real(lam)
    return d_thetas, d_phis, d_embedded


def circuit_backward_batch(v: np.ndarray, params: CircuitParams,
                           d_expectations: np.ndarray,
                           epsilon: float = EMBED_EPS):
    """Batched adjoint backward for the full embed -> circuit -> measure map.

    Args:
        v: [B, 2^n] raw (pre-normalization) input rows.
        d_expectations: [B, n_obs] upstream gradient w.r.t. the canonical
            observable vector.

    Returns:
        (d_thetas, d_phis, d_v): angle gradients summed over the batch
        (shapes mirror `params`) and the per-row input gradient [B, 2^n].
    """
    v = np.asarray(v, dtype=np.float64)
    signs = _canonical_sign_matrix(params.n_qubits)
    diag_eff = d_expectations @ signs.T
    embedded = embed_batch(v, epsilon)
    d_th, d_ph, d_embedded = adjoint_sweep(embedded, params, diag_eff)
    d_v = embed_input_jacobian_vjp(v, d_embedded, epsilon)
    return d_th.sum(axis=0), d_ph.sum(axis=0), d_v


def grad_adjoint(v: np.ndarray, params: CircuitParams,
                 obs_weights: np.ndarray,
                 epsilon: float = EMBED_EPS) -> QuantumGradients:
    """All angle gradients plus the input gradient in one reverse sweep."""
    v = np.asarray(v, dtype=np.float64)
    obs_weights = np.asarray(obs_weights, dtype=np.float64)
    if obs_weights.shape != (n_observables(params.n_qubits),):
        raise ValueError("observable weight vector has wrong length")
    d_th, d_ph, d_v = circuit_backward_batch(
        v[None, :], params, obs_weights[None, :], epsilon)
    return QuantumGradients(d_th, d_ph, d_v[0])
