"""Statevector simulator for the variational circuit.

Qubit 0 is the MOST significant bit of the basis-state index, so basis
state |i> of an n-qubit register corresponds to the bit string of i read
qubit-0-first. All kernels mutate the amplitude buffer in place with
stride-based pair indexing; dense matrices exist only in the test oracle.

The kernel functions (`ry_kernel` etc.) accept amplitude arrays with an
arbitrary number of leading batch axes; the statevector dimension is
always the last axis. The `Statevector` wrapper owns a single 1-D buffer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np

EMBED_EPS = 1e-8


@dataclass
class Statevector:
    """Complex amplitudes of an n-qubit pure state."""

    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.ascontiguousarray(self.amps, dtype=np.complex128)
        if self.amps.shape != (1 << self.n_qubits,):
            raise ValueError(
                f"amplitude buffer has shape {self.amps.shape}, "
                f"expected ({1 << self.n_qubits},)"
            )

    @classmethod
    def zero_state(cls, n_qubits: int) -> "Statevector":
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2


@dataclass
class CircuitParams:
    """Rotation angles for the layered circuit: one RY and one RZ per qubit per layer."""

    thetas: np.ndarray  # [depth, n_qubits], RY angles
    phis: np.ndarray    # [depth, n_qubits], RZ angles

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=np.float64)
        self.phis = np.asarray(self.phis, dtype=np.float64)
        if self.thetas.shape != self.phis.shape or self.thetas.ndim != 2:
            raise ValueError("thetas and phis must share shape [depth, n_qubits]")

    @property
    def depth(self) -> int:
        return self.thetas.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.thetas.shape[1]

    @property
    def n_params(self) -> int:
        return 2 * self.thetas.size

    @classmethod
    def random(cls, depth: int, n_qubits: int, rng: np.random.Generator) -> "CircuitParams":
        # full-period initialization: angles are 2pi/4pi periodic
        thetas = rng.uniform(-math.pi, math.pi, size=(depth, n_qubits))
        phis = rng.uniform(-math.pi, math.pi, size=(depth, n_qubits))
        return cls(thetas, phis)


@dataclass
class ObservableSet:
    """Z and ZZ observables; ordering fixes the measurement vector layout."""

    singles: list = field(default_factory=list)   # qubit indices for <Z_i>
    pairs: list = field(default_factory=list)     # ordered (i, j), i < j, for <Z_i Z_j>

    @classmethod
    def canonical(cls, n_qubits: int) -> "ObservableSet":
        """All n singles plus the n(n-1)/2 lexicographically ordered pairs."""
        singles = list(range(n_qubits))
        pairs = [(i, j) for i in range(n_qubits) for j in range(i + 1, n_qubits)]
        return cls(singles, pairs)

    def __len__(self) -> int:
        return len(self.singles) + len(self.pairs)


def n_observables(n_qubits: int) -> int:
    return n_qubits + n_qubits * (n_qubits - 1) // 2


# ---------------------------------------------------------------------------
# gate kernels (batch-capable, in place on the last axis)

def _check_qubit(n_qubits: int, qubit: int):
    if not 0 <= qubit < n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {n_qubits} qubits")


def ry_kernel(amps: np.ndarray, n_qubits: int, qubit: int, theta: float) -> np.ndarray:
    _check_qubit(n_qubits, qubit)
    half = 0.5 * theta
    c, s = math.cos(half), math.sin(half)
    v = amps.reshape(-1, 1 << qubit, 2, 1 << (n_qubits - qubit - 1))
    a0 = v[:, :, 0, :].copy()
    a1 = v[:, :, 1, :]
    v[:, :, 0, :] = c * a0 - s * a1
    v[:, :, 1, :] = s * a0 + c * a1
    return amps


def rz_kernel(amps: np.ndarray, n_qubits: int, qubit: int, phi: float) -> np.ndarray:
    _check_qubit(n_qubits, qubit)
    half = 0.5 * phi
    v = amps.reshape(-1, 1 << qubit, 2, 1 << (n_qubits - qubit - 1))
    v[:, :, 0, :] *= complex(math.cos(half), -math.sin(half))
    v[:, :, 1, :] *= complex(math.cos(half), math.sin(half))
    return amps


def cnot_kernel(amps: np.ndarray, n_qubits: int, control: int, target: int) -> np.ndarray:
    _check_qubit(n_qubits, control)
    _check_qubit(n_qubits, target)
    if control == target:
        raise ValueError("CNOT control and target must differ")
    a, b = sorted((control, target))
    mid = 1 << (b - a - 1)
    low = 1 << (n_qubits - b - 1)
    v = amps.reshape(-1, 1 << a, 2, mid, 2, low)
    if control < target:
        sub = v[:, :, 1, :, :, :]
        axis = 3
    else:
        sub = v[:, :, :, :, 1, :]
        axis = 2
    sub[...] = sub.take([1, 0], axis=axis)
    return amps


def layer_kernel(amps: np.ndarray, n_qubits: int,
                 thetas: np.ndarray, phis: np.ndarray) -> np.ndarray:
    """One variational layer: RY then RZ on every qubit, then the CNOT ring."""
    for q in range(n_qubits):
        ry_kernel(amps, n_qubits, q, thetas[q])
        rz_kernel(amps, n_qubits, q, phis[q])
    if n_qubits > 1:  # a single qubit has no ring to close
        for q in range(n_qubits):
            cnot_kernel(amps, n_qubits, q, (q + 1) % n_qubits)
    return amps


# ---------------------------------------------------------------------------
# embedding

def embed_batch(v: np.ndarray, epsilon: float = EMBED_EPS) -> np.ndarray:
    """Amplitude-embed rows of `v` (shape [..., 2^n]) into unit statevectors.

    Divides by (||v|| + epsilon) and then renormalizes exactly to unit norm,
    so downstream norm invariants hold to machine precision.
    """
    v = np.asarray(v, dtype=np.float64)
    dim = v.shape[-1]
    if dim & (dim - 1) or dim == 0:
        raise ValueError(f"input length {dim} is not a power of two")
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValueError("cannot amplitude-embed an all-zero vector")
    amps = v / (norms + epsilon)
    amps = amps / np.linalg.norm(amps, axis=-1, keepdims=True)
    return amps.astype(np.complex128)


def amplitude_embed(v: np.ndarray, epsilon: float = EMBED_EPS) -> Statevector:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("amplitude_embed expects a 1-D vector")
    n_qubits = int(round(math.log2(v.shape[0])))
    if (1 << n_qubits) != v.shape[0]:
        raise ValueError(f"input length {v.shape[0]} is not a power of two")
    return Statevector(n_qubits, embed_batch(v, epsilon))


# ---------------------------------------------------------------------------
# Statevector-level operations

def apply_ry(state: Statevector, qubit: int, theta: float) -> Statevector:
    ry_kernel(state.amps, state.n_qubits, qubit, theta)
    return state


def apply_rz(state: Statevector, qubit: int, phi: float) -> Statevector:
    rz_kernel(state.amps, state.n_qubits, qubit, phi)
    return state


def apply_cnot(state: Statevector, control: int, target: int) -> Statevector:
    cnot_kernel(state.amps, state.n_qubits, control, target)
    return state


def apply_layer(state: Statevector, params: CircuitParams, layer: int) -> Statevector:
    if not 0 <= layer < params.depth:
        raise IndexError(f"layer {layer} out of range for depth {params.depth}")
    if params.n_qubits != state.n_qubits:
        raise ValueError("parameter width does not match register size")
    layer_kernel(state.amps, state.n_qubits, params.thetas[layer], params.phis[layer])
    return state


def run_circuit(v: np.ndarray, params: CircuitParams,
                epsilon: float = EMBED_EPS) -> Statevector:
    """Embed `v` and apply all variational layers in order."""
    state = amplitude_embed(v, epsilon)
    for layer in range(params.depth):
        apply_layer(state, params, layer)
    return state


# ---------------------------------------------------------------------------
# observables

@lru_cache(maxsize=16)
def _canonical_sign_matrix(n_qubits: int) -> np.ndarray:
    return sign_matrix(n_qubits, ObservableSet.canonical(n_qubits))


def sign_matrix(n_qubits: int, obs: ObservableSet) -> np.ndarray:
    """[2^n, n_obs] matrix of +-1 parities; expectations = probs @ signs."""
    dim = 1 << n_qubits
    idx = np.arange(dim)
    bits = ((idx[:, None] >> (n_qubits - 1 - np.arange(n_qubits)[None, :])) & 1)
    z = 1.0 - 2.0 * bits  # [dim, n_qubits], column q = (-1)^bit_q
    cols = [z[:, q] for q in obs.singles]
    cols += [z[:, i] * z[:, j] for i, j in obs.pairs]
    return np.stack(cols, axis=1)


def expectations_batch(amps: np.ndarray, n_qubits: int) -> np.ndarray:
    """Canonical Z / ZZ expectations for amplitude rows of shape [..., 2^n]."""
    probs = np.abs(amps) ** 2
    return probs @ _canonical_sign_matrix(n_qubits)


def expectations(state: Statevector, obs: ObservableSet | None = None) -> np.ndarray:
    if obs is None:
        return expectations_batch(state.amps, state.n_qubits)
    for q in obs.singles:
        _check_qubit(state.n_qubits, q)
    for i, j in obs.pairs:
        _check_qubit(state.n_qubits, i)
        _check_qubit(state.n_qubits, j)
    return state.probabilities() @ sign_matrix(state.n_qubits, obs)
