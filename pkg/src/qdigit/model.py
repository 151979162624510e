"""The full classifier: four conv blocks, bridge layer, variational circuit, head.

Pipeline for a [B, 1, 28, 28] batch:

    conv(1->32)  relu dropout pool   -> 32 x 14 x 14
    conv(32->64) relu dropout pool   -> 64 x 7 x 7
    conv(64->128) relu dropout pool  -> 128 x 4 x 4   (ceil-mode pool)
    conv(128->128) relu dropout      -> 128 x 4 x 4
    flatten -> 2048 -> bridge -> 2^n_qubits
    embed -> variational layers -> Z / ZZ expectations -> linear head -> 10 logits

The ablation mode swaps the quantum stage for a fixed classical path:
bridge 2048 -> 1024 followed by a single 1024 -> 10 linear head.

Parameters live in a flat, index-stable namespace (conv1..conv4, bridge,
thetas, phis, head) so optimizer state and checkpoints line up across runs.
"""

from __future__ import annotations

import math

import numpy as np

from . import qgrad, qsim, tensor_nn as nn

MODE_QUANTUM = "quantum"
MODE_ABLATION = "ablation"

CONV_FILTERS = (32, 64, 128, 128)
FLAT_DIM = 128 * 4 * 4  # 2048
ABLATION_BRIDGE_DIM = 1024
N_CLASSES = 10


class HybridModel:
    """CNN + bridge + (variational circuit | classical head) classifier."""

    def __init__(self, n_qubits: int = 10, depth: int = 5,
                 mode: str = MODE_QUANTUM, dropout_p: float = 0.0,
                 seed: int = 0):
        if mode not in (MODE_QUANTUM, MODE_ABLATION):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == MODE_QUANTUM and not 2 <= n_qubits <= 12:
            raise ValueError("n_qubits must be in [2, 12]")
        self.n_qubits = n_qubits
        self.depth = depth
        self.mode = mode
        self.dropout_p = dropout_p
        self._cache = None

        rng = np.random.default_rng(seed)
        self.conv_blocks = []
        in_ch = 1
        for f in CONV_FILTERS:
            self.conv_blocks.append(nn.ConvLayer(
                nn.xavier_uniform_init((f, in_ch, 3, 3), rng),
                np.zeros(f)))
            in_ch = f

        if mode == MODE_QUANTUM:
            bridge_dim = 1 << n_qubits
            n_obs = qsim.n_observables(n_qubits)
            self.bridge = nn.LinearLayer(
                nn.xavier_uniform_init((bridge_dim, FLAT_DIM), rng),
                np.zeros(bridge_dim))
            self.circuit = qsim.CircuitParams.random(depth, n_qubits, rng)
            self.head = nn.LinearLayer(
                nn.xavier_uniform_init((N_CLASSES, n_obs), rng),
                np.zeros(N_CLASSES))
        else:
            self.bridge = nn.LinearLayer(
                nn.xavier_uniform_init((ABLATION_BRIDGE_DIM, FLAT_DIM), rng),
                np.zeros(ABLATION_BRIDGE_DIM))
            self.circuit = None
            self.head = nn.LinearLayer(
                nn.xavier_uniform_init((N_CLASSES, ABLATION_BRIDGE_DIM), rng),
                np.zeros(N_CLASSES))

    # ------------------------------------------------------------------
    # parameter namespace

    def named_params(self):
        """Ordered (name, array) pairs defining the flat namespace."""
        out = []
        for i, conv in enumerate(self.conv_blocks, start=1):
            out.append((f"conv{i}.weights", conv.weights))
            out.append((f"conv{i}.bias", conv.bias))
        out.append(("bridge.weights", self.bridge.weights))
        out.append(("bridge.bias", self.bridge.bias))
        if self.mode == MODE_QUANTUM:
            out.append(("circuit.thetas", self.circuit.thetas))
            out.append(("circuit.phis", self.circuit.phis))
        out.append(("head.weights", self.head.weights))
        out.append(("head.bias", self.head.bias))
        return out

    @property
    def n_params(self) -> int:
        return sum(a.size for _, a in self.named_params())

    def param_vector(self) -> np.ndarray:
        return np.concatenate([a.ravel() for _, a in self.named_params()])

    def set_param_vector(self, vec: np.ndarray):
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (self.n_params,):
            raise ValueError("parameter vector length mismatch")
        offset = 0
        for _, arr in self.named_params():
            arr.ravel()[:] = vec[offset:offset + arr.size]
            offset += arr.size

    def param_census(self):
        """Per-component trainable-parameter counts, plus the total."""
        cnn = sum(c.n_params for c in self.conv_blocks) + self.bridge.n_params
        rows = [("cnn_and_bridge", cnn)]
        if self.mode == MODE_QUANTUM:
            rows.append(("quantum_circuit", self.circuit.n_params))
        rows.append(("head", self.head.n_params))
        rows.append(("total", sum(n for _, n in rows)))
        return rows

    # ------------------------------------------------------------------
    # forward / backward

    def forward_batch(self, x: np.ndarray, training: bool = False,
                      rng: np.random.Generator | None = None) -> np.ndarray:
        """[B, 1, 28, 28] (values in [-1, 1]) -> logits [B, 10]."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 4 or x.shape[1:] != (1, 28, 28):
            raise ValueError(f"expected [B, 1, 28, 28] input, got {x.shape}")
        cache = {"blocks": []}
        h = x
        for i, conv in enumerate(self.conv_blocks):
            h, conv_cache = nn.conv2d_forward(h, conv)
            h, relu_cache = nn.relu_forward(h)
            h, drop_mask = nn.dropout_forward(h, self.dropout_p, training, rng)
            if i < 3:
                h, pool_cache = nn.maxpool2x2_forward(h)
            else:
                pool_cache = None
            cache["blocks"].append((conv_cache, relu_cache, drop_mask, pool_cache))

        batch = x.shape[0]
        flat = h.reshape(batch, FLAT_DIM)
        cache["flat_shape"] = h.shape
        bridged, bridge_cache = nn.linear_forward(flat, self.bridge)
        cache["bridge"] = bridge_cache

        if self.mode == MODE_QUANTUM:
            cache["v_pre"] = bridged
            amps = qsim.embed_batch(bridged)
            for layer in range(self.depth):
                qsim.layer_kernel(amps, self.n_qubits,
                                  self.circuit.thetas[layer],
                                  self.circuit.phis[layer])
            q = qsim.expectations_batch(amps, self.n_qubits)
            cache["q"] = q
        else:
            q = bridged
        logits, head_cache = nn.linear_forward(q, self.head)
        cache["head"] = head_cache
        self._cache = cache
        return logits

    def forward(self, x: np.ndarray, training: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
        """Single image [1, 28, 28] -> logits [10]."""
        return self.forward_batch(x[None], training, rng)[0]

    def backward(self, d_logits: np.ndarray) -> np.ndarray:
        """Gradient of the scalar loss w.r.t. the flat parameter vector.

        `d_logits` is [B, 10] (or [10] for a single-image forward) and must
        follow a matching forward call.
        """
        if self._cache is None:
            raise RuntimeError("backward called without a cached forward pass")
        cache = self._cache
        d_logits = np.asarray(d_logits, dtype=np.float64)
        if d_logits.ndim == 1:
            d_logits = d_logits[None]

        grads = {}
        d_q, grads["head.weights"], grads["head.bias"] = nn.linear_backward(
            d_logits, cache["head"])

        if self.mode == MODE_QUANTUM:
            d_th, d_ph, d_v = qgrad.circuit_backward_batch(
                cache["v_pre"], self.circuit, d_q)
            grads["circuit.thetas"] = d_th
            grads["circuit.phis"] = d_ph
            d_bridged = d_v
        else:
            d_bridged = d_q

        d_flat, grads["bridge.weights"], grads["bridge.bias"] = nn.linear_backward(
            d_bridged, cache["bridge"])
        d_h = d_flat.reshape(cache["flat_shape"])

        for i in reversed(range(4)):
            conv_cache, relu_cache, drop_mask, pool_cache = cache["blocks"][i]
            if pool_cache is not None:
                d_h = nn.maxpool2x2_backward(d_h, pool_cache)
            d_h = nn.dropout_backward(d_h, drop_mask)
            d_h = nn.relu_backward(d_h, relu_cache)
            d_h, dw, db = nn.conv2d_backward(d_h, conv_cache)
            grads[f"conv{i + 1}.weights"] = dw
            grads[f"conv{i + 1}.bias"] = db

        return np.concatenate(
            [np.asarray(grads[name], dtype=np.float64).ravel()
             for name, _ in self.named_params()])

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        """Softmax probabilities for a [B, 1, 28, 28] batch (eval mode)."""
        logits = self.forward_batch(x, training=False)
        shifted = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=1, keepdims=True)


def set_mode_ablation(model: HybridModel) -> HybridModel:
    """Fresh ablation-mode model sharing the quantum model's size knobs."""
    return HybridModel(n_qubits=model.n_qubits, depth=model.depth,
                       mode=MODE_ABLATION, dropout_p=model.dropout_p)
