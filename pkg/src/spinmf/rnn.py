"""Recurrent autoregressive mean field over spin configurations.

The joint distribution factorizes along a fixed spin order; step t emits a
2-way softmax over the t-th spin's value given everything sampled so far.
The network is a stack of vanilla tanh recurrences (default two layers,
hidden width 50) followed by a linear projection to the two logits. The
input at step t is a 2-dim one-hot of the previous spin's value; step 0
consumes a zero vector.

Parameters live in one flat float64 array with named views, which keeps the
optimizer, gradient clipping, and checkpointing trivial. Gradients of
log-probabilities are computed by reverse accumulation through the unrolled
recurrence (no autodiff framework involved), which is what the
score-function training estimator consumes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .model import SampleSet
from .ordering import SpinOrder
from .seeding import rng_for

INPUT_DIM = 2  # one-hot of the previous spin value
OUTPUT_DIM = 2  # logits for x_t = -1 (class 0) and x_t = +1 (class 1)


def _layer_shapes(hidden: int, layers: int) -> list[tuple[str, tuple[int, ...]]]:
    shapes = []
    in_dim = INPUT_DIM
    for l in range(layers):
        shapes.append((f"w_ih{l}", (hidden, in_dim)))
        shapes.append((f"w_hh{l}", (hidden, hidden)))
        shapes.append((f"b{l}", (hidden,)))
        in_dim = hidden
    shapes.append(("w_out", (OUTPUT_DIM, hidden)))
    shapes.append(("b_out", (OUTPUT_DIM,)))
    return shapes


class RnnMeanField:
    """Parameter container with named views into one flat array."""

    def __init__(self, hidden: int, layers: int, theta: np.ndarray):
        if hidden < 1 or layers < 1:
            raise ContractViolation("hidden and layers must be positive")
        self.hidden = hidden
        self.layers = layers
        shapes = _layer_shapes(hidden, layers)
        expected = sum(int(np.prod(s)) for _, s in shapes)
        theta = np.ascontiguousarray(theta, dtype=np.float64)
        if theta.shape != (expected,):
            raise ContractViolation(
                f"flat parameter vector must have length {expected}, got {theta.shape}"
            )
        self.theta = theta
        self._views = {}
        offset = 0
        for name, shape in shapes:
            size = int(np.prod(shape))
            self._views[name] = self.theta[offset:offset + size].reshape(shape)
            offset += size
        self.w_ih = [self._views[f"w_ih{l}"] for l in range(layers)]
        self.w_hh = [self._views[f"w_hh{l}"] for l in range(layers)]
        self.b = [self._views[f"b{l}"] for l in range(layers)]
        self.w_out = self._views["w_out"]
        self.b_out = self._views["b_out"]

    @property
    def param_count(self) -> int:
        return self.theta.shape[0]

    @classmethod
    def initialize(cls, hidden: int = 50, layers: int = 2, seed: int = 0) -> "RnnMeanField":
        """Seeded uniform(-1/sqrt(H), 1/sqrt(H)) recurrent weights.

        The output projection starts at zero so every conditional begins at
        1/2 and the model starts from the maximum-entropy distribution.
        """
        shapes = _layer_shapes(hidden, layers)
        total = sum(int(np.prod(s)) for _, s in shapes)
        rng = rng_for(seed, 0)
        scale = 1.0 / np.sqrt(hidden)
        theta = rng.uniform(-scale, scale, size=total)
        params = cls(hidden, layers, theta)
        params.w_out[:] = 0.0
        params.b_out[:] = 0.0
        return params

    def zeros_like(self) -> np.ndarray:
        return np.zeros_like(self.theta)

    def copy(self) -> "RnnMeanField":
        return RnnMeanField(self.hidden, self.layers, self.theta.copy())

    def view(self, flat: np.ndarray) -> "RnnMeanField":
        """Named views over an external flat array (e.g. a gradient buffer)."""
        return RnnMeanField(self.hidden, self.layers, flat)


# ---------------------------------------------------------------------------
# Forward passes.

def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _check_order(params: RnnMeanField, order: SpinOrder) -> np.ndarray:
    return order.permutation


def _teacher_forward(params: RnnMeanField, choices: np.ndarray, keep_states: bool):
    """Run the recurrence on fixed class choices (K, n).

    Returns (logq_choice (K, n), probs (n, K, 2), states (L, n, K, H) or None).
    """
    K, n = choices.shape
    L, H = params.layers, params.hidden
    states = np.empty((L, n, K, H)) if keep_states else None
    probs = np.empty((n, K, OUTPUT_DIM))
    logq = np.empty((K, n))
    h_prev = [np.zeros((K, H)) for _ in range(L)]
    rows = np.arange(K)
    x_in = np.zeros((K, INPUT_DIM))
    for t in range(n):
        if t > 0:
            x_in[:] = 0.0
            x_in[rows, choices[:, t - 1]] = 1.0
        inp = x_in
        for l in range(L):
            z = inp @ params.w_ih[l].T
            z += h_prev[l] @ params.w_hh[l].T
            z += params.b[l]
            np.tanh(z, out=z)
            h_prev[l] = z
            if keep_states:
                states[l, t] = z
            inp = z
        logits = inp @ params.w_out.T + params.b_out
        ls = _log_softmax(logits)
        probs[t] = np.exp(ls)
        logq[:, t] = ls[rows, choices[:, t]]
    return logq, probs, states


def _choices_from_configs(configs: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """Map ±1 configurations (natural indexing) to class indices in step order."""
    ordered = np.asarray(configs, dtype=np.float64)[:, perm]
    if not np.all(np.abs(ordered) == 1.0):
        raise ContractViolation("spins must be exactly -1 or +1")
    return ((ordered + 1) // 2).astype(np.int64)


def conditionals(params: RnnMeanField, order: SpinOrder, config) -> np.ndarray:
    """Probability assigned to each observed spin value, step-indexed.

    Entry t is q(x_{order[t]} = observed value | spins earlier in the order).
    """
    configs = np.atleast_2d(np.asarray(config))
    choices = _choices_from_configs(configs, _check_order(params, order))
    logq, _, _ = _teacher_forward(params, choices, keep_states=False)
    return np.exp(logq[0])


def log_prob(params: RnnMeanField, order: SpinOrder, config) -> float:
    return float(log_prob_batch(params, order, np.atleast_2d(np.asarray(config)))[0])


def log_prob_batch(params: RnnMeanField, order: SpinOrder, configs: np.ndarray) -> np.ndarray:
    """ln Q for a (m, n) batch of ±1 configurations in natural indexing."""
    choices = _choices_from_configs(configs, _check_order(params, order))
    logq, _, _ = _teacher_forward(params, choices, keep_states=False)
    return logq.sum(axis=1)


def sample(params: RnnMeanField, order: SpinOrder, k: int, seed: int = 0) -> SampleSet:
    """Draw k configurations by ancestral sampling along the order."""
    if k < 1:
        raise ContractViolation("sample count must be positive")
    perm = _check_order(params, order)
    n = perm.shape[0]
    uniforms = rng_for(seed, 1).random((k, n))
    choices, logq, _, _ = _sample_choices(params, uniforms)
    configs = np.empty((k, n), dtype=np.int8)
    configs[:, perm] = (2 * choices - 1).astype(np.int8)
    return SampleSet(configurations=configs, log_probs=logq.sum(axis=1))


def _sample_choices(params: RnnMeanField, uniforms: np.ndarray, keep_states: bool = False):
    """Ancestral sampling core.

    Returns (choices (K, n), per-step logq (K, n), probs, states); the last
    two are None unless ``keep_states``, in which case they feed straight
    into :func:`_backward_from_states` without a second forward pass.
    """
    K, n = uniforms.shape
    L, H = params.layers, params.hidden
    h_prev = [np.zeros((K, H)) for _ in range(L)]
    rows = np.arange(K)
    x_in = np.zeros((K, INPUT_DIM))
    choices = np.empty((K, n), dtype=np.int64)
    logq = np.empty((K, n))
    states = np.empty((L, n, K, H)) if keep_states else None
    probs = np.empty((n, K, OUTPUT_DIM)) if keep_states else None
    for t in range(n):
        if t > 0:
            x_in[:] = 0.0
            x_in[rows, choices[:, t - 1]] = 1.0
        inp = x_in
        for l in range(L):
            z = inp @ params.w_ih[l].T
            z += h_prev[l] @ params.w_hh[l].T
            z += params.b[l]
            np.tanh(z, out=z)
            h_prev[l] = z
            if keep_states:
                states[l, t] = z
            inp = z
        logits = inp @ params.w_out.T + params.b_out
        ls = _log_softmax(logits)
        if keep_states:
            probs[t] = np.exp(ls)
        take_plus = uniforms[:, t] < np.exp(ls[:, 1])
        choices[:, t] = take_plus.astype(np.int64)
        logq[:, t] = ls[rows, choices[:, t]]
    return choices, logq, probs, states


# ---------------------------------------------------------------------------
# Backpropagation through time.

def weighted_log_prob_grad(
    params: RnnMeanField,
    order: SpinOrder,
    configs: np.ndarray,
    weights: np.ndarray,
) -> np.ndarray:
    """Flat gradient of sum_k weights[k] * ln Q(configs[k]).

    One reverse pass over the unrolled recurrence serves both the
    single-configuration gradient (weights = [1]) and the score-function
    training estimator (weights = centered rewards / K).
    """
    perm = _check_order(params, order)
    choices = _choices_from_configs(configs, perm)
    return _backward(params, choices, np.asarray(weights, dtype=np.float64))


def log_prob_grad(params: RnnMeanField, order: SpinOrder, config) -> np.ndarray:
    """Flat gradient of ln Q at one configuration (reverse accumulation)."""
    return weighted_log_prob_grad(
        params, order, np.atleast_2d(np.asarray(config)), np.ones(1)
    )


def _backward(params: RnnMeanField, choices: np.ndarray, weights: np.ndarray) -> np.ndarray:
    _, probs, states = _teacher_forward(params, choices, keep_states=True)
    return _backward_from_states(params, choices, weights, probs, states)


def _backward_from_states(
    params: RnnMeanField,
    choices: np.ndarray,
    weights: np.ndarray,
    probs: np.ndarray,
    states: np.ndarray,
) -> np.ndarray:
    """Reverse accumulation given stored per-step activations."""
    K, n = choices.shape
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (K,):
        raise ContractViolation("weights must parallel the configuration batch")
    L, H = params.layers, params.hidden
    flat = params.zeros_like()
    g = params.view(flat)
    rows = np.arange(K)
    carry = [np.zeros((K, H)) for _ in range(L)]
    x_in = np.zeros((K, INPUT_DIM))
    for t in range(n - 1, -1, -1):
        dlogits = -probs[t] * weights[:, None]
        dlogits[rows, choices[:, t]] += weights
        g.w_out += dlogits.T @ states[L - 1, t]
        g.b_out += dlogits.sum(axis=0)
        d = dlogits @ params.w_out + carry[L - 1]
        for l in range(L - 1, -1, -1):
            dz = d * (1.0 - states[l, t] ** 2)
            g.b[l] += dz.sum(axis=0)
            if t > 0:
                g.w_hh[l] += dz.T @ states[l, t - 1]
            if l > 0:
                g.w_ih[l] += dz.T @ states[l - 1, t]
            else:
                if t > 0:
                    x_in[:] = 0.0
                    x_in[rows, choices[:, t - 1]] = 1.0
                    g.w_ih[0] += dz.T @ x_in
            carry[l] = dz @ params.w_hh[l]
            if l > 0:
                d = dz @ params.w_ih[l] + carry[l - 1]
    return flat


# ---------------------------------------------------------------------------
# Exact embeddings and checkpointing.

def params_from_marginals(
    p_plus: np.ndarray, hidden: int = 50, seed: int = 0
) -> RnnMeanField:
    """Parameters whose step-t conditional is the constant p_plus[t].

    Input weights are zeroed so hidden trajectories ignore the sampled spins,
    and the output projection is solved linearly against that deterministic
    trajectory. The result represents exactly the product distribution with
    per-step +1 probabilities ``p_plus`` — the fully factorized family is a
    member of this autoregressive family.
    """
    p = np.asarray(p_plus, dtype=np.float64)
    n = p.shape[0]
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ContractViolation("marginals must be strictly inside (0, 1)")
    if hidden < n:
        raise ContractViolation("need hidden >= n to embed the trajectory exactly")
    params = RnnMeanField.initialize(hidden=hidden, layers=2, seed=seed)
    params.w_ih[0][:] = 0.0
    dummy = np.zeros((1, n), dtype=np.int64)
    _, _, states = _teacher_forward(params, dummy, keep_states=True)
    top = states[params.layers - 1, :, 0, :]  # (n, H) deterministic trajectory
    target = np.log(p) - np.log1p(-p)  # desired logit(+1) - logit(-1)
    row, *_ = np.linalg.lstsq(top, target, rcond=None)
    residual = top @ row - target
    if np.max(np.abs(residual)) > 1e-8:
        raise ContractViolation("trajectory embedding failed; increase hidden")
    params.w_out[0][:] = 0.0
    params.w_out[1][:] = row
    params.b_out[:] = 0.0
    return params


def checkpoint_to_dict(params: RnnMeanField, order: SpinOrder, extra: dict | None = None) -> dict:
    payload = {
        "arch": {
            "hidden": params.hidden,
            "layers": params.layers,
            "input_encoding": "onehot2-prev-spin, zero start token",
            "param_count": params.param_count,
        },
        "params": params.theta.tolist(),
        "order": order.permutation.tolist(),
    }
    if extra:
        payload.update(extra)
    return payload


def save_checkpoint(params: RnnMeanField, order: SpinOrder, path, extra: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(checkpoint_to_dict(params, order, extra), fh)
        fh.write("\n")


def load_checkpoint(path) -> tuple[RnnMeanField, SpinOrder, dict]:
    with open(path) as fh:
        payload = json.load(fh)
    arch = payload["arch"]
    params = RnnMeanField(
        arch["hidden"], arch["layers"], np.array(payload["params"], dtype=np.float64)
    )
    order = SpinOrder(np.array(payload["order"]))
    return params, order, payload
