"""One-hidden-layer policy and value networks, policy-gradient loss and Adam.

The policy network maps ``[features, option one-hot]`` through a tanh hidden
layer to sigmoid outputs, multiplies them by a binary mask and normalises::

    h = tanh(W1 @ [x; w] + b1)
    yhat = sigmoid(W2 @ h + b2) * mask
    y = yhat / sum(yhat)

Gradients are written out by hand and verified against central finite
differences (see :func:`grad_check`).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .exceptions import DegenerateMask, MisalignedInput, ShapeMismatch

__all__ = [
    "PolicyNet",
    "ValueNet",
    "AdamState",
    "forward",
    "pg_loss_and_grads",
    "batch_pg_loss_and_grads",
    "policy_loss",
    "grad_check",
    "value_loss_and_grads",
    "value_grad_check",
    "adam_step",
    "value_update",
    "save_checkpoint",
    "load_checkpoint",
]

PARAM_NAMES = ("W1", "b1", "W2", "b2")
CHECKPOINT_FORMAT = "ooi-checkpoint-v1"


def _init_params(input_dim, hidden, output_dim, rng):
    rng = np.random.default_rng(rng)
    lim1 = 1.0 / np.sqrt(input_dim) if input_dim else 1.0
    lim2 = 1.0 / np.sqrt(hidden)
    return {
        "W1": rng.uniform(-lim1, lim1, size=(hidden, input_dim)),
        "b1": np.zeros(hidden),
        "W2": rng.uniform(-lim2, lim2, size=(output_dim, hidden)),
        "b2": np.zeros(output_dim),
    }


class PolicyNet:
    """Masked joint distribution over (end/cont) x (options + actions).

    ``input_dim`` is ``feature_dim + option_count`` and ``output_dim`` is
    ``2 * (action_count + option_count)``. Calling the net is the same as
    :func:`forward`, which makes it usable as an agent in
    :func:`ooi.options.run_episode`.
    """

    def __init__(self, feature_dim, option_count, action_count, hidden=100, rng=None):
        self.feature_dim = int(feature_dim)
        self.option_count = int(option_count)
        self.action_count = int(action_count)
        self.hidden = int(hidden)
        self.params = _init_params(self.input_dim, self.hidden, self.output_dim, rng)

    @property
    def input_dim(self):
        return self.feature_dim + self.option_count

    @property
    def output_dim(self):
        return 2 * (self.action_count + self.option_count)

    def __call__(self, features, option_onehot, mask):
        return forward(self, features, option_onehot, mask)

    def copy(self):
        other = object.__new__(type(self))
        other.__dict__.update(self.__dict__)
        other.params = {k: v.copy() for k, v in self.params.items()}
        return other


class ValueNet(PolicyNet):
    """Baseline ``V(x, w)``: same input layout, one linear output."""

    def __init__(self, feature_dim, option_count, hidden=100, rng=None):
        self.feature_dim = int(feature_dim)
        self.option_count = int(option_count)
        self.action_count = 0
        self.hidden = int(hidden)
        self.params = _init_params(self.input_dim, self.hidden, 1, rng)

    @property
    def output_dim(self):
        return 1

    def __call__(self, features, option_onehot):
        return self.predict(np.concatenate([features, option_onehot])[None, :])[0]

    def predict(self, inputs):
        p = self.params
        h = np.tanh(inputs @ p["W1"].T + p["b1"])
        return h @ p["W2"][0] + p["b2"][0]


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _masked_log_probs(z, mask):
    """``log y`` along the last axis, computed in log space so that logits far
    below zero cannot underflow every unmasked entry; masked entries get -inf."""
    log_sig = -np.logaddexp(np.zeros((), dtype=z.dtype), -z)
    masked = np.where(np.asarray(mask) > 0, log_sig, -np.inf)
    top = masked.max(axis=-1, keepdims=True)
    if not np.all(np.isfinite(top)):
        raise DegenerateMask("mask leaves no entry with positive probability")
    return masked - (top + np.log(np.exp(masked - top).sum(axis=-1, keepdims=True)))


def forward(net: PolicyNet, features, option_onehot, mask) -> np.ndarray:
    p = net.params
    h = np.tanh(p["W1"] @ np.concatenate([features, option_onehot]) + p["b1"])
    return np.exp(_masked_log_probs(p["W2"] @ h + p["b2"], mask))


def _policy_terms(params, inputs, masks, choices, dtype=float):
    W1, b1, W2, b2 = (np.asarray(params[k], dtype=dtype) for k in PARAM_NAMES)
    x = np.asarray(inputs, dtype=dtype)
    h = np.tanh(x @ W1.T + b1)
    z = h @ W2.T + b2
    logy = _masked_log_probs(z, masks)
    y = np.exp(logy)
    logp = logy[np.arange(len(choices)), choices]
    return h, _sigmoid(z), y, logy, logp


def _entropy(y, logy):
    finite_logy = np.where(y > 0, logy, 0.0)
    return finite_logy, -(y * finite_logy).sum(axis=1)


def policy_loss(params, inputs, masks, choices, advantages, entropy_coef=0.0, dtype=float):
    """Loss only; evaluated independently of the gradient code (finite-difference oracle)."""
    _, _, y, logy, logp = _policy_terms(params, inputs, masks, choices, dtype)
    loss = -(np.asarray(advantages, dtype=dtype) * logp).sum()
    if entropy_coef:
        loss = loss - entropy_coef * _entropy(y, logy)[1].sum()
    return loss


def _policy_batch(traj, returns, baselines):
    steps = traj.learned_steps()
    returns = np.asarray(returns, dtype=float)
    baselines = np.asarray(baselines, dtype=float)
    if len(returns) != len(steps) or len(baselines) != len(steps):
        raise MisalignedInput(
            f"{len(steps)} decision records, {len(returns)} returns, {len(baselines)} baselines")
    x, w, masks, choices = traj.inputs(steps)
    inputs = np.hstack([x, w]) if len(steps) else np.zeros((0, x.shape[1] if x.ndim == 2 else 0))
    return inputs, masks, choices, returns - baselines


def batch_pg_loss_and_grads(params, inputs, masks, choices, advantages, entropy_coef=0.0):
    """Loss and gradients from stacked inputs; ``inputs`` rows are ``[features, option one-hot]``."""
    adv = np.asarray(advantages, dtype=float)
    h, sig, y, logy, logp = _policy_terms(params, inputs, masks, choices)
    rows = np.arange(len(choices))
    loss = -(adv * logp).sum()
    # d log y_c / d z_j = [j == c](1 - sig_c) - y_j (1 - sig_j)
    dlogp = -y * (1.0 - sig)
    dlogp[rows, choices] += 1.0 - sig[rows, choices]
    dz = -adv[:, None] * dlogp
    if entropy_coef:
        finite_logy, ent = _entropy(y, logy)
        loss -= entropy_coef * ent.sum()
        dz -= entropy_coef * y * (1.0 - sig) * (-ent[:, None] - finite_logy)
    grads = _backprop(params, inputs, h, dz)
    return float(loss), grads


def _backprop(params, inputs, h, dz):
    dW2 = dz.T @ h
    db2 = dz.sum(axis=0)
    da = (dz @ params["W2"]) * (1.0 - h * h)
    dW1 = da.T @ inputs
    db1 = da.sum(axis=0)
    return {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2}


def pg_loss_and_grads(net: PolicyNet, trajectory, returns, baselines, entropy_coef=0.0):
    """Policy-gradient loss ``-sum_t (R_t - V_t) log y_t[choice_t]`` and its gradients.

    Every learned decision in ``trajectory`` contributes one term, whether it
    is a top-level option selection or an in-option action. Baselines are
    constants here.
    """
    inputs, masks, choices, adv = _policy_batch(trajectory, returns, baselines)
    if len(choices) == 0:
        return 0.0, {k: np.zeros_like(v) for k, v in net.params.items()}
    return batch_pg_loss_and_grads(net.params, inputs, masks, choices, adv, entropy_coef)


def _central_difference(loss_fn, params, fd_step):
    numeric = {}
    for name in PARAM_NAMES:
        base = np.asarray(params[name], dtype=np.longdouble)
        g = np.zeros(base.shape)
        for idx in np.ndindex(base.shape):
            plus = {k: np.asarray(v, dtype=np.longdouble) for k, v in params.items()}
            minus = {k: np.asarray(v, dtype=np.longdouble) for k, v in params.items()}
            plus[name] = base.copy()
            minus[name] = base.copy()
            plus[name][idx] += fd_step
            minus[name][idx] -= fd_step
            g[idx] = float((loss_fn(plus) - loss_fn(minus)) / (2 * fd_step))
        numeric[name] = g
    return numeric


def _max_relative_error(analytic, numeric):
    worst = 0.0
    for name in PARAM_NAMES:
        a, n = analytic[name], numeric[name]
        err = np.abs(a - n) / np.maximum(1e-8, np.abs(n))
        if err.size:
            worst = max(worst, float(err.max()))
    return worst


def grad_check(net: PolicyNet, trajectory, returns, baselines, fd_step=1e-5, entropy_coef=0.0) -> float:
    """Largest relative gap between analytic and central-difference gradients.

    The finite differences evaluate the loss in extended precision so that
    rounding noise stays well below the truncation error of the scheme.
    """
    inputs, masks, choices, adv = _policy_batch(trajectory, returns, baselines)
    _, analytic = pg_loss_and_grads(net, trajectory, returns, baselines, entropy_coef)
    ld = np.longdouble

    def loss_fn(params):
        return policy_loss(params, inputs.astype(ld), masks.astype(ld), choices,
                           adv.astype(ld), entropy_coef, dtype=ld)

    numeric = _central_difference(loss_fn, net.params, fd_step)
    return _max_relative_error(analytic, numeric)


def _value_terms(params, inputs, targets, dtype=float):
    W1, b1, W2, b2 = (np.asarray(params[k], dtype=dtype) for k in PARAM_NAMES)
    h = np.tanh(np.asarray(inputs, dtype=dtype) @ W1.T + b1)
    v = h @ W2[0] + b2[0]
    err = v - np.asarray(targets, dtype=dtype)
    return h, err, (err * err).mean()


def value_loss_and_grads(vnet: ValueNet, inputs, targets):
    """Mean squared error of ``vnet`` on ``(inputs, targets)`` and its gradients."""
    inputs = np.asarray(inputs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if len(inputs) != len(targets):
        raise MisalignedInput(f"{len(inputs)} inputs vs {len(targets)} targets")
    if len(targets) == 0:
        return 0.0, {k: np.zeros_like(v) for k, v in vnet.params.items()}
    h, err, loss = _value_terms(vnet.params, inputs, targets)
    dz = (2.0 / len(targets)) * err[:, None]
    return float(loss), _backprop(vnet.params, inputs, h, dz)


def value_grad_check(vnet: ValueNet, inputs, targets, fd_step=1e-5) -> float:
    _, analytic = value_loss_and_grads(vnet, inputs, targets)
    ld = np.longdouble
    x = np.asarray(inputs, dtype=ld)
    y = np.asarray(targets, dtype=ld)
    numeric = _central_difference(lambda p: _value_terms(p, x, y, dtype=ld)[2], vnet.params, fd_step)
    return _max_relative_error(analytic, numeric)


@dataclass
class AdamState:
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState):
    """Bias-corrected Adam update, applied to ``params`` in place."""
    if params.keys() != grads.keys():
        raise ShapeMismatch(f"parameter names {sorted(params)} vs gradient names {sorted(grads)}")
    for k in params:
        if np.shape(params[k]) != np.shape(grads[k]):
            raise ShapeMismatch(f"{k}: parameter {np.shape(params[k])} vs gradient {np.shape(grads[k])}")
    state.step_count += 1
    t = state.step_count
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for k, g in grads.items():
        m = state.first_moment.get(k)
        v = state.second_moment.get(k)
        if m is None:
            m = np.zeros_like(params[k])
            v = np.zeros_like(params[k])
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.first_moment[k] = m
        state.second_moment[k] = v
        params[k] -= state.alpha * (m / c1) / (np.sqrt(v / c2) + state.epsilon)
    return params, state


def value_update(vnet: ValueNet, observations, option_onehots, monte_carlo_returns,
                 state: Optional[AdamState] = None):
    """One Adam step on the squared error between ``vnet`` and Monte-Carlo returns."""
    x = np.asarray(observations, dtype=float)
    w = np.asarray(option_onehots, dtype=float)
    if len(x) != len(w):
        raise MisalignedInput(f"{len(x)} observations vs {len(w)} option one-hots")
    state = AdamState() if state is None else state
    inputs = np.hstack([x.reshape(len(x), -1), w.reshape(len(w), -1)])
    loss, grads = value_loss_and_grads(vnet, inputs, monte_carlo_returns)
    adam_step(vnet.params, grads, state)
    return vnet, state, loss


def save_checkpoint(net: PolicyNet, path) -> Path:
    """Write ``net`` as an ``.npz`` archive of named arrays.

    Besides ``W1, b1, W2, b2`` the archive holds ``format`` (the version tag),
    ``kind`` (``policy`` or ``value``) and ``dims``
    (``feature_dim, option_count, action_count, hidden``).
    """
    path = Path(path)
    kind = "value" if isinstance(net, ValueNet) else "policy"
    dims = np.array([net.feature_dim, net.option_count, net.action_count, net.hidden])
    with open(path, "wb") as fh:
        np.savez(fh, format=np.array(CHECKPOINT_FORMAT), kind=np.array(kind), dims=dims,
                 **net.params)
    return path


def load_checkpoint(path) -> PolicyNet:
    with np.load(path, allow_pickle=False) as data:
        if str(data["format"]) != CHECKPOINT_FORMAT:
            raise ValueError(f"unsupported checkpoint format {data['format']!s}")
        feature_dim, option_count, action_count, hidden = (int(d) for d in data["dims"])
        if str(data["kind"]) == "value":
            net = ValueNet(feature_dim, option_count, hidden)
        else:
            net = PolicyNet(feature_dim, option_count, action_count, hidden)
        for k in PARAM_NAMES:
            if data[k].shape != net.params[k].shape:
                raise ShapeMismatch(f"{k}: stored {data[k].shape} vs expected {net.params[k].shape}")
            net.params[k] = data[k].astype(float)
    return net
