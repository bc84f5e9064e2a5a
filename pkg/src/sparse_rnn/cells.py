"""Recurrent cell mathematics: forward steps and exact backward steps.

Four cell kinds share one interface.  A step consumes a batch of inputs
x (B, D) and the previous hidden state h (B, H) and returns the next
hidden state plus a cache holding everything the matching backward step
needs.  Gated cells act on the concatenation [h_prev, x]: hidden columns
first, input columns second, which is also how pruning targets address
the two blocks of each gate matrix.

Vanilla cells:      h_t = act(x U^T + h_prev W^T + b)
LSTM:               f, i, o = sigmoid gates; c_t = f*c + i*tanh-candidate
GRU:                h_t = (1 - z)*h_prev + z*h_tilde
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import ShapeError
from .numerics import Rng


class CellKind(str, Enum):
    RNN_TANH = "rnn_tanh"
    RNN_RELU = "rnn_relu"
    LSTM = "lstm"
    GRU = "gru"


VANILLA_KINDS = (CellKind.RNN_TANH, CellKind.RNN_RELU)
GATE_NAMES = {CellKind.LSTM: ("f", "i", "C", "o"), CellKind.GRU: ("z", "r", "h")}


def sigmoid(x):
    """Logistic function, stable for arbitrarily large |x|."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class RecurrentLayer:
    """One recurrent layer: weight arrays for a given cell kind.

    Vanilla kinds hold U (H, D), W (H, H), b (H).  Gated kinds hold one
    (H, H + D) matrix and one (H,) bias per gate, named W_<gate>/b_<gate>.
    """

    def __init__(self, kind: CellKind, input_size: int, hidden_size: int, rng: Rng):
        self.kind = CellKind(kind)
        self.input_size = input_size
        self.hidden_size = hidden_size
        bound = 1.0 / np.sqrt(hidden_size)
        self.params: dict[str, np.ndarray] = {}
        if self.kind in VANILLA_KINDS:
            self.params["U"] = rng.uniform(-bound, bound, (hidden_size, input_size))
            self.params["W"] = rng.uniform(-bound, bound, (hidden_size, hidden_size))
            self.params["b_h"] = np.zeros(hidden_size)
        else:
            for g in GATE_NAMES[self.kind]:
                self.params[f"W_{g}"] = rng.uniform(
                    -bound, bound, (hidden_size, hidden_size + input_size))
                self.params[f"b_{g}"] = np.zeros(hidden_size)

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(p) for name, p in self.params.items()}

    def clone(self) -> "RecurrentLayer":
        out = object.__new__(RecurrentLayer)
        out.kind = self.kind
        out.input_size = self.input_size
        out.hidden_size = self.hidden_size
        out.params = {k: v.copy() for k, v in self.params.items()}
        return out


def _check_step_shapes(layer: RecurrentLayer, x, h_prev):
    if x.shape[1] != layer.input_size or h_prev.shape[1] != layer.hidden_size:
        raise ShapeError(
            f"step got x {x.shape}, h {h_prev.shape}; layer expects input "
            f"{layer.input_size}, hidden {layer.hidden_size}")
    if x.shape[0] != h_prev.shape[0]:
        raise ShapeError(f"batch mismatch: x {x.shape} vs h {h_prev.shape}")


def rnn_step(layer: RecurrentLayer, x, h_prev):
    """Vanilla step.  Returns (h, cache)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    h_prev = np.atleast_2d(np.asarray(h_prev, dtype=np.float64))
    _check_step_shapes(layer, x, h_prev)
    z = x @ layer.params["U"].T + h_prev @ layer.params["W"].T + layer.params["b_h"]
    if layer.kind == CellKind.RNN_TANH:
        h = np.tanh(z)
    else:
        h = np.maximum(0.0, z)
    return h, {"x": x, "h_prev": h_prev, "z": z, "h": h}


def rnn_step_backward(layer: RecurrentLayer, cache, dh, grads):
    """Accumulate parameter grads; return (dx, dh_prev)."""
    if layer.kind == CellKind.RNN_TANH:
        dz = dh * (1.0 - cache["h"] ** 2)
    else:
        dz = dh * (cache["z"] > 0.0)
    grads["U"] += dz.T @ cache["x"]
    grads["W"] += dz.T @ cache["h_prev"]
    grads["b_h"] += dz.sum(axis=0)
    return dz @ layer.params["U"], dz @ layer.params["W"]


def lstm_step(layer: RecurrentLayer, x, h_prev, c_prev):
    """LSTM step.  Returns (h, c, cache)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    h_prev = np.atleast_2d(np.asarray(h_prev, dtype=np.float64))
    c_prev = np.atleast_2d(np.asarray(c_prev, dtype=np.float64))
    _check_step_shapes(layer, x, h_prev)
    hx = np.concatenate([h_prev, x], axis=1)
    p = layer.params
    f = sigmoid(hx @ p["W_f"].T + p["b_f"])
    i = sigmoid(hx @ p["W_i"].T + p["b_i"])
    c_bar = np.tanh(hx @ p["W_C"].T + p["b_C"])
    c = f * c_prev + i * c_bar
    o = sigmoid(hx @ p["W_o"].T + p["b_o"])
    h = o * np.tanh(c)
    cache = {"hx": hx, "c_prev": c_prev, "f": f, "i": i, "c_bar": c_bar,
             "c": c, "o": o, "tanh_c": np.tanh(c)}
    return h, c, cache


def lstm_step_backward(layer: RecurrentLayer, cache, dh, dc, grads):
    """Returns (dx, dh_prev, dc_prev); dc is the incoming cell-state grad."""
    p = layer.params
    H = layer.hidden_size
    o, f, i, c_bar = cache["o"], cache["f"], cache["i"], cache["c_bar"]
    do = dh * cache["tanh_c"]
    dc_total = dc + dh * o * (1.0 - cache["tanh_c"] ** 2)
    da_o = do * o * (1.0 - o)
    da_f = dc_total * cache["c_prev"] * f * (1.0 - f)
    da_i = dc_total * c_bar * i * (1.0 - i)
    da_c = dc_total * i * (1.0 - c_bar ** 2)
    dhx = da_f @ p["W_f"] + da_i @ p["W_i"] + da_c @ p["W_C"] + da_o @ p["W_o"]
    hx = cache["hx"]
    grads["W_f"] += da_f.T @ hx
    grads["W_i"] += da_i.T @ hx
    grads["W_C"] += da_c.T @ hx
    grads["W_o"] += da_o.T @ hx
    grads["b_f"] += da_f.sum(axis=0)
    grads["b_i"] += da_i.sum(axis=0)
    grads["b_C"] += da_c.sum(axis=0)
    grads["b_o"] += da_o.sum(axis=0)
    return dhx[:, H:], dhx[:, :H], dc_total * f


def gru_step(layer: RecurrentLayer, x, h_prev):
    """GRU step.  Returns (h, cache)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    h_prev = np.atleast_2d(np.asarray(h_prev, dtype=np.float64))
    _check_step_shapes(layer, x, h_prev)
    hx = np.concatenate([h_prev, x], axis=1)
    p = layer.params
    z = sigmoid(hx @ p["W_z"].T + p["b_z"])
    r = sigmoid(hx @ p["W_r"].T + p["b_r"])
    rhx = np.concatenate([r * h_prev, x], axis=1)
    h_bar = np.tanh(rhx @ p["W_h"].T + p["b_h"])
    h = (1.0 - z) * h_prev + z * h_bar
    cache = {"hx": hx, "rhx": rhx, "h_prev": h_prev, "z": z, "r": r, "h_bar": h_bar}
    return h, cache


def gru_step_backward(layer: RecurrentLayer, cache, dh, grads):
    """Returns (dx, dh_prev)."""
    p = layer.params
    H = layer.hidden_size
    z, r, h_bar, h_prev = cache["z"], cache["r"], cache["h_bar"], cache["h_prev"]
    dz = dh * (h_bar - h_prev)
    da_z = dz * z * (1.0 - z)
    da_h = dh * z * (1.0 - h_bar ** 2)
    drhx = da_h @ p["W_h"]
    dr = drhx[:, :H] * h_prev
    da_r = dr * r * (1.0 - r)
    dhx = da_z @ p["W_z"] + da_r @ p["W_r"]
    grads["W_z"] += da_z.T @ cache["hx"]
    grads["W_r"] += da_r.T @ cache["hx"]
    grads["W_h"] += da_h.T @ cache["rhx"]
    grads["b_z"] += da_z.sum(axis=0)
    grads["b_r"] += da_r.sum(axis=0)
    grads["b_h"] += da_h.sum(axis=0)
    dx = dhx[:, H:] + drhx[:, H:]
    dh_prev = dh * (1.0 - z) + dhx[:, :H] + drhx[:, :H] * r
    return dx, dh_prev


def layer_step(layer: RecurrentLayer, x, h_prev, c_prev=None):
    """Kind-dispatching step.  Returns (h, c_or_None, cache)."""
    if layer.kind == CellKind.LSTM:
        h, c, cache = lstm_step(layer, x, h_prev, c_prev)
        return h, c, cache
    if layer.kind == CellKind.GRU:
        h, cache = gru_step(layer, x, h_prev)
        return h, None, cache
    h, cache = rnn_step(layer, x, h_prev)
    return h, None, cache


def layer_step_backward(layer: RecurrentLayer, cache, dh, dc, grads):
    """Kind-dispatching backward.  Returns (dx, dh_prev, dc_prev_or_None)."""
    if layer.kind == CellKind.LSTM:
        return lstm_step_backward(layer, cache, dh, dc, grads)
    if layer.kind == CellKind.GRU:
        dx, dh_prev = gru_step_backward(layer, cache, dh, grads)
        return dx, dh_prev, None
    dx, dh_prev = rnn_step_backward(layer, cache, dh, grads)
    return dx, dh_prev, None
