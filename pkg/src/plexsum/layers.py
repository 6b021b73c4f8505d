"""Neural building blocks on the autodiff substrate: bidirectional LSTM
stacks, graph convolutions with inner skips, and multi-relation fusion.

Weight matrices use the right-multiplication convention (rows are nodes or
timesteps), so a layer computes H @ W + b. Weights are initialized
uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases start at zero except the
LSTM forget gate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor


def _uniform(rng: np.random.Generator, shape: tuple[int, ...]) -> Tensor:
    bound = 1.0 / np.sqrt(shape[0])
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


# ---------------------------------------------------------------------------
# bidirectional LSTM

# gate packing along the last axis: [input, forget, cell, output]


@dataclass
class LstmDirectionParams:
    w_x: Tensor  # (d_in, 4h)
    w_h: Tensor  # (h, 4h)
    b: Tensor    # (4h,)


@dataclass
class BiLstmParams:
    layers: list[tuple[LstmDirectionParams, LstmDirectionParams]]  # (forward, backward)


def init_bilstm(rng: np.random.Generator, d_in: int, d_out: int, n_layers: int,
                forget_bias: float = 1.0) -> BiLstmParams:
    if d_out % 2:
        raise ValueError(f"bilstm output width must be even, got {d_out}")
    h = d_out // 2
    layers = []
    for layer in range(n_layers):
        cur_in = d_in if layer == 0 else d_out
        pair = []
        for _ in range(2):
            b = np.zeros(4 * h)
            b[h:2 * h] = forget_bias
            pair.append(LstmDirectionParams(
                w_x=_uniform(rng, (cur_in, 4 * h)),
                w_h=_uniform(rng, (h, 4 * h)),
                b=Tensor(b, requires_grad=True),
            ))
        layers.append((pair[0], pair[1]))
    return BiLstmParams(layers)


def _lstm_pass(xs: Tensor, p: LstmDirectionParams, reverse: bool) -> Tensor:
    n = xs.shape[0]
    h_w = p.w_h.shape[0]
    h = Tensor(np.zeros((1, h_w)))
    c = Tensor(np.zeros((1, h_w)))
    steps = range(n - 1, -1, -1) if reverse else range(n)
    outs: list = [None] * n
    for t in steps:
        x_t = xs[t:t + 1]
        z = x_t @ p.w_x + h @ p.w_h + p.b
        i = ad.sigmoid(z[:, 0:h_w])
        f = ad.sigmoid(z[:, h_w:2 * h_w])
        g = ad.tanh(z[:, 2 * h_w:3 * h_w])
        o = ad.sigmoid(z[:, 3 * h_w:4 * h_w])
        c = f * c + i * g
        h = o * ad.tanh(c)
        outs[t] = h
    return ad.concat(outs, axis=0)


def bilstm(xs: Tensor, params: BiLstmParams) -> Tensor:
    """Stacked bidirectional LSTM over an (n, d_in) sequence; each position's
    output concatenates the forward and backward hidden states."""
    out = xs
    for fw, bw in params.layers:
        f = _lstm_pass(out, fw, reverse=False)
        b = _lstm_pass(out, bw, reverse=True)
        out = ad.concat([f, b], axis=1)
    return out


# ---------------------------------------------------------------------------
# graph convolutions


@dataclass
class SkipGcnLayerParams:
    w_gcn: Tensor   # (d, d)
    w_proj: Tensor  # (d, d)
    b_proj: Tensor  # (d,)


@dataclass
class SkipGcnParams:
    layers: list[SkipGcnLayerParams]


def init_skip_gcn(rng: np.random.Generator, d: int, n_layers: int) -> SkipGcnParams:
    return SkipGcnParams([
        SkipGcnLayerParams(
            w_gcn=_uniform(rng, (d, d)),
            w_proj=_uniform(rng, (d, d)),
            b_proj=Tensor(np.zeros(d), requires_grad=True),
        )
        for _ in range(n_layers)
    ])


def gcn_layer(a_hat: Tensor, h: Tensor, w_gcn: Tensor) -> Tensor:
    """One graph convolution, A_hat @ H @ W, with no activation."""
    return a_hat @ h @ w_gcn


def skip_gcn(a_hat: Tensor, x: Tensor, params: SkipGcnParams, inner_skip: bool = True) -> Tensor:
    """Stacked graph convolutions where each layer adds its input back before
    a projected ReLU."""
    h = x
    for layer in params.layers:
        conv = gcn_layer(a_hat, h, layer.w_gcn)
        pre = conv + h if inner_skip else conv
        h = ad.relu(pre @ layer.w_proj + layer.b_proj)
    return h


@dataclass
class MultiGcnParams:
    relations: dict[str, SkipGcnParams]  # insertion order fixes the concat order
    w_fuse: Tensor  # (|relations| * d, d)
    b_fuse: Tensor  # (d,)


def init_multi_gcn(rng: np.random.Generator, d: int, relations: list[str],
                   n_layers: int) -> MultiGcnParams:
    if not relations:
        raise ValueError("multi_gcn needs at least one relation")
    branches = {name: init_skip_gcn(rng, d, n_layers) for name in relations}
    return MultiGcnParams(
        relations=branches,
        w_fuse=_uniform(rng, (len(relations) * d, d)),
        b_fuse=Tensor(np.zeros(d), requires_grad=True),
    )


def multi_gcn(x: Tensor, adjacency: dict[str, Tensor], params: MultiGcnParams,
              inner_skip: bool = True, outer_skip: bool = True) -> Tensor:
    """Run one skip-GCN stack per relation, fuse the concatenated branch
    outputs through a tanh projection, then add the input back (outer skip)."""
    if not params.relations:
        raise ValueError("multi_gcn needs at least one relation")
    branches = []
    for name, branch in params.relations.items():
        if name not in adjacency:
            raise ValueError(f"multi_gcn: no adjacency supplied for relation '{name}'")
        branches.append(skip_gcn(adjacency[name], x, branch, inner_skip))
    fused = ad.tanh(ad.concat(branches, axis=1) @ params.w_fuse + params.b_fuse)
    return fused + x if outer_skip else fused


# ---------------------------------------------------------------------------
# differentiable graph construction (the semantic relation is built from the
# encoder's own outputs, so gradients flow through it)


def semantic_adjacency(x: Tensor, threshold: float = 0.0, detach: bool = False) -> Tensor:
    """|X X^T| over node embeddings; optional sparsification threshold, and an
    optional detach that blocks gradient flow through the graph weights."""
    a = ad.absolute(x @ ad.transpose(x))
    if threshold > 0.0:
        a = a * Tensor((a.data >= threshold).astype(np.float64))
    if detach:
        a = Tensor(a.data.copy())
    return a


def normalize_adjacency_t(a: Tensor) -> Tensor:
    """Differentiable twin of graphs.normalize_adjacency."""
    n = a.shape[0]
    b = a + Tensor(np.eye(n))
    inv_sqrt = ad.power(ad.sum(b, axis=1, keepdims=True), -0.5)  # (n, 1)
    outer = inv_sqrt * ad.transpose(inv_sqrt)
    return b * outer


def named_bilstm(prefix: str, params: BiLstmParams):
    for layer_i, (fw, bw) in enumerate(params.layers):
        for tag, direction in (("fw", fw), ("bw", bw)):
            yield f"{prefix}.l{layer_i}.{tag}.w_x", direction.w_x
            yield f"{prefix}.l{layer_i}.{tag}.w_h", direction.w_h
            yield f"{prefix}.l{layer_i}.{tag}.b", direction.b


def named_multi_gcn(prefix: str, params: MultiGcnParams):
    for relation, branch in params.relations.items():
        for layer_i, layer in enumerate(branch.layers):
            yield f"{prefix}.{relation}.l{layer_i}.w_gcn", layer.w_gcn
            yield f"{prefix}.{relation}.l{layer_i}.w_proj", layer.w_proj
            yield f"{prefix}.{relation}.l{layer_i}.b_proj", layer.b_proj
    yield f"{prefix}.fuse.w", params.w_fuse
    yield f"{prefix}.fuse.b", params.b_fuse
