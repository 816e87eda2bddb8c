"""Overfit coordinate generator network for whole coding units.

A small fully connected network maps a normalized (block x, block y, frame)
coordinate to all 1536 samples of one coding unit: 1024 luma in raster
order, then 256 Cb, then 256 Cr. The encoder overfits it on the source
blocks of one keyframe period, quantizes every layer to 10-bit integers
with one float32 scale per layer, and ships the result in the stream; the
decoder rebuilds blocks by evaluating the dequantized network at each
block's coordinate. ReLU is applied after every layer including the last,
which keeps outputs non-negative like the pixel values they model.

Everything here is plain float64 numpy: exact forward, exact backprop with
the ReLU subgradient taken as 0 at 0, and seeded deterministic training, so
the same inputs always produce the same network and the same pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    BLOCK,
    CHROMA_BLOCK,
    SAMPLES_PER_BLOCK,
    Block32,
    BlockCoord,
    round_half_away,
)

INPUT_SIZE = 3
OUTPUT_SIZE = SAMPLES_PER_BLOCK
MAX_LAYERS = 8
MAX_LAYER_SIZE = 4096
QUANT_MAX = 511  # symmetric 10-bit two's-complement range, -511..511

Params = list[tuple[np.ndarray, np.ndarray]]


def check_architecture(layer_sizes) -> tuple[int, ...]:
    """Validate codec-level caps; returns the sizes as a tuple."""
    sizes = tuple(int(s) for s in layer_sizes)
    if not 2 <= len(sizes) <= MAX_LAYERS:
        raise ValueError(f"layer count {len(sizes)} outside [2, {MAX_LAYERS}]")
    for s in sizes:
        if not 1 <= s <= MAX_LAYER_SIZE:
            raise ValueError(f"layer size {s} outside [1, {MAX_LAYER_SIZE}]")
    if sizes[0] != INPUT_SIZE:
        raise ValueError(f"input layer must have {INPUT_SIZE} units")
    if sizes[-1] != OUTPUT_SIZE:
        raise ValueError(f"output layer must have {OUTPUT_SIZE} units")
    return sizes


def param_count(layer_sizes) -> int:
    """Total weights plus biases: sum of out * (in + 1) over consecutive pairs."""
    sizes = [int(s) for s in layer_sizes]
    return sum(o * (i + 1) for i, o in zip(sizes[:-1], sizes[1:]))


HIDDEN_BIAS_INIT = 0.1
OUTPUT_BIAS_INIT = 0.5


def init_params(layer_sizes, seed) -> Params:
    """He-uniform weights (bound sqrt(6 / fan_in)), small positive biases, seeded.

    Biases start at 0.1 (hidden) and 0.5 (output) rather than zero: with the
    output ReLU and a subgradient of 0 at 0, a unit whose pre-activation is
    never positive receives no gradient and stays dead, and zero biases leave
    a large fraction of output units dead at init (fatally so for a
    one-sample dataset at the origin, where every pre-activation is exactly
    the bias). The small hidden bias keeps activations compact so output
    pre-activations cluster around the output bias, which sits at mid-gray
    in the [0, 1] target range; every output unit starts alive.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    params: Params = []
    sizes = [int(s) for s in layer_sizes]
    last = len(sizes) - 2
    for li, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        bound = math.sqrt(6.0 / fan_in)
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        b = np.full(fan_out, OUTPUT_BIAS_INIT if li == last else HIDDEN_BIAS_INIT)
        params.append((w, b))
    return params


def forward(params: Params, x: np.ndarray) -> np.ndarray:
    """Evaluate the network; accepts one input vector or a batch of rows."""
    a = np.asarray(x, dtype=np.float64)
    single = a.ndim == 1
    if single:
        a = a[None, :]
    for w, b in params:
        a = a @ w.T + b
        np.maximum(a, 0.0, out=a)
    return a[0] if single else a


def loss(params: Params, inputs: np.ndarray, targets: np.ndarray) -> float:
    """Mean over samples and outputs of squared error against [0, 1] targets."""
    diff = forward(params, inputs) - np.asarray(targets, dtype=np.float64)
    return float(np.mean(diff * diff))


def backward(params: Params, inputs: np.ndarray, targets: np.ndarray) -> Params:
    """Exact gradients of loss() for every weight and bias.

    The ReLU subgradient at exactly 0 is taken as 0, matching forward(),
    where a unit at 0 contributes nothing downstream.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    t = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    acts = [x]
    a = x
    for w, b in params:
        a = np.maximum(a @ w.T + b, 0.0)
        acts.append(a)
    n, k = t.shape
    # d(mean squared error)/d(output), masked by the output ReLU.
    delta = 2.0 * (acts[-1] - t) / (n * k)
    delta = delta * (acts[-1] > 0.0)
    grads: Params = [None] * len(params)  # type: ignore[list-item]
    for li in range(len(params) - 1, -1, -1):
        grads[li] = (delta.T @ acts[li], delta.sum(axis=0))
        if li:
            delta = (delta @ params[li][0]) * (acts[li] > 0.0)
    return grads


@dataclass
class TrainConfig:
    """Optimizer settings; the defaults overfit one period at full quality."""

    optimizer: str = "adam"
    lr: float = 1e-3
    steps: int = 5000
    batch_size: int | None = None  # None: full batch up to 1024 samples
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def train(layer_sizes, inputs: np.ndarray, targets: np.ndarray,
          cfg: TrainConfig | None = None) -> Params:
    """Overfit the network on (input, target) rows; fully seeded and repeatable.

    Runs exactly cfg.steps optimizer updates. Datasets at or below the batch
    size train full batch; larger ones are visited in seeded shuffled
    minibatches, reshuffled each epoch.
    """
    cfg = cfg or TrainConfig()
    x = np.asarray(inputs, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if x.ndim != 2 or t.ndim != 2 or x.shape[0] != t.shape[0] or x.shape[0] == 0:
        raise ValueError("inputs and targets must be matching non-empty batches")
    if cfg.optimizer not in ("sgd", "adam"):
        raise ValueError(f"unknown optimizer: {cfg.optimizer}")
    if cfg.steps < 0 or cfg.lr <= 0:
        raise ValueError("steps must be >= 0 and lr > 0")

    rng = np.random.default_rng(cfg.seed)
    params = init_params(layer_sizes, rng)
    n = x.shape[0]
    batch = cfg.batch_size if cfg.batch_size else 1024
    full = n <= batch

    if cfg.optimizer == "adam":
        m = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]
        v = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]

    order = np.empty(0, dtype=np.int64)
    cursor = 0
    for step in range(cfg.steps):
        if full:
            bx, bt = x, t
        else:
            if cursor + batch > len(order):
                order = rng.permutation(n)
                cursor = 0
            idx = order[cursor:cursor + batch]
            cursor += batch
            bx, bt = x[idx], t[idx]
        grads = backward(params, bx, bt)
        if cfg.optimizer == "sgd":
            params = [(w - cfg.lr * gw, b - cfg.lr * gb)
                      for (w, b), (gw, gb) in zip(params, grads)]
        else:
            tstep = step + 1
            bc1 = 1.0 - cfg.beta1 ** tstep
            bc2 = 1.0 - cfg.beta2 ** tstep
            new_params = []
            for li, ((w, b), (gw, gb)) in enumerate(zip(params, grads)):
                mw, mb = m[li]
                vw, vb = v[li]
                mw = cfg.beta1 * mw + (1.0 - cfg.beta1) * gw
                mb = cfg.beta1 * mb + (1.0 - cfg.beta1) * gb
                vw = cfg.beta2 * vw + (1.0 - cfg.beta2) * (gw * gw)
                vb = cfg.beta2 * vb + (1.0 - cfg.beta2) * (gb * gb)
                m[li] = (mw, mb)
                v[li] = (vw, vb)
                w = w - cfg.lr * (mw / bc1) / (np.sqrt(vw / bc2) + cfg.eps)
                b = b - cfg.lr * (mb / bc1) / (np.sqrt(vb / bc2) + cfg.eps)
                new_params.append((w, b))
            params = new_params
    return params


@dataclass
class QuantizedLayer:
    weights: np.ndarray  # (out, in) int16, each in [-511, 511]
    biases: np.ndarray  # (out,) int16
    scale: np.float32  # > 0; dequantized value = level * scale


@dataclass
class QuantizedGnnParams:
    layers: list[QuantizedLayer]

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        sizes = [self.layers[0].weights.shape[1]]
        sizes += [l.weights.shape[0] for l in self.layers]
        return tuple(sizes)


def quantize_params(params: Params) -> QuantizedGnnParams:
    """10-bit symmetric quantization, one shared scale per layer.

    The scale is max |value| / 511 stored as float32 (1.0 for an all-zero
    layer), so dequantization error stays within scale / 2 per value.
    """
    layers = []
    for w, b in params:
        amax = max(float(np.max(np.abs(w))), float(np.max(np.abs(b))))
        if not math.isfinite(amax):
            raise ValueError("non-finite parameter value")
        scale = np.float32(amax / QUANT_MAX) if amax > 0.0 else np.float32(1.0)
        qw = np.clip(round_half_away(w / float(scale)), -QUANT_MAX, QUANT_MAX)
        qb = np.clip(round_half_away(b / float(scale)), -QUANT_MAX, QUANT_MAX)
        layers.append(QuantizedLayer(qw.astype(np.int16), qb.astype(np.int16), scale))
    return QuantizedGnnParams(layers)


def dequantize_params(qp: QuantizedGnnParams) -> Params:
    return [
        (l.weights.astype(np.float64) * float(l.scale),
         l.biases.astype(np.float64) * float(l.scale))
        for l in qp.layers
    ]


@dataclass(frozen=True)
class SetContext:
    """Geometry a parameter set was trained against.

    Inputs normalize block coordinates by the grid and the frame index by
    the set's span; the frame index restarts at the set's first frame.
    """

    cols: int
    rows: int
    start_frame: int
    span: int


def gnn_input(ctx: SetContext, c: BlockCoord, frame_idx: int) -> np.ndarray:
    fx = c.bx / (ctx.cols - 1) if ctx.cols > 1 else 0.0
    fy = c.by / (ctx.rows - 1) if ctx.rows > 1 else 0.0
    ft = (frame_idx - ctx.start_frame) / max(1, ctx.span - 1)
    return np.array([fx, fy, ft], dtype=np.float64)


def block_to_targets(block: Block32) -> np.ndarray:
    """Flatten a coding unit to 1536 training targets in [0, 1]."""
    return np.concatenate([
        block.y.reshape(-1), block.cb.reshape(-1), block.cr.reshape(-1)
    ]).astype(np.float64) / 255.0


def outputs_to_block(outputs: np.ndarray) -> Block32:
    """Map 1536 network outputs back to pixels: round half away, clamp to 8 bits."""
    if outputs.shape != (OUTPUT_SIZE,):
        raise ValueError(f"expected {OUTPUT_SIZE} outputs, got {outputs.shape}")
    pix = np.clip(round_half_away(outputs * 255.0), 0, 255).astype(np.uint8)
    ny = BLOCK * BLOCK
    nc = CHROMA_BLOCK * CHROMA_BLOCK
    return Block32(
        pix[:ny].reshape(BLOCK, BLOCK),
        pix[ny:ny + nc].reshape(CHROMA_BLOCK, CHROMA_BLOCK),
        pix[ny + nc:].reshape(CHROMA_BLOCK, CHROMA_BLOCK),
    )


def generate_block(qparams: QuantizedGnnParams, c: BlockCoord,
                   frame_idx: int, ctx: SetContext) -> Block32:
    """Decode one coding unit from the quantized network.

    Dequantizes, evaluates at the block's normalized coordinate, and maps
    outputs to pixels. Encoder and decoder both call exactly this, so
    generated blocks can never drift between the two.
    """
    params = dequantize_params(qparams)
    return outputs_to_block(forward(params, gnn_input(ctx, c, frame_idx)))
