"""Two-stage fine-tuning of a mapping over the AWGN pipeline.

The pipeline per batch of reals ``x``::

    clip -> pair -> map -> power-normalize -> AWGN -> undo scale
         -> affine decoder (gain, bias) -> mean squared error vs x

Stage 1 trains the mapping parameters with the decoder frozen; stage 2
trains the decoder with the mapping frozen. Gradients are hand-derived:
the mapped values enter the loss through the smooth backward stand-in
(straight-through), and the per-batch normalization scale is treated as a
constant during differentiation, so the mapping upstream gradient is simply
``gain * (2/B) * (xhat - x)`` routed through the stand-in jacobians.
"""

import csv
import dataclasses
import json
import math
from typing import NamedTuple

import numpy as np

from . import kernels
from .channel import ChannelConfig, awgn_transmit
from .core import power_normalize
from .errors import SchemaError
from .mic import MicParams
from .mrc import MrcParams
from .params import (
    clip_range,
    map_block,
    params_vector,
    replace_params_vector,
    warn_if_deinterleaved,
    with_delta,
)
from .sources import SourceSpec, gen_source


@dataclasses.dataclass(frozen=True)
class AffineDecoder:
    """Receiver-side affine correction ``xhat = gain * r + bias``."""

    gain: float = 1.0
    bias: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "gain", float(self.gain))
        object.__setattr__(self, "bias", float(self.bias))
        if not (math.isfinite(self.gain) and math.isfinite(self.bias)):
            raise ValueError("decoder parameters must be finite")


@dataclasses.dataclass(frozen=True)
class AdamState:
    """First/second moment accumulators plus hyperparameters."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, n: int, lr: float = 1e-3) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), lr=lr)


def adam_step(params, grads, state: AdamState):
    """One bias-corrected update; returns (new params, new state)."""
    p = np.asarray(params, dtype=np.float64)
    g = np.asarray(grads, dtype=np.float64)
    if p.shape != g.shape or p.shape != state.m.shape:
        raise ValueError(
            f"shape mismatch: params {p.shape}, grads {g.shape}, state {state.m.shape}"
        )
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    mhat = m / (1.0 - state.beta1**t)
    vhat = v / (1.0 - state.beta2**t)
    new = p - state.lr * mhat / (np.sqrt(vhat) + state.eps)
    return new, dataclasses.replace(state, m=m, v=v, t=t)


@dataclasses.dataclass(frozen=True)
class StageSchedule:
    """Iteration count and a step-decay learning-rate schedule."""

    iters: int
    lr: float = 1e-3
    milestones: tuple = ()
    factor: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "milestones", tuple(int(v) for v in self.milestones))
        if self.iters < 0:
            raise ValueError("iters must be non-negative")
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if not 0 < self.factor <= 1:
            raise ValueError("factor must lie in (0, 1]")
        if any(v < 0 for v in self.milestones) or list(self.milestones) != sorted(
            self.milestones
        ):
            raise ValueError("milestones must be sorted and non-negative")

    def lr_at(self, i: int) -> float:
        drops = sum(1 for ms in self.milestones if i >= ms)
        return self.lr * self.factor**drops


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    """Both stage schedules plus batch, channel and reproducibility knobs.

    ``delta`` overrides the mapping's stored softness when set. Batches are
    pairs of reals per complex symbol, so ``batch_size`` must be even.
    """

    stage1: StageSchedule = StageSchedule(2000, 1e-3, (500, 1500))
    stage2: StageSchedule = StageSchedule(1000, 1e-3, (700,))
    batch_size: int = 32
    snr_train_db: float = 10.0
    seed: int = 0
    delta: float = None

    def __post_init__(self):
        if self.batch_size < 2 or self.batch_size % 2:
            raise ValueError(f"batch_size must be even and >= 2, got {self.batch_size}")


@dataclasses.dataclass(frozen=True)
class LossAndGrads:
    loss: float
    mapping_grad: np.ndarray
    decoder_grad: np.ndarray  # (d/d gain, d/d bias)


class TrainResult(NamedTuple):
    mapping: object
    decoder: AffineDecoder
    history: list  # (iteration, stage, loss) rows


def _interleave(re, im):
    out = np.empty(re.size + im.size)
    out[0::2] = re
    out[1::2] = im
    return out


def _soft_path(mapping, pre, pim):
    """Soft values plus a closure contracting upstream gradients into the
    flat mapping-parameter vector (matching params_vector layout)."""
    if mapping is None:
        return pre, pim, lambda gre, gim: np.zeros(0)
    if isinstance(mapping, MrcParams):
        lv = mapping.levels
        ybr, _, gdr = kernels.mrc_backward_grad_block(
            pre, mapping.boundaries_re.boundaries, lv.levels, mapping.delta
        )
        ybi, _, gdi = kernels.mrc_backward_grad_block(
            pim, mapping.boundaries_im.boundaries, lv.levels, mapping.delta
        )
        return ybr, ybi, lambda gre, gim: np.concatenate([gre @ gdr, gim @ gdi])
    if isinstance(mapping, MicParams):
        pts = mapping.constellation.points
        cre = np.ascontiguousarray(pts[:, 0])
        cim = np.ascontiguousarray(pts[:, 1])
        bre, bim, _, jc = kernels.mic_backward_grad_block(pre, pim, cre, cim, mapping.delta)

        def pack(gre, gim):
            g = np.stack([gre, gim], axis=1)
            return np.einsum("io,iojq->jq", g, jc).ravel()

        return bre, bim, pack
    # qam: hard value is its own stand-in; nothing is trainable.
    yre, yim, _ = map_block(mapping, pre, pim)
    return yre, yim, lambda gre, gim: np.zeros(0)


def run_pipeline(
    batch,
    mapping,
    channel: ChannelConfig,
    decoder: AffineDecoder,
    *,
    noise_stream: int = 0,
    frozen_scale: float = None,
):
    """Gradient-free pass through the pipeline; returns the decoded block."""
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 1 or x.size == 0 or (mapping is not None and x.size % 2):
        raise ValueError("batch must be a non-empty 1-D block, even-length when mapped")
    v_min, v_max = clip_range(mapping)
    xc = np.clip(x, v_min, v_max)
    if mapping is None:
        y = xc
    else:
        yre, yim, _ = map_block(mapping, xc[0::2], xc[1::2])
        y = _interleave(yre, yim)
    if frozen_scale is None:
        _, scale = power_normalize(y, channel.power)
    else:
        scale = float(frozen_scale)
    received = awgn_transmit(scale * y, channel, stream=noise_stream) / scale
    return decoder.gain * received + decoder.bias


def end_to_end_loss(
    batch,
    mapping,
    channel: ChannelConfig,
    decoder: AffineDecoder,
    *,
    noise_stream: int = 0,
    frozen_scale: float = None,
    mode: str = "straight-through",
) -> LossAndGrads:
    """Mean squared reconstruction error and its hand-derived gradients.

    ``mode="straight-through"`` (training) transmits the hard-mapped values;
    ``mode="soft"`` transmits the smooth stand-in itself, which makes the
    loss differentiable end to end and is what finite-difference checks
    probe. Gradients w.r.t. the mapping are identical expressions in both
    modes, evaluated around the respective transmitted values. Pass
    ``frozen_scale`` to pin the normalization scale (it is treated as a
    constant by the gradient either way).
    """
    if mode not in ("straight-through", "soft"):
        raise ValueError(f"unknown mode: {mode!r}")
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 1 or x.size == 0 or x.size % 2:
        raise ValueError("batch must be a non-empty, even-length 1-D block")
    v_min, v_max = clip_range(mapping)
    xc = np.clip(x, v_min, v_max)
    pre = xc[0::2]
    pim = xc[1::2]

    sre, sim, pack = _soft_path(mapping, pre, pim)
    if mode == "soft":
        y = _interleave(sre, sim)
    elif mapping is None:
        y = xc
    else:
        yre, yim, _ = map_block(mapping, pre, pim)
        y = _interleave(yre, yim)

    if frozen_scale is None:
        _, scale = power_normalize(y, channel.power)
    else:
        scale = float(frozen_scale)
    received = awgn_transmit(scale * y, channel, stream=noise_stream) / scale
    xhat = decoder.gain * received + decoder.bias

    resid = xhat - x
    b = x.size
    loss = float(resid @ resid) / b
    gout = (2.0 / b) * resid
    decoder_grad = np.array([float(gout @ received), float(np.sum(gout))])
    gmap = decoder.gain * gout
    mapping_grad = pack(gmap[0::2], gmap[1::2])
    return LossAndGrads(loss, mapping_grad, decoder_grad)


def train(config: TrainConfig, mapping, source: SourceSpec) -> TrainResult:
    """Two-stage fine-tune; returns the trained mapping, decoder and history.

    Batches and noise are keyed by (config.seed, global iteration), so the
    whole run is reproducible bit for bit. Stage 1 leaves the decoder at
    (1, 0); stage 2 leaves the mapping untouched.
    """
    if config.delta is not None:
        mapping = with_delta(mapping, config.delta)
    decoder = AffineDecoder()
    channel = ChannelConfig(config.snr_train_db, 1.0, config.seed)
    history = []
    iteration = 0

    vec = params_vector(mapping)
    state = AdamState.init(vec.size, config.stage1.lr)
    for i in range(config.stage1.iters):
        lr = config.stage1.lr_at(i)
        if lr != state.lr:
            state = dataclasses.replace(state, lr=lr)
        batch = gen_source(source, config.batch_size, config.seed, stream=iteration)
        res = end_to_end_loss(batch, mapping, channel, decoder, noise_stream=iteration)
        history.append((iteration, 1, res.loss))
        if vec.size:
            vec, state = adam_step(vec, res.mapping_grad, state)
            mapping = replace_params_vector(mapping, vec)
        iteration += 1
    warn_if_deinterleaved(mapping, "after stage 1")

    dvec = np.array([decoder.gain, decoder.bias])
    dstate = AdamState.init(2, config.stage2.lr)
    for i in range(config.stage2.iters):
        lr = config.stage2.lr_at(i)
        if lr != dstate.lr:
            dstate = dataclasses.replace(dstate, lr=lr)
        batch = gen_source(source, config.batch_size, config.seed, stream=iteration)
        res = end_to_end_loss(batch, mapping, channel, decoder, noise_stream=iteration)
        history.append((iteration, 2, res.loss))
        dvec, dstate = adam_step(dvec, res.decoder_grad, dstate)
        decoder = AffineDecoder(float(dvec[0]), float(dvec[1]))
        iteration += 1

    return TrainResult(mapping, decoder, history)


def write_history_csv(history, path) -> None:
    """Training history as CSV with columns (iteration, stage, loss)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "stage", "loss"])
        for iteration, stage, loss in history:
            writer.writerow([iteration, stage, repr(float(loss))])


def save_decoder(path, decoder: AffineDecoder) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"type": "affine_decoder", "gain": decoder.gain, "bias": decoder.bias}, fh)
        fh.write("\n")


def load_decoder(path) -> AffineDecoder:
    from .params import _expect_mapping, _number

    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"decoder: not valid JSON ({exc})") from exc
    _expect_mapping(obj, "decoder")
    if obj.get("type") != "affine_decoder":
        raise SchemaError(f"decoder.type: expected 'affine_decoder', got {obj.get('type')!r}")
    return AffineDecoder(_number(obj.get("gain"), "decoder.gain"), _number(obj.get("bias"), "decoder.bias"))
