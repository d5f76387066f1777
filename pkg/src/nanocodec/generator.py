"""Encoder/decoder graph construction, execution, and graph analysis.

Graphs are ordered node lists (convolutions, activations, residual blocks,
projections) built from a CodecConfig.  Node names double as weight-file
keys:

    enc.pre                      initial conv (1 -> C0)
    enc.block{b}.layer{l}.conv{1,2}   residual convs (dilated, then unit)
    enc.down{b}                  strided downsampler (C -> 2C, kernel 2*stride)
    enc.proj                     terminal projection to the FSQ latent width
    dec.proj                     latent projection (latent -> D0, kernel 3)
    dec.up{b}                    transposed upsampler (C -> C/2, kernel 2*rate)
    dec.block{b}.layer{l}.conv{1,2}
    dec.post                     final conv to 1 audio channel (kernel 7)

Each conv node owns ``<name>.weight`` (out, in, kernel) and ``<name>.bias``;
each snake activation owns ``<name>.alpha`` (one scalar per channel).  The
decoder ends in a fixed tanh that clamps output to (-1, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional

import numpy as np

from .config import CodecConfig, frame_rate_of, validate_or_raise
from .kernels import (F32, ConvKernel, ConvSpec, ConvTransposedKernel,
                      default_tile, leaky_relu_tc, snake_tc, tanh_tc)

LEAKY_SLOPE = np.float32(0.1)

ENCODER_PRE_KERNEL = 7
DECODER_PROJ_KERNEL = 3
DECODER_POST_KERNEL = 7


@dataclass(frozen=True)
class ConvNode:
    name: str
    spec: ConvSpec
    tile: int

    @property
    def weight_shape(self) -> tuple[int, int, int]:
        return (self.spec.out_channels, self.spec.in_channels, self.spec.kernel_size)


@dataclass(frozen=True)
class ActNode:
    name: str
    kind: str          # "leaky_relu" | "snake" | "tanh"
    channels: int

    @property
    def alpha_key(self) -> Optional[str]:
        return f"{self.name}.alpha" if self.kind == "snake" else None


@dataclass(frozen=True)
class ResidualLayer:
    act1: ActNode
    conv1: ConvNode    # dilated
    act2: ActNode
    conv2: ConvNode    # dilation 1


@dataclass(frozen=True)
class ResidualBlockNode:
    name: str
    channels: int
    layers: tuple[ResidualLayer, ...]


Node = object  # ConvNode | ActNode | ResidualBlockNode


@dataclass(frozen=True)
class GeneratorGraph:
    direction: str                 # "encoder" | "decoder"
    nodes: tuple[Node, ...]
    config: CodecConfig

    def conv_nodes(self) -> Iterator[ConvNode]:
        for node in self.nodes:
            if isinstance(node, ConvNode):
                yield node
            elif isinstance(node, ResidualBlockNode):
                for lay in node.layers:
                    yield lay.conv1
                    yield lay.conv2

    def act_nodes(self) -> Iterator[ActNode]:
        for node in self.nodes:
            if isinstance(node, ActNode):
                yield node
            elif isinstance(node, ResidualBlockNode):
                for lay in node.layers:
                    yield lay.act1
                    yield lay.act2

    @property
    def fully_causal(self) -> bool:
        return all(c.spec.causal for c in self.conv_nodes())


class GraphError(ValueError):
    pass


def _res_block(prefix: str, channels: int, config: CodecConfig, causal: bool,
               act_kind: str, tile: int) -> ResidualBlockNode:
    k = config.residual_kernel_size
    layers = []
    for j, d in enumerate(config.residual_dilations):
        base = f"{prefix}.layer{j}"
        layers.append(ResidualLayer(
            act1=ActNode(f"{base}.act1", act_kind, channels),
            conv1=ConvNode(f"{base}.conv1",
                           ConvSpec(channels, channels, k, 1, d, causal=causal),
                           tile),
            act2=ActNode(f"{base}.act2", act_kind, channels),
            conv2=ConvNode(f"{base}.conv2",
                           ConvSpec(channels, channels, k, 1, 1, causal=causal),
                           tile),
        ))
    return ResidualBlockNode(prefix, channels, tuple(layers))


def build_encoder(config: CodecConfig) -> GeneratorGraph:
    validate_or_raise(config)
    causal = config.encoder_causal
    nodes: list[Node] = []
    ch = config.encoder_initial_channels
    nodes.append(ConvNode("enc.pre",
                          ConvSpec(1, ch, ENCODER_PRE_KERNEL, 1, 1, causal=causal),
                          default_tile(1)))
    period = 1
    for i, s in enumerate(config.encoder_strides):
        nodes.append(_res_block(f"enc.block{i}", ch, config, causal,
                                "leaky_relu", default_tile(period)))
        nodes.append(ActNode(f"enc.down{i}.act", "leaky_relu", ch))
        nodes.append(ConvNode(f"enc.down{i}",
                              ConvSpec(ch, ch * 2, 2 * s, s, 1, causal=causal),
                              default_tile(period * s)))
        ch *= 2
        period *= s
    nodes.append(ActNode("enc.proj.act", "leaky_relu", ch))
    nodes.append(ConvNode("enc.proj",
                          ConvSpec(ch, config.fsq.latent_dim, 1, 1, 1, causal=causal),
                          default_tile(period)))
    return GeneratorGraph("encoder", tuple(nodes), config)


def build_decoder(config: CodecConfig) -> GeneratorGraph:
    validate_or_raise(config)
    causal = config.decoder_causal
    nodes: list[Node] = []
    ch = config.decoder_initial_channels
    hop = config.hop_samples
    nodes.append(ConvNode("dec.proj",
                          ConvSpec(config.fsq.latent_dim, ch, DECODER_PROJ_KERNEL,
                                   1, 1, causal=causal),
                          default_tile(hop)))
    period = hop
    for i, u in enumerate(config.decoder_upsample_rates):
        nodes.append(ActNode(f"dec.up{i}.act", "snake", ch))
        nodes.append(ConvNode(f"dec.up{i}",
                              ConvSpec(ch, ch // 2, 2 * u, u, 1, causal=causal,
                                       transposed=True),
                              default_tile(period // u)))
        ch //= 2
        period //= u
        nodes.append(_res_block(f"dec.block{i}", ch, config, causal,
                                "snake", default_tile(period)))
    nodes.append(ActNode("dec.post.act", "snake", ch))
    nodes.append(ConvNode("dec.post",
                          ConvSpec(ch, 1, DECODER_POST_KERNEL, 1, 1, causal=causal),
                          default_tile(period)))
    nodes.append(ActNode("dec.out", "tanh", 1))
    return GeneratorGraph("decoder", tuple(nodes), config)


# --------------------------------------------------------------------------
# Shape plan and parameter counting.
# --------------------------------------------------------------------------

def shape_plan(graph: GeneratorGraph) -> dict[str, tuple[int, ...]]:
    """Ordered name -> tensor shape map for every parameter in the graph."""
    plan: dict[str, tuple[int, ...]] = {}

    def add_conv(c: ConvNode):
        plan[f"{c.name}.weight"] = c.weight_shape
        plan[f"{c.name}.bias"] = (c.spec.out_channels,)

    def add_act(a: ActNode):
        if a.alpha_key:
            plan[a.alpha_key] = (a.channels,)

    for node in graph.nodes:
        if isinstance(node, ConvNode):
            add_conv(node)
        elif isinstance(node, ActNode):
            add_act(node)
        elif isinstance(node, ResidualBlockNode):
            for lay in node.layers:
                add_act(lay.act1)
                add_conv(lay.conv1)
                add_act(lay.act2)
                add_conv(lay.conv2)
    return plan


def parameter_count(graph: GeneratorGraph) -> int:
    return sum(math.prod(shape) for shape in shape_plan(graph).values())


# --------------------------------------------------------------------------
# Lookahead (right-side receptive field) analysis.
# --------------------------------------------------------------------------

def _conv_future_steps(spec: ConvSpec) -> int:
    """Worst-case future reach of one layer, in its own input steps."""
    if spec.transposed:
        trim_total = max(spec.kernel_size - spec.stride, 0)
        trim_left = 0 if spec.causal else (trim_total + 1) // 2
        return -(-trim_left // spec.stride)
    reach = (spec.kernel_size - 1) * spec.dilation
    pad_left = reach if spec.causal else reach // 2
    return reach - pad_left


def lookahead_frames(graph: GeneratorGraph, config: CodecConfig) -> Fraction:
    """Future context the graph needs before its earliest output is final,
    in latent frames (sum of per-layer future reach mapped through the
    stride/upsample factors).  Exactly 0 for fully causal graphs."""
    hop = config.hop_samples
    if graph.direction == "encoder":
        period = 1  # audio samples per step at the current depth
        total_samples = Fraction(0)
        for c in graph.conv_nodes():
            total_samples += _conv_future_steps(c.spec) * period
            period *= c.spec.stride
        return total_samples / hop
    steps_per_frame = 1
    total_frames = Fraction(0)
    for c in graph.conv_nodes():
        total_frames += Fraction(_conv_future_steps(c.spec), steps_per_frame)
        if c.spec.transposed:
            steps_per_frame *= c.spec.stride
    return total_frames


def lookahead_ms(graph: GeneratorGraph, config: CodecConfig) -> Fraction:
    return lookahead_frames(graph, config) / frame_rate_of(config) * 1000


# --------------------------------------------------------------------------
# Execution.
# --------------------------------------------------------------------------

class Runner:
    """Binds a graph to weights; spawns independent streaming sessions.

    Weights stay read-only and shared; every Session owns its own per-layer
    state and scratch buffers."""

    def __init__(self, graph: GeneratorGraph, weights: dict[str, np.ndarray]):
        self.graph = graph
        plan = shape_plan(graph)
        missing = [k for k in plan if k not in weights]
        if missing:
            raise GraphError(f"missing weights for nodes: {missing[:4]}"
                             + ("..." if len(missing) > 4 else ""))
        for key, shape in plan.items():
            got = tuple(weights[key].shape)
            if got != shape:
                raise GraphError(
                    f"weight {key!r} has shape {got}, plan requires {shape}")
        self._kernels: dict[str, object] = {}
        self._alphas: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        for c in graph.conv_nodes():
            w = np.ascontiguousarray(weights[f"{c.name}.weight"], dtype=F32)
            b = np.ascontiguousarray(weights[f"{c.name}.bias"], dtype=F32)
            if c.spec.transposed:
                self._kernels[c.name] = ConvTransposedKernel(
                    c.spec, w, b, tile_frames=max(16, c.tile // c.spec.stride))
            else:
                self._kernels[c.name] = ConvKernel(c.spec, w, b, tile=c.tile)
        for a in graph.act_nodes():
            if a.alpha_key:
                alpha = np.ascontiguousarray(weights[a.alpha_key], dtype=F32)
                if np.any(alpha <= 0):
                    raise GraphError(f"{a.alpha_key}: snake alpha must be positive")
                self._alphas[a.alpha_key] = (alpha, np.float32(1.0) / alpha)

    def session(self) -> "Session":
        return Session(self)


class Session:
    """One streaming pass over a Runner's graph (single owner)."""

    def __init__(self, runner: Runner):
        self.runner = runner
        self.graph = runner.graph
        self._states = {name: kern.new_state()
                        for name, kern in runner._kernels.items()}

    def _act(self, node: ActNode, x: np.ndarray, owned: bool) -> np.ndarray:
        if not owned:
            x = x.copy()
        if node.kind == "leaky_relu":
            return leaky_relu_tc(x, LEAKY_SLOPE)
        if node.kind == "snake":
            alpha, inv_alpha = self.runner._alphas[node.alpha_key]
            return snake_tc(x, alpha, inv_alpha)
        if node.kind == "tanh":
            return tanh_tc(x)
        raise GraphError(f"unknown activation {node.kind}")

    def process(self, x_tc: np.ndarray, final: bool = False) -> np.ndarray:
        """Push a time-major (m, C) chunk through the whole graph."""
        kernels = self.runner._kernels
        states = self._states
        for node in self.graph.nodes:
            if isinstance(node, ConvNode):
                x_tc = kernels[node.name].process(states[node.name], x_tc, final)
            elif isinstance(node, ActNode):
                x_tc = self._act(node, x_tc, owned=True)
            else:  # residual block
                for lay in node.layers:
                    t = self._act(lay.act1, x_tc, owned=False)
                    t = kernels[lay.conv1.name].process(states[lay.conv1.name], t, final)
                    t = self._act(lay.act2, t, owned=True)
                    t = kernels[lay.conv2.name].process(states[lay.conv2.name], t, final)
                    if t.shape[0] != x_tc.shape[0]:
                        raise GraphError(
                            f"residual misalignment in {node.name}: skip "
                            f"{x_tc.shape[0]} rows vs conv path {t.shape[0]}")
                    np.add(t, x_tc, out=t)
                    x_tc = t
        return x_tc


# --------------------------------------------------------------------------
# Offline passes.
# --------------------------------------------------------------------------

def pad_to_hop(audio: np.ndarray, hop: int) -> np.ndarray:
    """Right-pad a mono sample vector with zeros to a whole number of hops."""
    n = len(audio)
    target = -(-n // hop) * hop if n else 0
    if target == n:
        return np.asarray(audio, dtype=F32)
    out = np.zeros(target, dtype=F32)
    out[:n] = audio
    return out


def encode_audio(runner: Runner, audio: np.ndarray) -> np.ndarray:
    """audio (n,) float32 -> latent frames (num_frames, latent_dim);
    num_frames = ceil(n / hop)."""
    if runner.graph.direction != "encoder":
        raise GraphError("encode_audio requires an encoder runner")
    audio = np.asarray(audio, dtype=F32).reshape(-1)
    if audio.size == 0:
        raise GraphError("empty audio")
    if not np.all(np.isfinite(audio)):
        raise GraphError("audio contains NaN or Inf")
    hop = runner.graph.config.hop_samples
    x = pad_to_hop(audio, hop)
    sess = runner.session()
    return sess.process(np.ascontiguousarray(x[:, None]), final=True)


def decode_latents(runner: Runner, latents: np.ndarray) -> np.ndarray:
    """latent frames (num_frames, latent_dim) -> mono samples
    (num_frames * hop,)."""
    if runner.graph.direction != "decoder":
        raise GraphError("decode_latents requires a decoder runner")
    latents = np.asarray(latents, dtype=F32)
    dim = runner.graph.config.fsq.latent_dim
    if latents.ndim != 2 or latents.shape[1] != dim:
        raise GraphError(
            f"latents must be (frames, {dim}), got {tuple(latents.shape)}")
    if latents.shape[0] == 0:
        return np.zeros(0, dtype=F32)
    sess = runner.session()
    out = sess.process(np.ascontiguousarray(latents), final=True)
    return np.ascontiguousarray(out[:, 0])
