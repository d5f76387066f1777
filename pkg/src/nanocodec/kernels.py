"""Framework-free 1-D convolution kernels with exact streaming semantics.

The engine computes convolutions in fixed-width output tiles aligned to
absolute stream positions.  Every GEMM call therefore has an identical shape
and an identical per-position slot no matter how the input was chunked, which
makes streaming output bit-identical to one-shot output (a BLAS GEMM result
for one output position depends only on that position's input window, its
slot, and the call shape; accumulation across kernel taps happens in fixed
tap order outside the GEMM).

Public array convention: feature maps are float32 matrices of shape
(channels, length).  Weights are (out_channels, in_channels, kernel);
transposed convolutions use the same layout, where tap k contributes to
output position stride*t + k.  Internally everything runs time-major (T, C).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

F32 = np.float32


class KernelError(ValueError):
    """Shape or contract violation in a kernel call."""


@dataclass(frozen=True)
class ConvSpec:
    in_channels: int
    out_channels: int
    kernel_size: int
    stride: int = 1
    dilation: int = 1
    causal: bool = False
    transposed: bool = False

    def __post_init__(self):
        for name in ("in_channels", "out_channels", "kernel_size", "stride", "dilation"):
            if getattr(self, name) <= 0:
                raise KernelError(f"{name} must be positive, got {getattr(self, name)}")
        if self.transposed and self.dilation != 1:
            raise KernelError("transposed convolutions support dilation 1 only")


def _check_weights(spec: ConvSpec, weights: np.ndarray, bias: np.ndarray):
    expect = (spec.out_channels, spec.in_channels, spec.kernel_size)
    if tuple(weights.shape) != expect:
        raise KernelError(
            f"weight shape {tuple(weights.shape)} does not match spec "
            f"(out={expect[0]}, in={expect[1]}, kernel={expect[2]})")
    if bias.shape != (spec.out_channels,):
        raise KernelError(
            f"bias shape {tuple(bias.shape)} != ({spec.out_channels},)")


def _check_input(spec: ConvSpec, x: np.ndarray):
    if x.ndim != 2:
        raise KernelError(f"feature map must be 2-D (channels, length), got {x.shape}")
    if x.shape[0] != spec.in_channels:
        raise KernelError(
            f"input has {x.shape[0]} channels, spec.in_channels={spec.in_channels}")


def default_tile(output_period: int) -> int:
    """Tile width (output positions per GEMM call) by output rate;
    output_period = original audio samples per output step of the layer."""
    if output_period <= 2:
        return 2048
    if output_period <= 8:
        return 1024
    if output_period <= 64:
        return 256
    return 64


# --------------------------------------------------------------------------
# Plain convolution (causal and noncausal), tiled.
# --------------------------------------------------------------------------

class ConvKernel:
    """One conv layer bound to weights; shareable read-only across streams.
    Mutable per-stream scratch lives in ConvState."""

    def __init__(self, spec: ConvSpec, weights: np.ndarray, bias: np.ndarray,
                 tile: int = 1024):
        if spec.transposed:
            raise KernelError("use ConvTransposedKernel for transposed specs")
        weights = np.asarray(weights, dtype=F32)
        bias = np.asarray(bias, dtype=F32)
        _check_weights(spec, weights, bias)
        self.spec = spec
        self.S = int(tile)
        k, s, d = spec.kernel_size, spec.stride, spec.dilation
        self.reach = (k - 1) * d
        # causal: everything on the left; noncausal: floor-half on the left
        self.pad_left = self.reach if spec.causal else self.reach // 2
        # per-tap (C, O) matrices; taps accumulate in fixed ascending order
        self.taps = [np.ascontiguousarray(weights[:, :, kk].T) for kk in range(k)]
        self.bias_row = bias.reshape(1, -1)
        self.span = (self.S - 1) * s + self.reach + 1

    def new_state(self) -> "ConvState":
        return ConvState(self)

    def out_len(self, in_len: int) -> int:
        return -(-in_len // self.spec.stride) if in_len > 0 else 0

    def process(self, state: "ConvState", x_tc: np.ndarray,
                final: bool = False) -> np.ndarray:
        """Consume a (m, C) chunk; return the (m', O) output rows final given
        the samples seen so far.  ``final`` additionally emits outputs whose
        windows extend past the end of the stream (noncausal offline runs;
        a causal layer has none)."""
        s = self.spec.stride
        m = x_tc.shape[0]
        t0_in = state.t_in
        t1_in = t0_in + m
        if final:
            out1 = self.out_len(t1_in)
        else:
            # emit outputs whose window end (t*s - pad_left + reach) < t1_in
            out1 = max(0, (t1_in - 1 + self.pad_left - self.reach) // s + 1)
            out1 = min(out1, self.out_len(t1_in))
        out0 = state.t_out
        state.t_in = t1_in          # stream length seen (zero-fill boundary)
        S = self.S
        if out1 <= out0:
            if m:
                keep_from = (out1 // S) * S * s - self.pad_left
                state.absorb(x_tc, t0_in, keep_from)
            return np.zeros((0, self.spec.out_channels), dtype=F32)
        out = np.empty((out1 - out0, self.spec.out_channels), dtype=F32)
        d = self.spec.dilation
        for q in range(out0 // S, (out1 - 1) // S + 1):
            lo_row = q * S * s - self.pad_left   # global input row: col 0, tap 0
            src, base = state.window(lo_row, self.span, x_tc, t0_in)
            acc, tmp = state.acc, state.tmp
            np.matmul(src[base: base + (S - 1) * s + 1: s], self.taps[0], out=acc)
            for kk in range(1, self.spec.kernel_size):
                off = base + kk * d
                np.matmul(src[off: off + (S - 1) * s + 1: s], self.taps[kk], out=tmp)
                np.add(acc, tmp, out=acc)
            a = max(out0, q * S)
            b = min(out1, (q + 1) * S)
            out[a - out0: b - out0] = acc[a - q * S: b - q * S]
        state.t_out = out1
        if m:                        # history absorbed only after the tiles
            keep_from = (out1 // S) * S * s - self.pad_left
            state.absorb(x_tc, t0_in, keep_from)
        out += self.bias_row
        return out


class ConvState:
    """Rolling input history plus scratch for one ConvKernel stream."""

    def __init__(self, kernel: ConvKernel):
        self.k = kernel
        self.t_in = 0    # input rows consumed
        self.t_out = 0   # output rows emitted
        cap = kernel.span + kernel.S * kernel.spec.stride
        ci, co = kernel.spec.in_channels, kernel.spec.out_channels
        self._hist = np.empty((cap, ci), dtype=F32)
        self._hist_start = 0  # global row index of _hist[0]
        self._hist_len = 0
        self.win = np.zeros((kernel.span, ci), dtype=F32)
        self.acc = np.empty((kernel.S, co), dtype=F32)
        self.tmp = np.empty((kernel.S, co), dtype=F32)

    def absorb(self, x_tc: np.ndarray, t0: int, keep_from: int):
        """Retain stream rows [keep_from, t0 + len(chunk)), capped at the
        buffer capacity (which always covers the live tile's needs)."""
        cap = self._hist.shape[0]
        m = x_tc.shape[0]
        t1 = t0 + m
        need = min(cap, t1 - min(max(keep_from, 0), t1))
        if need <= m:
            self._hist[:need] = x_tc[m - need:]
            self._hist_start = t1 - need
            self._hist_len = need
            return
        keep = min(self._hist_len, need - m)
        if keep:
            self._hist[:keep] = self._hist[self._hist_len - keep: self._hist_len]
        self._hist_start = t0 - keep
        self._hist[keep: keep + m] = x_tc
        self._hist_len = keep + m

    def window(self, lo_row: int, span: int, chunk: np.ndarray, chunk_t0: int):
        """Return (array, base): array[base : base+span] are global input rows
        [lo_row, lo_row+span), zero outside the stream seen so far."""
        if lo_row >= chunk_t0 and lo_row + span <= chunk_t0 + chunk.shape[0]:
            return chunk, lo_row - chunk_t0          # fast path: zero copy
        win = self.win
        win[:] = 0
        lo = max(lo_row, 0)
        hi = min(lo_row + span, self.t_in)
        if hi > lo:
            h0 = max(lo, self._hist_start)
            if h0 < min(hi, chunk_t0):
                he = min(hi, chunk_t0)
                win[h0 - lo_row: he - lo_row] = \
                    self._hist[h0 - self._hist_start: he - self._hist_start]
            c0 = max(lo, chunk_t0)
            if c0 < hi:
                win[c0 - lo_row: hi - lo_row] = chunk[c0 - chunk_t0: hi - chunk_t0]
        return win, 0


# --------------------------------------------------------------------------
# Transposed convolution (upsampling), tiled on output positions.
# --------------------------------------------------------------------------

class ConvTransposedKernel:
    def __init__(self, spec: ConvSpec, weights: np.ndarray, bias: np.ndarray,
                 tile_frames: int = 64):
        if not spec.transposed:
            raise KernelError("spec.transposed must be true")
        weights = np.asarray(weights, dtype=F32)
        bias = np.asarray(bias, dtype=F32)
        _check_weights(spec, weights, bias)
        self.spec = spec
        k, s = spec.kernel_size, spec.stride
        self.trim_total = max(k - s, 0)
        # causal: all trimming on the right; noncausal: near-symmetric split
        self.trim_left = 0 if spec.causal else (self.trim_total + 1) // 2
        self.Sf = int(tile_frames)
        self.S = self.Sf * s                  # output rows per tile
        self.back = (k - 1) // s + 1          # frames before a tile that can reach it
        self.n_t = self.Sf + self.back + 1    # +1 frame covers the left-trim shift
        # (C, K*O): one GEMM turns a frame window into all tap contributions
        self.wflat = np.ascontiguousarray(
            weights.transpose(1, 2, 0).reshape(spec.in_channels, k * spec.out_channels))
        self.bias_row = bias.reshape(1, -1)

    def new_state(self) -> "ConvTransposedState":
        return ConvTransposedState(self)

    def out_len(self, in_len: int) -> int:
        return in_len * self.spec.stride

    def process(self, state: "ConvTransposedState", x_tc: np.ndarray,
                final: bool = False) -> np.ndarray:
        s, k = self.spec.stride, self.spec.kernel_size
        m = x_tc.shape[0]
        t0 = state.t_in
        t1 = t0 + m
        out0 = state.t_out
        # rows past t1*s - trim_left still depend on unseen frames
        out_end = t1 * s
        out1 = out_end if (final or self.trim_left == 0) \
            else max(out0, out_end - self.trim_left)
        state.t_in = t1
        if out1 <= out0:
            if m:
                state.absorb(x_tc, t0, (out1 // self.S) * self.Sf - self.back)
            return np.zeros((0, self.spec.out_channels), dtype=F32)
        out = np.empty((out1 - out0, self.spec.out_channels), dtype=F32)
        S = self.S
        tl = self.trim_left
        nO = self.spec.out_channels
        for q in range(out0 // S, (out1 - 1) // S + 1):
            # emitted row j sums taps at untrimmed position j + tl = s*t + kk
            t_lo = q * self.Sf - self.back
            X = state.X
            X[:] = 0
            lo = max(t_lo, 0)
            hi = min(t_lo + self.n_t, t1)
            if hi > lo:
                state.fill(X, lo - t_lo, lo, hi, x_tc, t0)
            Y = (X @ self.wflat).reshape(self.n_t, k, nO)
            buf = state.buf
            buf[:] = 0
            ns = self.n_t * s
            for kk in range(k - 1, -1, -1):   # descending tap = ascending frame
                buf[kk: kk + ns: s] += Y[:, kk]
            a = max(out0, q * S)
            b = min(out1, (q + 1) * S)
            base = t_lo * s - tl              # global emitted row of buf[0]
            out[a - out0: b - out0] = buf[a - base: b - base]
        state.t_out = out1
        if m:                        # history absorbed only after the tiles
            state.absorb(x_tc, t0, (out1 // self.S) * self.Sf - self.back)
        out += self.bias_row
        return out


class ConvTransposedState:
    def __init__(self, kernel: ConvTransposedKernel):
        self.k = kernel
        self.t_in = 0
        self.t_out = 0
        cap = kernel.n_t + kernel.Sf + 1
        ci, co = kernel.spec.in_channels, kernel.spec.out_channels
        self._hist = np.empty((cap, ci), dtype=F32)
        self._hist_start = 0
        self._hist_len = 0
        self.X = np.zeros((kernel.n_t, ci), dtype=F32)
        self.buf = np.empty((kernel.n_t * kernel.spec.stride + kernel.spec.kernel_size,
                             co), dtype=F32)

    def absorb(self, x_tc: np.ndarray, t0: int, keep_from: int):
        cap = self._hist.shape[0]
        m = x_tc.shape[0]
        t1 = t0 + m
        need = min(cap, t1 - min(max(keep_from, 0), t1))
        if need <= m:
            self._hist[:need] = x_tc[m - need:]
            self._hist_start = t1 - need
            self._hist_len = need
            return
        keep = min(self._hist_len, need - m)
        if keep:
            self._hist[:keep] = self._hist[self._hist_len - keep: self._hist_len]
        self._hist_start = t0 - keep
        self._hist[keep: keep + m] = x_tc
        self._hist_len = keep + m

    def fill(self, X: np.ndarray, at: int, lo: int, hi: int,
             chunk: np.ndarray, chunk_t0: int):
        h0 = max(lo, self._hist_start)
        if h0 < min(hi, chunk_t0):
            he = min(hi, chunk_t0)
            X[at + h0 - lo: at + he - lo] = \
                self._hist[h0 - self._hist_start: he - self._hist_start]
        c0 = max(lo, chunk_t0)
        if c0 < hi:
            X[at + c0 - lo: at + hi - lo] = chunk[c0 - chunk_t0: hi - chunk_t0]


# --------------------------------------------------------------------------
# Public (channels, length) API.
# --------------------------------------------------------------------------

@dataclass
class LayerState:
    """Streaming state for one causal layer (opaque to callers; owned by
    exactly one stream at a time)."""
    spec: ConvSpec
    _kernel: object
    _state: object


def _as_tc(x: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(x, dtype=F32).T)


def _as_ct(x_tc: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(x_tc.T)


def conv1d(x: np.ndarray, spec: ConvSpec, weights: np.ndarray,
           bias: np.ndarray, tile: int = 1024) -> np.ndarray:
    """One-shot 1-D convolution of a (channels, length) map.

    Noncausal mode pads (kernel-1)*dilation zeros split across both sides
    (left gets the floor half); causal mode pads only on the left.  Output
    length is ceil(length / stride)."""
    if spec.transposed:
        raise KernelError("spec is transposed; use conv1d_transposed")
    x = np.asarray(x)
    _check_input(spec, x)
    kern = ConvKernel(spec, weights, bias, tile=tile)
    out_tc = kern.process(kern.new_state(), _as_tc(x), final=True)
    return _as_ct(out_tc)


def conv1d_transposed(x: np.ndarray, spec: ConvSpec, weights: np.ndarray,
                      bias: np.ndarray, tile_frames: int = 64) -> np.ndarray:
    """One-shot transposed convolution; output length = length * stride.
    Causal mode trims the (kernel - stride) overlap entirely on the right,
    so no output sample depends on later inputs."""
    if not spec.transposed:
        raise KernelError("spec is not transposed; use conv1d")
    x = np.asarray(x)
    _check_input(spec, x)
    kern = ConvTransposedKernel(spec, weights, bias, tile_frames=tile_frames)
    out_tc = kern.process(kern.new_state(), _as_tc(x), final=True)
    return _as_ct(out_tc)


def conv_init_state(spec: ConvSpec, weights: np.ndarray, bias: np.ndarray,
                    tile: int = 1024) -> LayerState:
    """Fresh streaming state for a causal layer."""
    if not spec.causal:
        raise KernelError("streaming state requires spec.causal")
    if spec.transposed:
        kern = ConvTransposedKernel(spec, weights, bias,
                                    tile_frames=max(1, tile // spec.stride))
    else:
        kern = ConvKernel(spec, weights, bias, tile=tile)
    return LayerState(spec=spec, _kernel=kern, _state=kern.new_state())


def conv_step(state: LayerState, chunk: np.ndarray, spec: ConvSpec,
              weights: np.ndarray = None, bias: np.ndarray = None,
              ) -> tuple[np.ndarray, LayerState]:
    """Feed a (channels, m) chunk through a causal layer.

    Concatenating outputs over any chunking of an input is bit-identical to
    the one-shot causal output.  Plain strided convs require m divisible by
    the stride; stride-1 and transposed layers accept any m.  Weights were
    bound at conv_init_state time; passing them again just re-checks shapes.
    """
    if not spec.causal:
        need = (spec.kernel_size - 1) * spec.dilation
        raise KernelError(
            f"conv_step requires a causal spec; this noncausal layer needs "
            f"{need - need // 2} future samples of lookahead")
    if spec != state.spec:
        raise KernelError("state was initialized for a different ConvSpec")
    if weights is not None:
        _check_weights(spec, np.asarray(weights), np.asarray(bias))
    chunk = np.asarray(chunk, dtype=F32)
    _check_input(spec, chunk)
    if not spec.transposed and spec.stride > 1 and chunk.shape[1] % spec.stride:
        raise KernelError(
            f"chunk length {chunk.shape[1]} not divisible by stride {spec.stride}")
    out_tc = state._kernel.process(state._state, _as_tc(chunk))
    return _as_ct(out_tc), state


# --------------------------------------------------------------------------
# Activations.
# --------------------------------------------------------------------------

def snake(x, alpha):
    """x + sin^2(alpha*x)/alpha with strictly positive alpha."""
    alpha_arr = np.asarray(alpha)
    if np.any(alpha_arr <= 0):
        raise KernelError(f"snake alpha must be positive, got {alpha}")
    s = np.sin(alpha_arr * np.asarray(x))
    return x + s * s / alpha_arr


def leaky_relu(x, slope: float = 0.1):
    """x for x >= 0, slope*x otherwise."""
    x = np.asarray(x)
    slope = np.asarray(slope, dtype=x.dtype if x.dtype.kind == "f" else F32)
    return np.maximum(x, x * slope)


def snake_tc(x_tc: np.ndarray, alpha: np.ndarray, inv_alpha: np.ndarray) -> np.ndarray:
    """In-place snake on a time-major (T, C) map with per-channel alpha."""
    t = x_tc * alpha          # (C,) broadcasts over rows
    np.sin(t, out=t)
    np.multiply(t, t, out=t)
    t *= inv_alpha
    x_tc += t
    return x_tc


def leaky_relu_tc(x_tc: np.ndarray, slope: np.float32) -> np.ndarray:
    """In-place leaky ReLU on a time-major map."""
    t = x_tc * slope
    np.maximum(x_tc, t, out=x_tc)
    return x_tc


def tanh_tc(x_tc: np.ndarray) -> np.ndarray:
    return np.tanh(x_tc, out=x_tc)
