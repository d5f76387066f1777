"""Streaming runtime for a low-frame-rate FSQ neural audio codec."""

from .config import (CodecConfig, ConfigError, FsqSpec, RateReport,
                     bits_per_token, builtin_configs, frame_rate_of,
                     get_config, rate_report, validate)
from .fsq import (codes_to_indices, dequantize, dequantize_frames,
                  indices_to_digits, quantize, quantize_frames)
from .generator import (GeneratorGraph, Runner, build_decoder, build_encoder,
                        decode_latents, encode_audio, lookahead_frames,
                        lookahead_ms, parameter_count, shape_plan)
from .kernels import (ConvSpec, KernelError, LayerState, conv1d,
                      conv1d_transposed, conv_init_state, conv_step,
                      leaky_relu, snake)
from .metrics import (MelSpec, cosine_similarity, feature_matching,
                      mel_distance, scl, squared_gan_losses)
from .streaming import (DecoderSession, EncoderSession, LatencyReport,
                        StreamingError, measure_latency)
from .weights import load as load_weights
from .weights import random_init, save as save_weights

__version__ = "0.1.0"
