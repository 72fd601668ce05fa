"""Delay and decoding-complexity analysis of systematic network coding over a relay."""

from .coding import DecoderState, Packet, decoding_cost, encode
from .errors import NeverCompletes, RelayCodeError
from .field import FieldSpec, gf_add, gf_inv, gf_mul
from .markov import ChannelParams, NetworkState, solve_completion_times, t_non_sys
from .systematic import expected_uncoded_gain, first_stage_distribution, t_sys

__version__ = "0.1.0"

__all__ = [
    "ChannelParams",
    "DecoderState",
    "FieldSpec",
    "NetworkState",
    "NeverCompletes",
    "Packet",
    "RelayCodeError",
    "decoding_cost",
    "encode",
    "expected_uncoded_gain",
    "first_stage_distribution",
    "gf_add",
    "gf_inv",
    "gf_mul",
    "solve_completion_times",
    "t_non_sys",
    "t_sys",
]
