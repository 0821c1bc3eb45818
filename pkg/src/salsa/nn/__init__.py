from salsa.nn.config import DESK, PAPER, PRESETS, ArchitectureConfig
from salsa.nn.layers import (
    NormVariant,
    causal_mask,
    key_padding_mask,
    multi_head_attention,
    positional_encoding,
    scaled_dot_attention,
    transformer_decoder_block,
    transformer_encoder_block,
)
from salsa.nn.lstm import init_lstm, lstm_step
from salsa.nn.params import EVAL, ForwardContext, ParameterStore

__all__ = [
    "DESK",
    "EVAL",
    "PAPER",
    "PRESETS",
    "ArchitectureConfig",
    "ForwardContext",
    "NormVariant",
    "ParameterStore",
    "causal_mask",
    "init_lstm",
    "key_padding_mask",
    "lstm_step",
    "multi_head_attention",
    "positional_encoding",
    "scaled_dot_attention",
    "transformer_decoder_block",
    "transformer_encoder_block",
]
