"""Repeat-accumulate signal codes over the ring C(L, Nbv)."""
from . import analysis, channel, code, decode_bp, decode_ems, ring, simulate
from .errors import FilterError, InputError, ParameterError
from .ring import RingParams

__version__ = "0.1.0"

__all__ = ["analysis", "channel", "code", "decode_bp", "decode_ems", "ring", "simulate",
           "FilterError", "InputError", "ParameterError", "RingParams", "__version__"]
