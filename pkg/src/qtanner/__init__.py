"""Quantum Tanner codes on left-right Cayley complexes, decoded with LEAD."""

from qtanner.codes import LinearCode, builtin, dual, tensor
from qtanner.complex import FiniteGroup, TannerCode, ViewCover, construct, validate
from qtanner.decode import DecodeOutcome, Decoder, DecoderConfig, Prior, decode
from qtanner.gf2 import BitMatrix, BitVec
from qtanner.lead import LeadConfig, LeadDecoder, lead_decode, preset

__version__ = "0.1.0"

__all__ = [
    "BitMatrix",
    "BitVec",
    "DecodeOutcome",
    "Decoder",
    "DecoderConfig",
    "FiniteGroup",
    "LeadConfig",
    "LeadDecoder",
    "LinearCode",
    "Prior",
    "TannerCode",
    "ViewCover",
    "builtin",
    "construct",
    "decode",
    "dual",
    "lead_decode",
    "preset",
    "tensor",
    "validate",
]
