"""Genetic synthesis of Mealy machines with RAM/ROM hardware export."""

__version__ = "0.1.0"

from .machine import (EncodingSpec, Genome, MealyMachine, RamImage, correct, decode,
                      encode, make_encoding, reachable_states, step, to_ram_image)
from .evolve import GaConfig, SynthesisResult, run

__all__ = [
    "EncodingSpec", "Genome", "MealyMachine", "RamImage", "correct", "decode", "encode",
    "make_encoding", "reachable_states", "step", "to_ram_image", "GaConfig",
    "SynthesisResult", "run",
]
