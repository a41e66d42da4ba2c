"""Flexible suspensions: coordinate model, constructions and flex certification."""

from .coordinates import (ConstructedSuspension, Embedding, FlexionInterval, Theta1Rule,
                          embed, embed_batch, flexion_interval)
from .geometry import SuspensionParams, SuspensionType, face_angles_of, validate_params

__version__ = "0.1.0"

__all__ = [
    "ConstructedSuspension", "Embedding", "FlexionInterval", "SuspensionParams",
    "SuspensionType", "Theta1Rule", "embed", "embed_batch", "face_angles_of",
    "flexion_interval", "validate_params",
]
