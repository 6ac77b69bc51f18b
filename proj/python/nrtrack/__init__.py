"""Non-rigid surface tracking from RGBD sequences.

The compiled core does the work; this package re-exports it.
"""

from ._core import (
    CanonicalMesh,
    EnergyParams,
    Error,
    SyntheticSequence,
    build_canonical_mesh,
    default_config,
    energy,
    evaluate,
    generate,
    max_error,
    rmse,
    sample_depth,
    segment_foreground,
    solve_frame,
    synth,
    track,
)

__all__ = [
    "CanonicalMesh",
    "EnergyParams",
    "Error",
    "SyntheticSequence",
    "build_canonical_mesh",
    "default_config",
    "energy",
    "evaluate",
    "generate",
    "max_error",
    "rmse",
    "sample_depth",
    "segment_foreground",
    "solve_frame",
    "synth",
    "track",
]
