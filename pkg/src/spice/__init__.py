"""SPICE: a replayable tangible cooking-guidance pipeline.

The package is organized as a numpy-style library. Each module covers one
stage of the pipeline:

- ``tracking``: marker templates, triangulation, rigid-body pose fitting,
  and the SPICE-TRK pose datagram codec.
- ``scene``: agent registry, workspace geometry, table-to-projector
  homography, and zone membership.
- ``dial``: yaw extraction and the rotary detent state machine that turns
  puck rotation into step-navigation events.
- ``detection``: image rectification, label normalization, and the
  pluggable vision-model adapter.
- ``recipes``: recipe library, ingredient matching, and the cooking-session
  state machine with its display model.
- ``bridge``: event envelopes, canonical JSON codec, in-process pub/sub,
  UDP ingest/egress, and the WebSocket UI channel.
- ``analytics``: trial records, Shapiro-Wilk / Wilcoxon / paired-t tests,
  and the study summary table.
- ``runtime``: trace files, deterministic replay, the scripted simulator,
  and the live socket runner. ``cli`` exposes all of it as ``spice``.
"""

from spice import analytics, bridge, detection, dial, recipes, rotations, runtime, scene, tracking

__all__ = [
    "analytics",
    "bridge",
    "detection",
    "dial",
    "recipes",
    "rotations",
    "runtime",
    "scene",
    "tracking",
]

__version__ = "0.1.0"
