"""Deterministic gathering of mobile agents with Byzantine fakers on anonymous port graphs."""

from __future__ import annotations

from .engine import DECLARE, WAIT, Announcement, Observation, run, run_compressed
from .graph import PortGraph, make_oriented_ring, make_path
from .instance import AgentSpec, Instance

__all__ = [
    "DECLARE", "WAIT", "Announcement", "Observation", "run", "run_compressed",
    "PortGraph", "make_oriented_ring", "make_path", "AgentSpec", "Instance",
]

__version__ = "0.1.0"
