"""Explicit-state accepting-cycle detection: MAP as repeated max-semiring
matrix-vector products over CSR snapshots, run on-the-fly against state-space
generation, with OWCTY and nested DFS for cross-checking."""
from pathlib import Path

from .explorer import ExploreConfig, RunStats, explore
from .graph_core import CsrSnapshot, EdgeLog, Orientation, build_snapshot, restrict_to_accepting_sccs
from .map_engine import MapStats, run_map
from .model_lang import parse_model
from .owcty import run_owcty
from .verdict import Outcome, Verdict

CORPUS_DIR = Path(__file__).parent / "corpus"

__all__ = [
    "CORPUS_DIR", "CsrSnapshot", "EdgeLog", "ExploreConfig", "MapStats", "Orientation", "Outcome",
    "RunStats", "Verdict", "build_snapshot", "explore", "parse_model", "restrict_to_accepting_sccs",
    "run_map", "run_owcty",
]
