from ._main import cli, main
from ._stages import PIPELINE, STAGES, StageOptions, UnknownStage, run_pipeline, run_stage
from ._stats import corpus_stats

__all__ = [
    "cli",
    "main",
    "PIPELINE",
    "STAGES",
    "StageOptions",
    "UnknownStage",
    "run_pipeline",
    "run_stage",
    "corpus_stats",
]
