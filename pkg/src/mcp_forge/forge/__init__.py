from ._extract import (
    DERIVATIONS,
    TRANSFORMS,
    ExtractionFailed,
    as_text,
    extract_all,
    extract_field,
    resolve_pointer,
)
from ._synthesize import (
    Mismatch,
    NoUsableNodes,
    PrecheckReport,
    bind_answer,
    structural_precheck,
    synthesize_tasks,
    synthesizer_prompt,
    validate_task,
    validator_prompt,
)
from ._task import (
    DIFFICULTIES,
    REALISM_THRESHOLD,
    TASKS_KIND,
    TaskRecord,
    TrajectoryStep,
    ValidationVerdict,
    load_tasks,
    placeholders,
    render_answer,
    save_tasks,
)

__all__ = [
    "DERIVATIONS",
    "TRANSFORMS",
    "ExtractionFailed",
    "as_text",
    "extract_all",
    "extract_field",
    "resolve_pointer",
    "Mismatch",
    "NoUsableNodes",
    "PrecheckReport",
    "bind_answer",
    "structural_precheck",
    "synthesize_tasks",
    "synthesizer_prompt",
    "validate_task",
    "validator_prompt",
    "DIFFICULTIES",
    "REALISM_THRESHOLD",
    "TASKS_KIND",
    "TaskRecord",
    "TrajectoryStep",
    "ValidationVerdict",
    "load_tasks",
    "placeholders",
    "render_answer",
    "save_tasks",
]
