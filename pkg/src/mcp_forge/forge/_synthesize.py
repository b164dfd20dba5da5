from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..errors import ForgeError
from ..explorer import CallDag
from ..judge import JudgeGateway, Role, marker, render_prompt
from ..runtime import log_debug, log_warning
from ..schema_core import canonical_hash, canonical_json
from ._extract import ExtractionFailed, extract_all
from ._task import DIFFICULTIES, TaskRecord, TrajectoryStep, ValidationVerdict, placeholders


class NoUsableNodes(ForgeError):
    """Every call of the DAG failed, so there is nothing to ask about."""


class Mismatch(ForgeError):
    """Re-extracted answer differs from the stored ground truth."""


@dataclass
class PrecheckReport:
    issues: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def __bool__(self) -> bool:
        return self.ok


def structural_precheck(task: TaskRecord) -> PrecheckReport:
    """Format checks that need no judge: a non-empty prompt, a flat answer schema whose values are
    the ``{field}`` placeholders of its keys, a template using exactly the same placeholders, a
    known difficulty and an extraction for every field."""
    report = PrecheckReport()
    if not task.prompt.strip():
        report.issues.append("prompt is empty")
    if not task.answer_schema:
        report.issues.append("answer_schema has no fields")
    for key, value in sorted(task.answer_schema.items()):
        if isinstance(value, (dict, list)):
            report.issues.append(f"answer_schema field `{key}` is nested, the schema must be flat")
        elif value != f"{{{key}}}":
            report.issues.append(f"answer_schema field `{key}` must hold the placeholder {{{key}}}")
    template_keys = placeholders(task.answer_template)
    schema_keys = set(task.answer_schema)
    for key in sorted(template_keys - schema_keys):
        report.issues.append(f"template placeholder {{{key}}} is missing from answer_schema")
    for key in sorted(schema_keys - template_keys):
        report.issues.append(f"answer_schema field `{key}` is not used by the template")
    if task.difficulty not in DIFFICULTIES:
        choices = ", ".join(DIFFICULTIES)
        report.issues.append(f"difficulty {task.difficulty!r} is not one of {choices}")
    if not task.selected_nodes:
        report.issues.append("no nodes selected")
    if set(task.extraction) != schema_keys:
        report.issues.append("extraction must cover exactly the answer_schema fields")
    return report


def bind_answer(task: TaskRecord, dag: CallDag) -> dict[str, str]:
    """Re-extract every answer field from the DAG and check it against the stored ground truth."""
    values = extract_all(task.extraction, dag, task.selected_nodes)
    if values != task.ground_truth:
        differing = sorted(
            key
            for key in set(values) | set(task.ground_truth)
            if values.get(key) != task.ground_truth.get(key)
        )
        raise Mismatch(f"{task.task_id}: ground truth differs in {', '.join(differing)}")
    return values


def synthesizer_prompt(dag: CallDag, variant: int) -> str:
    nodes = "\n".join(
        f"node {node.node_id}: {marker('tool', node.tool)}"
        f"{' (failed)' if node.is_error else ''}\n"
        f"  args: {canonical_json(node.args)}\n"
        f"  output: {canonical_json(node.output)}"
        for node in dag.nodes
    )
    return render_prompt(
        Role.TASK_SYNTHESIZER,
        dag=marker("dag_id", dag.dag_id),
        variant=marker("variant", variant),
        start=marker("start_tool", dag.start_tool),
        nodes=nodes,
    )


def _candidate(dag: CallDag, variant: int, response: dict[str, Any]) -> TaskRecord:
    selected = sorted(set(response["selected_nodes"]))
    steps = []
    for node_id in selected:
        node = dag.node(node_id)
        if node is None or node.is_error:
            raise ExtractionFailed(f"selected node {node_id} is missing or failed")
        steps.append(TrajectoryStep(node.node_id, node.tool, node.args))
    extraction = dict(response["extraction"])
    return TaskRecord(
        task_id=f"{dag.dag_id}-v{variant}",
        prompt=response["prompt"],
        answer_schema=dict(response["answer_schema"]),
        answer_template=response["answer_template"],
        difficulty=response["difficulty"],
        selected_nodes=selected,
        ground_truth=extract_all(extraction, dag, selected),
        source_dag=dag.dag_id,
        extraction=extraction,
        trajectory=steps,
    )


async def synthesize_tasks(dag: CallDag, gateway: JudgeGateway, variants: int) -> list[TaskRecord]:
    """Ask the synthesizer for ``variants`` tasks over one DAG.

    The ground truth is computed from the declared extraction, never taken from the judge.
    Candidates whose extraction fails, that fail the structural precheck or that repeat an
    earlier candidate are dropped.
    """
    if not dag.completed:
        raise NoUsableNodes(f"{dag.dag_id}: every call failed")
    tasks: list[TaskRecord] = []
    seen: set[str] = set()
    for variant in range(variants):
        response = await gateway.ask(Role.TASK_SYNTHESIZER, synthesizer_prompt(dag, variant))
        try:
            task = _candidate(dag, variant, response)
        except ExtractionFailed as exc:
            log_warning(f"{dag.dag_id} variant {variant}: {exc}")
            continue
        if not (report := structural_precheck(task)):
            log_warning(f"{task.task_id}: {'; '.join(report.issues)}")
            continue
        key = canonical_hash({k: v for k, v in task.to_json().items() if k != "task_id"})
        if key in seen:
            log_debug(f"{task.task_id}: duplicate of an earlier variant")
            continue
        seen.add(key)
        tasks.append(task)
    return tasks


def validator_prompt(task: TaskRecord, dag: CallDag) -> str:
    trajectory = []
    for node_id in task.selected_nodes:
        node = dag.node(node_id)
        if node is not None:
            trajectory.append(
                f"node {node.node_id}: {marker('tool', node.tool)}\n"
                f"  args: {canonical_json(node.args)}\n"
                f"  output: {canonical_json(node.output)}"
            )
    return render_prompt(
        Role.TASK_VALIDATOR,
        task=marker("task_id", task.task_id),
        difficulty=marker("difficulty", task.difficulty),
        call_count=len(task.selected_nodes),
        prompt=task.prompt,
        answer_schema=task.answer_schema,
        answer_template=task.answer_template,
        ground_truth=task.ground_truth,
        trajectory="\n".join(trajectory),
    )


async def validate_task(task: TaskRecord, dag: CallDag, gateway: JudgeGateway) -> ValidationVerdict:
    """Judge a task together with its trajectory; the pass decision is made here, not by the
    judge."""
    judged = await gateway.ask(Role.TASK_VALIDATOR, validator_prompt(task, dag))
    return ValidationVerdict.from_json(judged)
