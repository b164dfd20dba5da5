"""Versioned JSONL artifacts and run manifests.

Every artifact starts with a header line ``{"kind": ..., "format_version": ..., "digest_algorithm":
...}`` followed by one canonical JSON record per line, so identical inputs give byte-identical
files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Iterable

from . import __version__
from .errors import ArtifactNotFound, InputError
from .schema_core import DIGEST_ALGORITHM, canonical_json

FORMAT_VERSION = 1


def artifact_header(kind: str, **extra: Any) -> dict[str, Any]:
    return {
        "kind": kind,
        "format_version": FORMAT_VERSION,
        "digest_algorithm": DIGEST_ALGORITHM,
        **extra,
    }


def write_jsonl(
    path: str | Path, kind: str, records: Iterable[Any], **header: Any
) -> int:
    """Write an artifact, returning the number of records written."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    lines = [canonical_json(artifact_header(kind, **header))]
    for record in records:
        lines.append(canonical_json(record))
        count += 1
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return count


def append_jsonl(path: str | Path, record: Any) -> None:
    """Append one canonical record to a headerless append-only log."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as file:
        file.write(canonical_json(record) + "\n")


def iter_json_lines(path: str | Path) -> Iterable[tuple[int, Any]]:
    """Yield ``(line_number, value)`` for every non-blank line of a JSONL file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ArtifactNotFound(f"input file `{path}` not found") from None
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            yield number, json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}:{number}", f"invalid JSON: {exc.msg}") from None


def read_jsonl(path: str | Path, kind: str | None = None) -> tuple[dict[str, Any], list[Any]]:
    """Read an artifact written by `write_jsonl`, returning its header and records."""
    lines = list(iter_json_lines(path))
    if not lines:
        raise InputError(str(path), "artifact is empty, expected a header line")
    number, header = lines[0]
    if not isinstance(header, dict) or "kind" not in header:
        raise InputError(f"{path}:{number}", "missing artifact header")
    if kind is not None and header["kind"] != kind:
        raise InputError(
            f"{path}:{number}", f"expected a `{kind}` artifact, found `{header['kind']}`"
        )
    if header.get("format_version") != FORMAT_VERSION:
        raise InputError(
            f"{path}:{number}", f"unsupported format version {header.get('format_version')!r}"
        )
    return header, [record for _, record in lines[1:]]


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def manifest_path(output: str | Path) -> Path:
    output = Path(output)
    return output.with_name(output.name + ".manifest.json")


def write_manifest(
    output: str | Path,
    stage: str,
    *,
    seed: int,
    counts: dict[str, Any],
    inputs: Iterable[str | Path] = (),
    outputs: Iterable[str | Path] = (),
) -> Path:
    """Write ``<output>.manifest.json`` recording what a stage consumed and produced.

    Input digests chain manifests of consecutive stages. The manifest holds no timestamps.
    """
    def digests(paths: Iterable[str | Path]) -> dict[str, str]:
        result = {}
        for path in paths:
            path = Path(path)
            if path.is_file():
                result[path.name] = file_digest(path)
        return result

    manifest = {
        "version": __version__,
        "stage": stage,
        "seed": seed,
        "counts": counts,
        "inputs": digests(inputs),
        "outputs": digests([output, *outputs]),
    }
    target = manifest_path(output)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(canonical_json(manifest) + "\n", encoding="utf-8")
    return target
