from __future__ import annotations

import csv
import io
import logging
import os
import tempfile
from typing import Any, Callable, Sequence

from pydantic import BaseModel

from ansatz_forge.errors import ValidationFailure
from ansatz_forge.variational import OptResult

logger = logging.getLogger("ansatz-forge-results")

TRACE_COLUMNS = ("iteration", "value", "grad_norm", "evaluations_cumulative")


class ResultBundle(BaseModel):
    tool_version: str
    task: str
    family: str
    num_qubits: int
    manifest: dict[str, Any]
    wall_time_seconds: float
    result: OptResult
    exact_gap: float | None = None
    qaoa: dict[str, Any] | None = None
    adapt: dict[str, Any] | None = None

    @property
    def stem(self) -> str:
        return result_stem(self.task, self.family, self.manifest.get("seed"))


def result_stem(task: str, family: str, seed: Any) -> str:
    return f"{task}_{family.lower()}_seed{seed}"


def atomic_write_text(path: str, text: str) -> None:
    """Write through a sibling temp file and os.replace, so readers never see a partial file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, temp_path = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(temp_path, path)
    except BaseException:
        if os.path.exists(temp_path):
            os.unlink(temp_path)
        raise


def _format_float(value: float) -> str:
    return repr(float(value))


def trace_csv(
    trace: Sequence[float],
    grad_norms: Sequence[float | None] | None = None,
    evaluations: Sequence[int] | None = None,
) -> str:
    """iteration,value,grad_norm,evaluations_cumulative; missing cells are left empty."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for i, value in enumerate(trace):
        norm = grad_norms[i] if grad_norms is not None and i < len(grad_norms) else None
        count = evaluations[i] if evaluations is not None and i < len(evaluations) else None
        writer.writerow(
            [
                i,
                _format_float(value),
                "" if norm is None else _format_float(norm),
                "" if count is None else count,
            ]
        )
    return buffer.getvalue()


class ResultsRepository:
    def __init__(
        self,
        *,
        write_text: Callable[[str, str], None],
        make_dirs: Callable[[str], None],
    ) -> None:
        self._write_text = write_text
        self._make_dirs = make_dirs

    def _write(self, path: str, text: str) -> None:
        try:
            self._write_text(path, text)
        except OSError as e:
            logger.error("Failed to write %s: %s", path, e)
            raise ValidationFailure(f"Failed to write {path}: {e}", "output_dir") from e
        logger.info("Wrote %s", path)

    def _prepare(self, output_dir: str) -> None:
        try:
            self._make_dirs(output_dir)
        except OSError as e:
            logger.error("Failed to create output directory %s: %s", output_dir, e)
            raise ValidationFailure(f"Failed to create output directory {output_dir}: {e}", "output_dir") from e

    def save(self, bundle: ResultBundle, output_dir: str) -> tuple[str, str]:
        self._prepare(output_dir)
        json_path = os.path.join(output_dir, f"{bundle.stem}.json")
        csv_path = os.path.join(output_dir, f"{bundle.stem}_trace.csv")
        result = bundle.result
        self._write(csv_path, trace_csv(result.trace, result.grad_norms, result.evaluations_trace))
        self._write(json_path, bundle.model_dump_json(indent=2) + "\n")
        return json_path, csv_path

    def save_partial_trace(self, trace: Sequence[float], output_dir: str, stem: str) -> str:
        self._prepare(output_dir)
        path = os.path.join(output_dir, f"{stem}_partial_trace.csv")
        self._write(path, trace_csv(trace))
        return path

    def save_text(self, path: str, text: str) -> None:
        directory = os.path.dirname(path)
        if directory:
            self._prepare(directory)
        self._write(path, text)
