"""Reading problem/forcing documents and writing JSON and CSV artifacts."""
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence, Type, TypeVar, Union
import csv
import json
import logging
import sys

import numpy as np
from pydantic import BaseModel, ValidationError

from hyperperiodic.exceptions import ParseError
from hyperperiodic.schemas.forcing import ForcingFile
from hyperperiodic.schemas.problem import ProblemData, ProblemFile

logger = logging.getLogger(__name__)

Model = TypeVar("Model", bound=BaseModel)
PathLike = Union[str, Path]


def convert_numpy_to_python(obj):
    """
    Recursively convert numpy scalars and arrays to plain Python values.

    Args:
        obj: Any object (dict, list, numpy value, or other types)

    Returns:
        Object with numpy values replaced by floats, ints, bools and lists;
        complex numbers become [re, im] pairs
    """
    if isinstance(obj, np.ndarray):
        return convert_numpy_to_python(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, dict):
        return {key: convert_numpy_to_python(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [convert_numpy_to_python(item) for item in obj]
    return obj


def validation_error_details(exc: ValidationError) -> List[dict]:
    """'location -> message' diagnostics for every failing field."""
    details = []
    for error in exc.errors():
        location = " -> ".join(str(loc) for loc in error["loc"]) or "document"
        details.append({"location": location, "message": error["msg"], "type": error["type"]})
    return details


def load_json(path: PathLike) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError:
        raise ParseError(f"file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
            [{"location": f"line {exc.lineno} column {exc.colno}", "message": exc.msg, "type": "json_invalid"}],
        )


def parse_document(model: Type[Model], data: Any, source: str = "document") -> Model:
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        details = validation_error_details(exc)
        logger.error(f"Invalid {source}", extra={"errors": details})
        summary = "; ".join(f"{d['location']}: {d['message']}" for d in details)
        raise ParseError(f"{source}: {summary}", details)


def load_problem(path: PathLike) -> ProblemData:
    from hyperperiodic.services.problem_model import build_problem

    document = parse_document(ProblemFile, load_json(path), str(path))
    try:
        problem = build_problem(document)
    except ValidationError as exc:
        details = validation_error_details(exc)
        summary = "; ".join(f"{d['location']}: {d['message']}" for d in details)
        raise ParseError(f"{path}: {summary}", details)
    logger.info(f"Loaded problem with n={problem.n}, m={problem.m}, {problem.cells} cells", extra={"path": str(path)})
    return problem


def load_forcing_document(path: PathLike) -> ForcingFile:
    return parse_document(ForcingFile, load_json(path), str(path))


FLOAT_FORMAT = ".17g"


def format_float(value: float) -> str:
    """17 significant digits; non-finite values become null."""
    if not np.isfinite(value):
        return "null"
    text = format(value, FLOAT_FORMAT)
    return text if any(c in text for c in ".en") else text + ".0"


def _encode(value: Any, level: int) -> str:
    if isinstance(value, float):
        return format_float(value)
    inner = "  " * (level + 1)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [
            f"{inner}{json.dumps(key, ensure_ascii=False)}: {_encode(item, level + 1)}"
            for key, item in value.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + "  " * level + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [inner + _encode(item, level + 1) for item in value]
        return "[\n" + ",\n".join(items) + "\n" + "  " * level + "]"
    return json.dumps(value, ensure_ascii=False)


def dump_report(report: BaseModel) -> str:
    """Deterministic JSON: fixed key order, floats at 17 significant digits, no timestamps."""
    return _encode(report.model_dump(mode="json", by_alias=True), 0)


def emit_json(text: str, output: Optional[PathLike] = None):
    if output is None:
        sys.stdout.write(text + "\n")
        return
    Path(output).write_text(text + "\n", encoding="utf-8")
    logger.info(f"Wrote JSON report to {output}")


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, delimiter=",")
        writer.writerow(header)
        count = 0
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
            count += 1
    logger.info(f"Wrote {count} CSV rows to {path}")
