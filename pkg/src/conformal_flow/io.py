"""
File formats: domain and field JSON, trace and grid CSV, report JSON.

Output is deterministic. Floats are written with 17 significant digits in CSV
and as shortest round-trip repr in JSON, rows keep input order, and line ends
are always '\\n'. Non-finite numbers become null in JSON and nan / inf in CSV.
"""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable, List, Sequence, Union

import numpy as np

from .exceptions import ConfigurationError, SpecFormatError
from .flow import target_level
from .geometry import DomainSpec
from .green import GreenField
from .interfaces import BaseField
from .models import FlowTrace, MapResult, to_builtin

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_AXES = ("x", "y", "z")


def format_float(value: float) -> str:
    """
    Locale-independent 17 significant digit rendering.

    Example:
        >>> format_float(0.1)
        '0.10000000000000001'
    """
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".17g")


def load_json(path: PathLike) -> Any:
    """
    Parse a JSON file.

    Raises:
        ConfigurationError: the file cannot be read
        SpecFormatError: the content is not valid JSON (carries line and column)
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecFormatError(f"malformed JSON in {path}: {exc.msg}", exc.lineno, exc.colno)


def _json_safe(value: Any) -> Any:
    value = to_builtin(value)
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _json_float(value: float) -> str:
    text = format_float(value)
    # keep a float marker so that integral values load back as floats
    return text if any(c in text for c in ".en") else text + ".0"


class FixedDigitEncoder(json.JSONEncoder):
    """JSON encoder writing finite floats with 17 significant digits."""

    def iterencode(self, o, _one_shot=False):
        encoder = (
            json.encoder.encode_basestring_ascii
            if self.ensure_ascii
            else json.encoder.encode_basestring
        )
        indent = self.indent
        if indent is not None and not isinstance(indent, str):
            indent = " " * indent
        return json.encoder._make_iterencode(  # type: ignore[attr-defined]
            {} if self.check_circular else None,
            self.default,
            encoder,
            indent,
            _json_float,
            self.key_separator,
            self.item_separator,
            self.sort_keys,
            self.skipkeys,
            _one_shot,
        )(o, 0)


def write_json(data: Any, path: PathLike) -> Path:
    """
    Write JSON deterministically.

    Keys keep insertion order, the indent is two spaces, floats carry 17
    significant digits and non-finite numbers become null.

    Example:
        >>> json.dumps([0.1, 2.0], cls=FixedDigitEncoder)
        '[0.10000000000000001, 2.0]'
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_json_safe(data), indent=2, allow_nan=False, cls=FixedDigitEncoder)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")
    logger.debug("Wrote %s", path)
    return path


def load_domain(path: PathLike) -> DomainSpec:
    """Read a domain spec JSON file."""
    data = load_json(path)
    if not isinstance(data, dict):
        raise ConfigurationError(f"domain file {path} must contain a JSON object")
    return DomainSpec.from_dict(data)


def save_domain(spec: DomainSpec, path: PathLike) -> Path:
    return write_json(spec.to_dict(), path)


def load_field(path: PathLike) -> GreenField:
    """Read a field previously written by save_field()."""
    data = load_json(path)
    if not isinstance(data, dict):
        raise ConfigurationError(f"field file {path} must contain a JSON object")
    return GreenField.from_dict(data)


def save_field(field: GreenField, path: PathLike) -> Path:
    return write_json(field.to_dict(), path)


def write_report_json(report: Any, path: PathLike) -> Path:
    """Write a report (records, dicts, lists) with non-finite numbers as null."""
    if hasattr(report, "to_dict"):
        report = report.to_dict()
    return write_json(report, path)


def _write_rows(path: PathLike, header: Sequence[str], rows: Iterable[List[str]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    logger.debug("Wrote %s", path)
    return path


def write_trace_csv(trace: FlowTrace, field: BaseField, path: PathLike) -> Path:
    """
    Dump a trace as ``t,x0,x1[,x2],G,level_residual``.

    G is evaluated at every sample; level_residual is |G - target_level(t)|.
    """
    header = ["t"] + [f"x{i}" for i in range(trace.dim)] + ["G", "level_residual"]
    rows = []
    for t, x in trace.samples:
        g = field.value(x)
        residual = abs(g - target_level(trace.dim, t))
        rows.append([format_float(v) for v in (t, *x, g, residual)])
    return _write_rows(path, header, rows)


def write_grid_csv(results: Sequence[MapResult], dim: int, path: PathLike) -> Path:
    """
    Dump map results as ``sx,sy[,sz],ix,iy[,iz],scale,residual,truncated``.

    Failed points keep their row with nan image and scale.
    """
    axes = _AXES[:dim]
    header = [f"s{a}" for a in axes] + [f"i{a}" for a in axes] + ["scale", "residual", "truncated"]
    rows = []
    for r in results:
        values = np.concatenate([np.asarray(r.source, float), np.asarray(r.image, float)])
        row = [format_float(v) for v in values]
        row += [
            format_float(r.local_scale),
            format_float(r.stats.invariant_residual),
            "1" if r.stats.truncated else "0",
        ]
        rows.append(row)
    return _write_rows(path, header, rows)
