"""
Line-oriented, versioned model file.

    cadet-model v1
    kernel <linear|rbf> [gamma]
    bias <float>
    schema <comma-joined names>
    means <floats>
    scales <floats>
    sv <coeff> <f1..fK>        (one line per support vector)

Floats use repr(), which round-trips doubles exactly, so a reloaded
model scores bit-for-bit like the one that was saved. Trailing lines
that are not `sv` lines are handed back to the caller (the detector
appends its threshold line there).
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Callable, List, Tuple, Union

from cadet.errors import CadetError, CadetIOError, FormatError
from cadet.data.model import FeatureSchema, StandardizationStats
from cadet.svm.kernels import KernelKind, KernelSpec
from cadet.svm.model import SvmModel

MAGIC = "cadet-model"
VERSION = "v1"


def _f(value: float) -> str:
    return repr(float(value))


def format_model(model: SvmModel) -> List[str]:
    """Model file lines, without newlines."""
    lines = [f"{MAGIC} {VERSION}"]
    if model.kernel.kind == KernelKind.RBF:
        lines.append(f"kernel rbf {_f(model.kernel.gamma)}")  # type: ignore[arg-type]
    else:
        lines.append("kernel linear")
    lines.append(f"bias {_f(model.bias)}")
    lines.append("schema " + ",".join(model.schema.names))
    lines.append("means " + " ".join(_f(v) for v in model.stats.means))
    lines.append("scales " + " ".join(_f(v) for v in model.stats.scales))
    for coeff, sv in zip(model.coefficients, model.support_vectors):
        lines.append("sv " + " ".join([_f(coeff), *(_f(v) for v in sv)]))
    return lines


def parse_model(lines: List[str], path: str = "") -> Tuple[SvmModel, List[Tuple[int, str]]]:
    """
    Parse model lines.

    Returns:
        The model and the trailing (line number, text) pairs after the
        support-vector block.

    Raises:
        FormatError: bad magic/version, missing or malformed line
    """
    def fail(message: str, number: int) -> FormatError:
        return FormatError(message, path=path or None, line=number)

    def expect(number: int, key: str) -> List[str]:
        if number > len(lines):
            raise fail(f"file truncated: expected '{key}' line", number)
        parts = lines[number - 1].split()
        if not parts or parts[0] != key:
            raise fail(f"expected '{key}' line", number)
        return parts[1:]

    if not lines:
        raise fail("empty model file", 1)
    header = lines[0].split()
    if len(header) != 2 or header[0] != MAGIC:
        raise fail(f"not a {MAGIC} file", 1)
    if header[1] != VERSION:
        raise fail(f"unknown model file version {header[1]!r}", 1)

    kernel_args = expect(2, "kernel")
    if kernel_args == ["linear"]:
        kernel = KernelSpec.linear()
    elif len(kernel_args) == 2 and kernel_args[0] == "rbf":
        gamma = _parse_float(kernel_args[1], fail, 2)
        if not gamma > 0:
            raise fail("rbf gamma must be positive", 2)
        kernel = KernelSpec.rbf(gamma)
    else:
        raise fail(f"bad kernel line: {' '.join(kernel_args)}", 2)

    bias_args = expect(3, "bias")
    if len(bias_args) != 1:
        raise fail("bias line takes one value", 3)
    bias = _parse_float(bias_args[0], fail, 3)

    schema_args = expect(4, "schema")
    if len(schema_args) != 1:
        raise fail("schema line takes one comma-joined list", 4)
    try:
        schema = FeatureSchema.of(schema_args[0].split(","))
    except CadetError as e:
        raise fail(f"bad schema: {e.message}", 4) from None
    width = schema.count

    means = [_parse_float(v, fail, 5) for v in expect(5, "means")]
    scales = [_parse_float(v, fail, 6) for v in expect(6, "scales")]
    if len(means) != width or len(scales) != width:
        raise fail(f"means/scales must have {width} values", 5 if len(means) != width else 6)
    if any(s <= 0 for s in scales):
        raise fail("scales must be positive", 6)

    coefficients: List[float] = []
    vectors: List[Tuple[float, ...]] = []
    number = 7
    while number <= len(lines) and lines[number - 1].startswith("sv "):
        values = [_parse_float(v, fail, number) for v in lines[number - 1].split()[1:]]
        if len(values) != width + 1:
            raise fail(
                f"sv line has {len(values) - 1} features, schema has {width}", number
            )
        coefficients.append(values[0])
        vectors.append(tuple(values[1:]))
        number += 1

    trailing = [(n, lines[n - 1]) for n in range(number, len(lines) + 1)]
    model = SvmModel(
        kernel=kernel,
        support_vectors=tuple(vectors),
        coefficients=tuple(coefficients),
        bias=bias,
        stats=StandardizationStats.from_scales(means, scales),
        schema=schema,
    )
    return model, trailing


def read_lines(path: Union[str, Path]) -> List[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CadetIOError(f"cannot read model: {e}", path=str(path)) from e
    lines = text.split("\n")
    while lines and not lines[-1].strip():
        lines.pop()
    return lines


def write_lines(lines: List[str], path: Union[str, Path]) -> None:
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    except OSError as e:
        raise CadetIOError(f"cannot write model: {e}", path=str(path)) from e


def save_svm_model(model: SvmModel, path: Union[str, Path]) -> None:
    """Write an uncalibrated model file."""
    write_lines(format_model(model), path)


def load_svm_model(path: Union[str, Path]) -> SvmModel:
    """
    Read a model file, calibrated or not.

    Raises:
        FormatError: malformed file, or unexpected trailing lines
    """
    model, trailing = parse_model(read_lines(path), str(path))
    for number, text in trailing:
        if not text.startswith("threshold "):
            raise FormatError(f"unexpected line: {text[:40]!r}", path=str(path), line=number)
    return model


def _parse_float(text: str, fail: Callable[[str, int], FormatError], number: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise fail(f"not a number: {text!r}", number) from None
    if not math.isfinite(value):
        raise fail(f"non-finite value: {text!r}", number)
    return value
