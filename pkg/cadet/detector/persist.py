"""
Calibrated model files: the svm model file plus one trailing line

    threshold <theta> <target_specificity> <calibration_size>
"""

from __future__ import annotations

from pathlib import Path
from typing import Tuple, Union

from cadet.errors import CadetError, FormatError
from cadet.svm.model import SvmModel
from cadet.svm.modelfile import format_model, parse_model, read_lines, write_lines
from cadet.detector.calibration import Threshold


def format_threshold(threshold: Threshold) -> str:
    return (
        f"threshold {threshold.value!r} {threshold.target_specificity!r} "
        f"{threshold.calibration_size}"
    )


def save_model(model: SvmModel, threshold: Threshold, path: Union[str, Path]) -> None:
    write_lines(format_model(model) + [format_threshold(threshold)], path)


def load_model(path: Union[str, Path]) -> Tuple[SvmModel, Threshold]:
    """
    Read a calibrated model file.

    Raises:
        FormatError: malformed file, or no threshold line
    """
    lines = read_lines(path)
    model, trailing = parse_model(lines, str(path))
    if not trailing:
        raise FormatError(
            "file truncated: expected 'threshold' line (was the model calibrated?)",
            path=str(path),
            line=len(lines) + 1,
        )
    if len(trailing) > 1:
        number, text = trailing[1]
        raise FormatError(f"unexpected line: {text[:40]!r}", path=str(path), line=number)
    number, text = trailing[0]
    parts = text.split()
    if len(parts) != 4 or parts[0] != "threshold":
        raise FormatError(
            "expected 'threshold <value> <target> <n>'", path=str(path), line=number
        )
    try:
        threshold = Threshold(
            value=float(parts[1]),
            target_specificity=float(parts[2]),
            calibration_size=int(parts[3]),
        )
    except (ValueError, CadetError) as e:
        message = e.message if isinstance(e, CadetError) else str(e)
        raise FormatError(f"bad threshold line: {message}", path=str(path), line=number) from None
    return model, threshold
