"""
CSV ingestion and emission for datasets.

Column layout (the contract shared with every other tool):

    patient_id,state_index,<f1>,...,<fK>,decision

UTF-8, LF line endings, decisions rendered 0/1, floats rendered with
Python's shortest round-trip repr so save -> load reproduces identical
binary values. Row numbers in errors are 1-based data rows (the header
is row 0).
"""

from __future__ import annotations

import logging
import re
from pathlib import Path
from typing import List, Union

import numpy as np
import pandas as pd

from cadet.errors import CadetIOError, ParseError, SchemaError
from cadet.data.model import Dataset, FeatureSchema

logger = logging.getLogger(__name__)

ID_COLUMN = "patient_id"
INDEX_COLUMN = "state_index"
DECISION_COLUMN = "decision"

SchemaArg = Union[FeatureSchema, str]


def render_float(value: float) -> str:
    """Shortest decimal string that parses back to the same double."""
    return repr(float(value))


def load_csv(path: Union[str, Path], schema: SchemaArg = "infer") -> Dataset:
    """
    Read a dataset CSV.

    Args:
        path: CSV file in the dataset layout
        schema: expected FeatureSchema, or "infer" to take the feature
            columns from the header

    Raises:
        SchemaError: header missing, columns missing/unknown/out of order
            or repeated
        ParseError: a row with the wrong number of fields, bytes that are
            not UTF-8, a non-numeric or non-finite feature, a bad
            state_index, or a decision outside {0, 1}
    """
    path = Path(path)
    try:
        # header=None keeps repeated column names as they are written
        raw = pd.read_csv(
            path,
            header=None,
            dtype=str,
            keep_default_na=False,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        raise SchemaError("file is empty, header row required", path=str(path))
    except pd.errors.ParserError as e:
        raise _field_count_error(e, str(path)) from e
    except UnicodeDecodeError as e:
        raise ParseError(
            f"not valid UTF-8 at byte {e.start}", path=str(path)
        ) from e
    except OSError as e:
        raise CadetIOError(f"cannot read: {e}", path=str(path)) from e

    header: List[str] = [str(c) for c in raw.iloc[0].tolist()]
    feature_names = _check_header(header, schema, str(path))
    resolved = (
        schema if isinstance(schema, FeatureSchema) else FeatureSchema.of(feature_names)
    )
    frame = raw.iloc[1:].reset_index(drop=True)
    frame.columns = header
    short = frame.isna().any(axis=1)
    if short.any():
        row = int(np.flatnonzero(short.to_numpy())[0]) + 1
        raise ParseError(
            f"expected {len(header)} fields, row is shorter", path=str(path), row=row
        )

    patient_ids = frame[ID_COLUMN].tolist()
    for row, pid in enumerate(patient_ids, start=1):
        if not pid:
            raise ParseError("empty patient_id", path=str(path), row=row)

    state_indices = _parse_ints(frame[INDEX_COLUMN].tolist(), INDEX_COLUMN, str(path))
    decisions = _parse_decisions(frame[DECISION_COLUMN].tolist(), str(path))

    if len(frame):
        features = np.empty((len(frame), resolved.count), dtype=np.float64)
        for col, name in enumerate(resolved.names):
            features[:, col] = _parse_floats(frame[name].tolist(), name, str(path))
    else:
        features = np.zeros((0, resolved.count), dtype=np.float64)

    dataset = Dataset.from_arrays(
        resolved, patient_ids, state_indices, features, decisions
    )
    logger.info("loaded %d examples x %d features from %s",
                len(dataset), resolved.count, path)
    return dataset


def save_csv(dataset: Dataset, path: Union[str, Path]) -> None:
    """
    Write a dataset in the exact layout load_csv accepts.

    Raises:
        CadetIOError: the file cannot be written
    """
    path = Path(path)
    columns = [ID_COLUMN, INDEX_COLUMN, *dataset.schema.names, DECISION_COLUMN]
    if len(dataset):
        data = {
            ID_COLUMN: dataset.patient_ids,
            INDEX_COLUMN: [str(ex.state.state_index) for ex in dataset.examples],
        }
        matrix = dataset.features
        for col, name in enumerate(dataset.schema.names):
            data[name] = [render_float(v) for v in matrix[:, col].tolist()]
        data[DECISION_COLUMN] = [str(int(ex.decision)) for ex in dataset.examples]
        frame = pd.DataFrame(data, columns=columns)
    else:
        frame = pd.DataFrame(columns=columns)
    write_frame(frame, path)
    logger.info("wrote %d examples to %s", len(dataset), path)


def write_frame(frame: pd.DataFrame, path: Union[str, Path]) -> None:
    """Write any table with the dataset CSV conventions (UTF-8, LF)."""
    try:
        frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    except OSError as e:
        raise CadetIOError(f"cannot write: {e}", path=str(path)) from e


def write_text(text: str, path: Union[str, Path]) -> None:
    """Write a text artifact (UTF-8, LF)."""
    try:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as e:
        raise CadetIOError(f"cannot write: {e}", path=str(path)) from e


def _check_header(header: List[str], schema: SchemaArg, path: str) -> List[str]:
    """Validate the header and return the feature column names."""
    if isinstance(schema, str) and schema != "infer":
        raise SchemaError(f"schema must be a FeatureSchema or 'infer', got {schema!r}")
    for required in (ID_COLUMN, INDEX_COLUMN, DECISION_COLUMN):
        if required not in header:
            raise SchemaError(f"missing column: {required}", path=path)
    if header[0] != ID_COLUMN or header[1] != INDEX_COLUMN or header[-1] != DECISION_COLUMN:
        raise SchemaError(
            f"columns must be {ID_COLUMN},{INDEX_COLUMN},<features>,{DECISION_COLUMN}",
            path=path,
        )
    feature_names = header[2:-1]
    if not feature_names:
        raise SchemaError("no feature columns", path=path)
    if len(set(header)) != len(header):
        raise SchemaError("duplicate column names in header", path=path)

    if isinstance(schema, FeatureSchema):
        expected = list(schema.names)
        for name in expected:
            if name not in feature_names:
                raise SchemaError(f"missing column: {name}", path=path)
        for name in feature_names:
            if name not in schema:
                raise SchemaError(f"unknown column: {name}", path=path)
        if feature_names != expected:
            raise SchemaError("feature columns are not in schema order", path=path)
    return feature_names


def _parse_floats(cells: List[str], column: str, path: str) -> np.ndarray:
    out = np.empty(len(cells), dtype=np.float64)
    for row, cell in enumerate(cells, start=1):
        try:
            value = float(cell)
        except ValueError:
            raise ParseError(
                f"column {column}: not a number: {cell!r}", path=path, row=row
            ) from None
        if not np.isfinite(value):
            raise ParseError(
                f"column {column}: non-finite value {cell!r}", path=path, row=row
            )
        out[row - 1] = value
    return out


def _parse_ints(cells: List[str], column: str, path: str) -> List[int]:
    out = []
    for row, cell in enumerate(cells, start=1):
        try:
            value = int(cell)
        except ValueError:
            raise ParseError(
                f"column {column}: not an integer: {cell!r}", path=path, row=row
            ) from None
        if value < 0:
            raise ParseError(f"column {column}: negative value", path=path, row=row)
        out.append(value)
    return out


def _parse_decisions(cells: List[str], path: str) -> List[int]:
    out = []
    for row, cell in enumerate(cells, start=1):
        if cell not in ("0", "1"):
            raise ParseError(
                f"decision must be 0 or 1, got {cell!r}", path=path, row=row
            )
        out.append(int(cell))
    return out


_FIELD_COUNT = re.compile(r"Expected (\d+) fields in line (\d+), saw (\d+)")


def _field_count_error(error: Exception, path: str) -> ParseError:
    """ParseError for a tokenizer failure, at the offending data row when known."""
    found = _FIELD_COUNT.search(str(error))
    if found is None:
        return ParseError(f"malformed CSV: {error}", path=path)
    expected, line, saw = (int(g) for g in found.groups())
    # tokenizer lines are 1-based and include the header
    return ParseError(
        f"expected {expected} fields, saw {saw}", path=path, row=line - 1
    )
