"""Patient dataset ingestion: CSV parsing, encoding and min-max normalization.

The canonical schema covers the 29 clinical features used for priority
clustering: five numeric measurements, one ordinal severity grade and 23
yes/no indicators (sex is treated as a binary column with Female -> 0,
Male -> 1).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import RowError, SchemaError

NUMERIC = "numeric"
BINARY = "binary"
ORDINAL = "ordinal"

# (name, kind, declared range). Ranges are documentation of the expected
# clinical values; normalization always uses the observed column min/max.
_CANONICAL_FEATURES = [
    ("Age", NUMERIC, (30.0, 86.0)),
    ("Weight", NUMERIC, (48.0, 120.0)),
    ("Length", NUMERIC, (140.0, 188.0)),
    ("Sex", BINARY, None),
    ("DM", BINARY, None),
    ("HTN", BINARY, None),
    ("Current smoker", BINARY, None),
    ("Ex-smoker", BINARY, None),
    ("FH", BINARY, None),
    ("CRF", BINARY, None),
    ("CVA", BINARY, None),
    ("Airway disease", BINARY, None),
    ("Thyroid Disease", BINARY, None),
    ("CHF", BINARY, None),
    ("DLP", BINARY, None),
    ("BP", NUMERIC, (90.0, 190.0)),
    ("PR", NUMERIC, (50.0, 110.0)),
    ("Edema", BINARY, None),
    ("Weak peripheral pulse", BINARY, None),
    ("Lung rales", BINARY, None),
    ("Systolic murmur", BINARY, None),
    ("Diastolic murmur", BINARY, None),
    ("Typical Chest Pain", BINARY, None),
    ("Dyspnea", BINARY, None),
    ("Function class", ORDINAL, (1.0, 4.0)),
    ("Atypical", BINARY, None),
    ("Nonanginal CP", BINARY, None),
    ("Exertional CP", BINARY, None),
    ("Low Th Ang", BINARY, None),
]

_YES = {"yes", "y", "1", "true"}
_NO = {"no", "n", "0", "false"}
_MALE = {"male", "m"}
_FEMALE = {"female", "f"}


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str
    declared_range: tuple[float, float] | None = None


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature definitions; defaults to the canonical 29-column layout."""

    features: tuple[FeatureSpec, ...]

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate feature names in schema")
        for f in self.features:
            if f.kind not in (NUMERIC, BINARY, ORDINAL):
                raise SchemaError(f"unknown feature kind {f.kind!r} for {f.name!r}")

    @classmethod
    def canonical(cls) -> "FeatureSchema":
        return cls(tuple(FeatureSpec(n, k, r) for n, k, r in _CANONICAL_FEATURES))

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def __len__(self) -> int:
        return len(self.features)


@dataclass(frozen=True)
class PatientRecord:
    id: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class FeatureMatrix:
    """Normalized patient data: every entry in [0, 1], no missing values.

    ``active_features`` maps matrix columns back to schema indices so that
    feature selection can report results in schema terms.
    """

    data: np.ndarray
    active_features: tuple[int, ...]
    record_ids: tuple[str, ...]
    feature_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ValueError("feature matrix must be 2-D")
        if data.shape[1] != len(self.active_features):
            raise ValueError("column count does not match active_features")
        if not np.all(np.isfinite(data)):
            raise ValueError("feature matrix contains non-finite values")
        if data.size and (data.min() < -1e-12 or data.max() > 1 + 1e-12):
            raise ValueError("feature matrix entries must lie in [0, 1]")
        object.__setattr__(self, "data", data)
        data.setflags(write=False)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def restrict(self, columns) -> "FeatureMatrix":
        """Sub-matrix keeping the given column positions (order preserved)."""
        columns = list(columns)
        names = tuple(self.feature_names[c] for c in columns) if self.feature_names else ()
        return FeatureMatrix(
            data=self.data[:, columns].copy(),
            active_features=tuple(self.active_features[c] for c in columns),
            record_ids=self.record_ids,
            feature_names=names,
        )


def _parse_cell(raw: str, spec: FeatureSpec) -> float:
    text = raw.strip()
    if text == "":
        raise ValueError("empty cell")
    if spec.kind == BINARY:
        low = text.lower()
        if spec.name == "Sex":
            if low in _MALE:
                return 1.0
            if low in _FEMALE:
                return 0.0
        if low in _YES:
            return 1.0
        if low in _NO:
            return 0.0
        raise ValueError(f"expected a yes/no value, got {raw!r}")
    if spec.kind == ORDINAL:
        try:
            value = int(text)
        except ValueError as exc:
            raise ValueError(f"expected an integer grade, got {raw!r}") from exc
        return float(value)
    try:
        return float(text)
    except ValueError as exc:
        raise ValueError(f"expected a number, got {raw!r}") from exc


def load_dataset(path, schema: FeatureSchema | None = None,
                 aliases: dict[str, str] | None = None,
                 id_column: str = "id") -> list[PatientRecord]:
    """Read a patient CSV into records, validating every cell against the schema.

    The header must contain every schema feature (order-insensitive); extra
    columns besides the optional id column are rejected.  ``aliases`` maps
    CSV header spellings to schema names.
    """
    schema = schema or FeatureSchema.canonical()
    aliases = aliases or {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty file: missing header row") from None
        header = [aliases.get(h.strip(), h.strip()) for h in header]

        positions: dict[str, int] = {}
        for idx, name in enumerate(header):
            if name in positions:
                raise SchemaError(f"duplicate column {name!r}")
            positions[name] = idx
        for name in schema.names:
            if name not in positions:
                raise SchemaError(f"missing column {name!r}")
        known = set(schema.names) | {id_column}
        extra = [h for h in header if h not in known]
        if extra:
            raise SchemaError(f"unexpected columns {extra!r}")

        id_pos = positions.get(id_column)
        records: list[PatientRecord] = []
        for row_index, row in enumerate(reader):
            if len(row) != len(header):
                raise RowError(row_index, "<row>", f"expected {len(header)} cells, got {len(row)}")
            values = []
            for spec in schema.features:
                cell = row[positions[spec.name]]
                try:
                    values.append(_parse_cell(cell, spec))
                except ValueError as exc:
                    raise RowError(row_index, spec.name, str(exc)) from None
            rec_id = row[id_pos].strip() if id_pos is not None else str(row_index)
            records.append(PatientRecord(id=rec_id, values=tuple(values)))
    return records


def encode_normalize(records: list[PatientRecord],
                     schema: FeatureSchema | None = None) -> FeatureMatrix:
    """Min-max scale every encoded column to [0, 1] using observed extrema.

    Constant columns map to all zeros (rather than being dropped) so that
    feature indices stay stable for downstream selection.
    """
    schema = schema or FeatureSchema.canonical()
    if not records:
        raise ValueError("cannot normalize an empty record list")
    raw = np.array([rec.values for rec in records], dtype=float)
    if raw.shape[1] != len(schema):
        raise ValueError("record width does not match schema")
    lo = raw.min(axis=0)
    hi = raw.max(axis=0)
    span = hi - lo
    scaled = np.zeros_like(raw)
    nonconst = span > 0
    scaled[:, nonconst] = (raw[:, nonconst] - lo[nonconst]) / span[nonconst]
    return FeatureMatrix(
        data=scaled,
        active_features=tuple(range(len(schema))),
        record_ids=tuple(rec.id for rec in records),
        feature_names=tuple(schema.names),
    )


def export_matrix_csv(matrix: FeatureMatrix, path) -> None:
    """Audit export: record id plus one column per active feature."""
    names = matrix.feature_names or tuple(f"f{i}" for i in matrix.active_features)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", *names])
        for rid, row in zip(matrix.record_ids, matrix.data):
            writer.writerow([rid, *(format(v, ".12g") for v in row)])
