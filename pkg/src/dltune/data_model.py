"""Tabular datasets: loading, factor encoding, sparsity and min-max scaling.

A :class:`DataTable` is an immutable numeric matrix with per-column metadata.
Factor (symbolic) columns are stored as 1-based positions into
``ColumnMeta.factor_levels`` until :func:`factor_to_numeric` assigns them
their final codes; operations that need numeric data refuse tables with
unencoded factor columns.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Sequence

import numpy as np

MISSING_TOKENS = frozenset({"", "?", "NA", "NaN", "nan", "null"})


class DataError(ValueError):
    """Malformed or unusable data; carries the offending location if known."""

    def __init__(self, message: str, row: int | None = None, column: str | int | None = None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.row = row
        self.column = column


@dataclass(frozen=True)
class ColumnMeta:
    name: str
    kind: str = "numeric"
    factor_levels: tuple[str, ...] = ()
    is_label: bool = False
    # code assigned to each level (parallel to factor_levels); None = not yet encoded
    encoding: tuple[int, ...] | None = None
    # (min, max) of the last min-max rescale applied to this column
    scale: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in ("numeric", "factor"):
            raise ValueError(f"unknown column kind {self.kind!r}")
        if self.kind == "factor" and not self.factor_levels:
            raise ValueError(f"factor column {self.name!r} has no levels")
        if self.encoding is not None:
            if sorted(self.encoding) != list(range(1, len(self.factor_levels) + 1)):
                raise ValueError(f"encoding of {self.name!r} is not a bijection onto 1..CF")

    @property
    def encoded(self) -> bool:
        return self.kind == "numeric" or self.encoding is not None

    def decode(self, value: float) -> str:
        """Map a stored cell value of a factor column back to its level."""
        if self.kind != "factor" or self.scale is not None:
            raise DataError("column holds no decodable factor codes", column=self.name)
        code = int(value)
        position = code if self.encoding is None else self.encoding.index(code) + 1
        return self.factor_levels[position - 1]


@dataclass(frozen=True)
class DataTable:
    values: np.ndarray
    columns: tuple[ColumnMeta, ...]
    label_index: int
    name: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError(f"expected a 2-D matrix, got shape {values.shape}")
        n_rows, n_cols = values.shape
        if len(self.columns) != n_cols:
            raise DataError(f"{len(self.columns)} column descriptors for {n_cols} columns")
        if not 0 <= self.label_index < n_cols:
            raise DataError(f"label index {self.label_index} out of range")
        if n_rows < 2:
            raise DataError(f"need at least 2 instances, got {n_rows}")
        if n_cols < 2:
            raise DataError("need at least one feature besides the label")
        columns = tuple(
            replace(c, is_label=(j == self.label_index)) if c.is_label != (j == self.label_index) else c
            for j, c in enumerate(self.columns)
        )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "columns", columns)

    @property
    def n_instances(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1] - 1

    @property
    def feature_indices(self) -> list[int]:
        return [j for j in range(self.values.shape[1]) if j != self.label_index]

    @property
    def features(self) -> np.ndarray:
        return self.values[:, self.feature_indices]

    @property
    def labels(self) -> np.ndarray:
        return self.values[:, self.label_index]

    @property
    def label_column(self) -> ColumnMeta:
        return self.columns[self.label_index]

    def with_column(self, col: int, values: np.ndarray, meta: ColumnMeta) -> DataTable:
        new = self.values.copy()
        new[:, col] = values
        columns = list(self.columns)
        columns[col] = meta
        return replace(self, values=new, columns=tuple(columns))


@dataclass(frozen=True)
class DatasetProfile:
    name: str
    sparsity: float
    class_histogram: dict = field(default_factory=dict)
    class_uniformity: float = 1.0
    n_features: int = 0
    n_instances: int = 0

    def to_json(self) -> str:
        payload = {
            "name": self.name,
            "n_features": self.n_features,
            "n_instances": self.n_instances,
            "sparsity": self.sparsity,
            "class_histogram": {_label_key(k): v for k, v in self.class_histogram.items()},
            "class_uniformity": self.class_uniformity,
        }
        return json.dumps(payload, indent=2)


def _label_key(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


# --------------------------------------------------------------------- loading


def _read_text(source) -> tuple[str, str]:
    """Return (text, default name) for a path, bytes or stream."""
    if isinstance(source, (str, os.PathLike)):
        path = os.fspath(source)
        with open(path, "rb") as fh:
            raw = fh.read()
        name = os.path.splitext(os.path.basename(path))[0]
    elif isinstance(source, (bytes, bytearray)):
        raw, name = bytes(source), ""
    elif hasattr(source, "read"):
        raw, name = source.read(), ""
    else:
        raise TypeError(f"cannot read table from {type(source).__name__}")
    text = raw.decode("utf-8-sig") if isinstance(raw, (bytes, bytearray)) else raw
    return text, name


def load_table(source, format: str = "csv", label: str | int = -1, name: str | None = None) -> DataTable:
    """Load a CSV (header row required) or ARFF table.

    ``label`` is a column name or index; negative indices count from the end.
    Non-numeric tokens make a column a factor (levels sorted for CSV, declared
    order for ARFF). Missing cells are rejected.
    """
    if format == "csv":
        text, default_name = _read_text(source)
        names, cells = _parse_csv(text)
        columns, values = _infer_columns(names, cells)
    elif format == "arff":
        text, default_name = _read_text(source)
        relation, columns, values = _parse_arff(text)
        default_name = default_name or relation
    else:
        raise ValueError(f"unsupported format {format!r}")

    label_index = _resolve_label(label, [c.name for c in columns])
    return DataTable(values, tuple(columns), label_index, name or default_name)


def _resolve_label(label: str | int, names: Sequence[str]) -> int:
    if isinstance(label, str) and not label.lstrip("-").isdigit():
        if label not in names:
            raise DataError(f"unknown label column {label!r}")
        return names.index(label)
    idx = int(label)
    if not -len(names) <= idx < len(names):
        raise DataError(f"label index {idx} out of range for {len(names)} columns")
    return idx % len(names)


def _parse_csv(text: str) -> tuple[list[str], list[tuple[int, list[str]]]]:
    reader = csv.reader(io.StringIO(text))
    header = None
    rows = []
    for record in reader:
        lineno = reader.line_num
        if not record or all(not cell.strip() for cell in record):
            continue
        if header is None:
            header = [cell.strip() for cell in record]
            continue
        if len(record) != len(header):
            raise DataError(f"expected {len(header)} fields, got {len(record)}", row=lineno)
        rows.append((lineno, [cell.strip() for cell in record]))
    if header is None or not rows:
        raise DataError("empty file")
    return header, rows


def _infer_columns(names, rows) -> tuple[list[ColumnMeta], np.ndarray]:
    n_cols = len(names)
    values = np.empty((len(rows), n_cols))
    columns = []
    for j in range(n_cols):
        tokens = []
        for lineno, record in rows:
            tok = record[j]
            if tok in MISSING_TOKENS:
                raise DataError("missing value", row=lineno, column=names[j])
            tokens.append(tok)
        numbers = _try_floats(tokens)
        if numbers is not None:
            bad = np.flatnonzero(~np.isfinite(numbers))
            if bad.size:
                raise DataError("non-finite value", row=rows[bad[0]][0], column=names[j])
            values[:, j] = numbers
            columns.append(ColumnMeta(names[j]))
        else:
            levels = tuple(sorted(set(tokens)))
            position = {lev: i + 1 for i, lev in enumerate(levels)}
            values[:, j] = [position[t] for t in tokens]
            columns.append(ColumnMeta(names[j], "factor", levels))
    return columns, values


def _try_floats(tokens: Iterable[str]) -> np.ndarray | None:
    try:
        return np.array([float(t) for t in tokens])
    except ValueError:
        return None


def _split_arff_row(line: str) -> list[str]:
    """Split a dense ARFF data line on commas, honouring ' and " quoting."""
    out, buf, quote, escaped = [], [], None, False
    for ch in line:
        if escaped:
            buf.append(ch)
            escaped = False
        elif ch == "\\":
            escaped = True
        elif quote:
            if ch == quote:
                quote = None
            else:
                buf.append(ch)
        elif ch in "'\"":
            quote = ch
        elif ch == ",":
            out.append("".join(buf).strip())
            buf = []
        else:
            buf.append(ch)
    out.append("".join(buf).strip())
    return out


def _unquote(token: str) -> str:
    token = token.strip()
    if len(token) >= 2 and token[0] == token[-1] and token[0] in "'\"":
        return token[1:-1]
    return token


def _parse_attribute(line: str, lineno: int) -> tuple[str, str, tuple[str, ...]]:
    rest = line[len("@attribute"):].strip()
    if rest[:1] in "'\"":
        end = rest.index(rest[0], 1)
        name, rest = rest[1:end], rest[end + 1:].strip()
    else:
        parts = rest.split(None, 1)
        if len(parts) != 2:
            raise DataError("malformed @attribute declaration", row=lineno)
        name, rest = parts
    if rest.startswith("{"):
        if not rest.endswith("}"):
            raise DataError("unterminated nominal declaration", row=lineno, column=name)
        levels = tuple(_unquote(t) for t in _split_arff_row(rest[1:-1]) if t.strip())
        return name, "nominal", levels
    kind = rest.split()[0].lower()
    if kind in ("numeric", "real", "integer"):
        return name, "numeric", ()
    if kind == "string":
        return name, "string", ()
    raise DataError(f"unsupported attribute type {kind!r}", row=lineno, column=name)


def _parse_arff(text: str):
    relation = ""
    attrs: list[tuple[str, str, tuple[str, ...]]] = []
    data_rows: list[tuple[int, list[str]]] = []
    in_data = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        lower = line.lower()
        if not in_data:
            if lower.startswith("@relation"):
                relation = _unquote(line[len("@relation"):])
            elif lower.startswith("@attribute"):
                attrs.append(_parse_attribute(line, lineno))
            elif lower.startswith("@data"):
                in_data = True
            else:
                raise DataError("unexpected header line", row=lineno)
            continue
        if line.startswith("{"):
            record = _expand_sparse(line, attrs, lineno)
        else:
            record = [_unquote(t) for t in _split_arff_row(line)]
        if len(record) != len(attrs):
            raise DataError(f"expected {len(attrs)} fields, got {len(record)}", row=lineno)
        data_rows.append((lineno, record))
    if not attrs or not data_rows:
        raise DataError("empty file")

    values = np.empty((len(data_rows), len(attrs)))
    columns = []
    for j, (name, kind, levels) in enumerate(attrs):
        if kind == "string":
            levels = tuple(sorted({rec[j] for _, rec in data_rows} - MISSING_TOKENS))
        position = {lev: i + 1 for i, lev in enumerate(levels)}
        for i, (lineno, record) in enumerate(data_rows):
            tok = record[j]
            if tok == "?" or tok == "":
                raise DataError("missing value", row=lineno, column=name)
            if kind == "numeric":
                try:
                    v = float(tok)
                except ValueError:
                    raise DataError(f"unparseable numeric cell {tok!r}", row=lineno, column=name) from None
                if not math.isfinite(v):
                    raise DataError("non-finite value", row=lineno, column=name)
                values[i, j] = v
            else:
                if tok not in position:
                    raise DataError(f"undeclared nominal value {tok!r}", row=lineno, column=name)
                values[i, j] = position[tok]
        columns.append(ColumnMeta(name) if kind == "numeric" else ColumnMeta(name, "factor", levels))
    return relation, columns, values


def _expand_sparse(line: str, attrs, lineno: int) -> list[str]:
    if not line.endswith("}"):
        raise DataError("unterminated sparse row", row=lineno)
    # omitted sparse entries are 0, i.e. the first declared level for nominals
    record = [a[2][0] if a[1] == "nominal" else "0" for a in attrs]
    body = line[1:-1].strip()
    if not body:
        return record
    for item in _split_arff_row(body):
        try:
            idx, tok = item.split(None, 1)
            record[int(idx)] = _unquote(tok)
        except (ValueError, IndexError):
            raise DataError(f"malformed sparse entry {item!r}", row=lineno) from None
    return record


def write_table(table: DataTable, target: str | os.PathLike | IO[str]) -> None:
    """Write ``table`` as CSV; factor cells are written as their levels."""
    own = isinstance(target, (str, os.PathLike))
    fh = open(target, "w", newline="") if own else target
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([c.name for c in table.columns])
        decoders = [c.decode if c.kind == "factor" and c.scale is None else None for c in table.columns]
        for row in table.values:
            writer.writerow([dec(v) if dec else repr(float(v)) for dec, v in zip(decoders, row)])
    finally:
        if own:
            fh.close()


# ------------------------------------------------------------------ transforms


def _check_col(table: DataTable, col: int) -> int:
    n = table.values.shape[1]
    if not -n <= col < n:
        raise DataError(f"column index {col} out of range for {n} columns")
    return col % n


def detect_factor(table: DataTable, col: int) -> bool:
    return table.columns[_check_col(table, col)].kind == "factor"


def factor_to_numeric(table: DataTable, col: int, policy: str = "level_index", seed: int | None = None) -> DataTable:
    """Encode a factor column's levels as distinct codes in 1..CF.

    ``level_index`` numbers levels in their stored order (sorted for CSV);
    ``seeded_permutation`` draws a seed-determined bijection instead.
    """
    col = _check_col(table, col)
    meta = table.columns[col]
    if meta.kind != "factor":
        raise DataError("not a factor column", column=meta.name)
    if meta.scale is not None:
        raise DataError("factor column was already rescaled", column=meta.name)
    cf = len(meta.factor_levels)
    if policy == "level_index":
        encoding = tuple(range(1, cf + 1))
    elif policy == "seeded_permutation":
        if seed is None:
            raise ValueError("seeded_permutation needs a seed")
        encoding = tuple(int(c) for c in np.random.default_rng(seed).permutation(cf) + 1)
    else:
        raise ValueError(f"unknown factor policy {policy!r}")

    current = table.values[:, col].astype(int)
    if meta.encoding is None:
        positions = current
    else:
        inverse = np.empty(cf + 1, dtype=int)
        inverse[list(meta.encoding)] = np.arange(1, cf + 1)
        positions = inverse[current]
    codes = np.asarray(encoding, dtype=float)[positions - 1]
    return table.with_column(col, codes, replace(meta, encoding=encoding))


def _require_encoded(table: DataTable) -> None:
    for c in table.columns:
        if not c.encoded:
            raise DataError("factor column must be converted to numeric first", column=c.name)


def sparsity(table: DataTable, include_label: bool = True) -> float:
    """Fraction of cells exactly equal to zero."""
    _require_encoded(table)
    block = table.values if include_label else table.features
    if block.size == 0:
        raise DataError("empty table")
    return float(np.count_nonzero(block == 0.0)) / block.size


def minmax_normalize(table: DataTable, exclude_label: bool = True) -> DataTable:
    """Rescale each in-scope column to [0, 1]; constant columns become 0."""
    _require_encoded(table)
    if not np.all(np.isfinite(table.values)):
        r, c = np.argwhere(~np.isfinite(table.values))[0]
        raise DataError("non-finite value", row=int(r), column=table.columns[c].name)
    values = table.values.copy()
    columns = list(table.columns)
    for j in range(values.shape[1]):
        if exclude_label and j == table.label_index:
            continue
        lo, hi = values[:, j].min(), values[:, j].max()
        if hi > lo:
            values[:, j] = (values[:, j] - lo) / (hi - lo)
        else:
            values[:, j] = 0.0
        columns[j] = replace(columns[j], scale=(float(lo), float(hi)))
    return replace(table, values=values, columns=tuple(columns))


def preprocess_all(
    tables: Sequence[DataTable],
    factor_policy: str = "level_index",
    seed: int = 0,
    normalize: bool = True,
    exclude_label: bool = True,
    convert_features: bool = True,
    include_label_in_sparsity: bool = True,
) -> tuple[list[DataTable], list[float]]:
    """Encode factors, record sparsity, then min-max normalize each table.

    Returns the processed tables and the sparsity list, both in input order.
    Sparsity is measured before normalization.
    """
    processed, slist = [], []
    for i, table in enumerate(tables):
        targets = [table.label_index] if detect_factor(table, table.label_index) else []
        if convert_features:
            targets += [j for j in table.feature_indices if detect_factor(table, j)]
        for j in targets:
            if table.columns[j].encoded:
                continue
            col_seed = int(np.random.SeedSequence([seed, i, j]).generate_state(1)[0])
            table = factor_to_numeric(table, j, factor_policy, seed=col_seed)
        slist.append(sparsity(table, include_label=include_label_in_sparsity))
        if normalize:
            table = minmax_normalize(table, exclude_label=exclude_label)
        processed.append(table)
    return processed, slist


def profile(table: DataTable, name: str | None = None) -> DatasetProfile:
    """Sparsity, class histogram and normalized class entropy of a table."""
    _require_encoded(table)
    counts = Counter(float(v) for v in table.labels)
    histogram = {k: counts[k] for k in sorted(counts)}
    k = len(histogram)
    if k <= 1:
        uniformity = 1.0
    else:
        p = np.array(list(histogram.values()), dtype=float) / table.n_instances
        uniformity = float(-(p * np.log(p)).sum() / math.log(k))
    return DatasetProfile(
        name=name if name is not None else table.name,
        sparsity=sparsity(table, include_label=True),
        class_histogram=histogram,
        class_uniformity=uniformity,
        n_features=table.n_features,
        n_instances=table.n_instances,
    )
