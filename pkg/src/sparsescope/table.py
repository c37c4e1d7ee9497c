"""Columnar dataset with an explicit missing mask and per-cell provenance.

Missing values are first-class: every operation consults the boolean
``observed`` mask rather than a sentinel number.  Tables are immutable
after construction; all mutation helpers return a new table.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyColumn, EmptyInput, ParseError, SchemaError

OBSERVED = 0
IMPUTED = 1
PREDICTED = 2

PROVENANCE_NAMES = {OBSERVED: "observed", IMPUTED: "imputed", PREDICTED: "predicted"}


def default_group(name: str) -> str:
    """Attribute group key: the name up to the first underscore.

    Groups related attributes (gap, gap_gw, gap_hse -> "gap") so axes and
    heatmap columns can be arranged by physical meaning.
    """
    return name.split("_", 1)[0]


@dataclass(frozen=True)
class AttrMeta:
    unit: str = ""
    kind: str = "observed"  # "observed" | "target"


@dataclass
class DataTable:
    """Numeric columns over a fixed set of row identifiers.

    ``values`` is (n_rows, n_cols) float64; entries where ``observed`` is
    False are undefined (stored as NaN, never read directly).
    """

    names: tuple
    row_ids: tuple
    values: np.ndarray
    observed: np.ndarray
    groups: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.names = tuple(self.names)
        self.row_ids = tuple(self.row_ids)
        self.values = np.asarray(self.values, dtype=float)
        self.observed = np.asarray(self.observed, dtype=bool)
        if self.values.shape != (len(self.row_ids), len(self.names)):
            raise ValueError("values shape does not match row_ids x names")
        if self.observed.shape != self.values.shape:
            raise ValueError("observed mask shape does not match values")
        if len(set(self.names)) != len(self.names):
            raise SchemaError("duplicate column names")
        if len(set(self.row_ids)) != len(self.row_ids):
            raise ValueError("row ids are not unique")
        if not self.groups:
            self.groups = tuple(default_group(n) for n in self.names)
        else:
            self.groups = tuple(self.groups)
        if not self.meta:
            self.meta = {n: AttrMeta() for n in self.names}
        # NaN out unobserved cells so stale numbers cannot leak through.
        vals = self.values.copy()
        vals[~self.observed] = np.nan
        self.values = vals
        self.values.setflags(write=False)
        self.observed.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return len(self.row_ids)

    @property
    def n_cols(self) -> int:
        return len(self.names)

    def col_index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(name) from None

    def row_index(self, row_id: str) -> int:
        try:
            return self.row_ids.index(row_id)
        except ValueError:
            raise KeyError(row_id) from None

    def column(self, name: str):
        """Return (values, observed) for one column."""
        j = self.col_index(name)
        return self.values[:, j], self.observed[:, j]

    def with_values(self, values: np.ndarray, observed: np.ndarray | None = None) -> "DataTable":
        return DataTable(
            names=self.names,
            row_ids=self.row_ids,
            values=values,
            observed=self.observed if observed is None else observed,
            groups=self.groups,
            meta=dict(self.meta),
        )

    def with_meta(self, meta: dict) -> "DataTable":
        merged = dict(self.meta)
        merged.update(meta)
        return DataTable(
            names=self.names,
            row_ids=self.row_ids,
            values=self.values,
            observed=self.observed,
            groups=self.groups,
            meta=merged,
        )

    def with_kinds(self, target_names) -> "DataTable":
        """Mark the listed attributes as prediction targets."""
        targets = set(target_names)
        meta = {
            n: AttrMeta(unit=m.unit, kind="target" if n in targets else "observed")
            for n, m in self.meta.items()
        }
        return self.with_meta(meta)

    def subset(self, row_idx=None, col_idx=None) -> "DataTable":
        """New table restricted to the given row/column index sequences."""
        rows = np.arange(self.n_rows) if row_idx is None else np.asarray(row_idx, dtype=int)
        cols = np.arange(self.n_cols) if col_idx is None else np.asarray(col_idx, dtype=int)
        names = tuple(self.names[j] for j in cols)
        return DataTable(
            names=names,
            row_ids=tuple(self.row_ids[i] for i in rows),
            values=self.values[np.ix_(rows, cols)],
            observed=self.observed[np.ix_(rows, cols)],
            groups=tuple(self.groups[j] for j in cols),
            meta={n: self.meta[n] for n in names},
        )

    def select_columns(self, names) -> "DataTable":
        return self.subset(col_idx=[self.col_index(n) for n in names])


def new_provenance(table: DataTable) -> np.ndarray:
    """Fresh provenance grid: every cell tagged Observed."""
    return np.full((table.n_rows, table.n_cols), OBSERVED, dtype=np.uint8)


def load_csv(data, *, missing_token: str = "") -> DataTable:
    """Parse a UTF-8 CSV byte stream or string into a DataTable.

    The first row is the header and the first column holds row ids.  Cells
    equal to ``missing_token`` (or empty) are missing; everything else must
    parse as a real number.
    """
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    elif isinstance(data, str):
        text = data
    else:
        text = data.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty input: no header row") from None
    if len(header) < 2:
        raise SchemaError("header must contain a row-id column and at least one attribute")
    names = [h.strip() for h in header[1:]]
    if len(set(names)) != len(names):
        raise SchemaError("duplicate header names")

    row_ids = []
    rows = []
    mask = []
    for i, row in enumerate(reader, start=1):
        if not row or (len(row) == 1 and row[0].strip() == ""):
            continue  # trailing blank line
        if len(row) != len(header):
            raise ParseError(f"row {i}: expected {len(header)} fields, found {len(row)}", row=i)
        row_ids.append(row[0].strip())
        vals = np.empty(len(names))
        obs = np.empty(len(names), dtype=bool)
        for j, cell in enumerate(row[1:]):
            cell = cell.strip()
            if cell == missing_token or cell == "":
                vals[j] = np.nan
                obs[j] = False
            else:
                try:
                    vals[j] = float(cell)
                except ValueError:
                    raise ParseError(
                        f"row {i}, column {names[j]!r}: cannot parse {cell!r}", row=i, col=names[j]
                    ) from None
                obs[j] = True
        rows.append(vals)
        mask.append(obs)

    if len(set(row_ids)) != len(row_ids):
        raise SchemaError("duplicate row ids")
    values = np.array(rows) if rows else np.empty((0, len(names)))
    observed = np.array(mask) if mask else np.empty((0, len(names)), dtype=bool)
    return DataTable(names=tuple(names), row_ids=tuple(row_ids), values=values, observed=observed)


def dump_csv(table: DataTable, *, id_header: str = "id", missing_token: str = "") -> str:
    """Emit CSV mirroring load_csv: the missing mask round-trips exactly
    and values survive to 12 significant digits."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([id_header, *table.names])
    for i, rid in enumerate(table.row_ids):
        cells = [rid]
        for j in range(table.n_cols):
            if table.observed[i, j]:
                cells.append(format(table.values[i, j], ".12g"))
            else:
                cells.append(missing_token)
        writer.writerow(cells)
    return out.getvalue()


def missing_stats(table: DataTable) -> dict:
    """Exact missing fractions per column and per row."""
    if table.n_rows == 0 or table.n_cols == 0:
        raise EmptyInput("missing_stats requires a nonempty table")
    miss = ~table.observed
    col_fraction = {n: miss[:, j].sum() / table.n_rows for j, n in enumerate(table.names)}
    row_fraction = {r: miss[i, :].sum() / table.n_cols for i, r in enumerate(table.row_ids)}
    return {"colFraction": col_fraction, "rowFraction": row_fraction}


def normalize_minmax(table: DataTable) -> DataTable:
    """Map each column's observed values onto [0, 1]; constant columns map
    to 0.5 and missing cells stay missing."""
    values = table.values.copy()
    for j, name in enumerate(table.names):
        obs = table.observed[:, j]
        if not obs.any():
            raise EmptyColumn(name)
        col = table.values[obs, j]
        lo, hi = col.min(), col.max()
        if hi > lo:
            values[obs, j] = (col - lo) / (hi - lo)
        else:
            values[obs, j] = 0.5
    return table.with_values(values)
