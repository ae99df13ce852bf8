"""Labelled feature matrices and their canonical CSV format.

CSV layout (UTF-8, "." decimal separator, rows in file order):

    f0,f1,...,f{D-1},label[,split][,group]

Every column that is not the label, split or group column is a feature
column, in header order. Split tags are ``train``, ``validation`` and
``test``; a file without a split column is read as all-``train``. The group
column (slide ID for patch rows) is optional and only needed for
:func:`mean_feature_vectors`.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from aind_embedding_selector.errors import (
    DatasetParseError,
    DatasetSchemaError,
    DatasetValidationError,
    EmptySplitError,
    GroupConsistencyError,
)
from aind_embedding_selector.utils.atomic_io import atomic_write_text
from aind_embedding_selector.utils.fingerprint import fingerprint_chunks

logger = logging.getLogger(__name__)

SPLITS = ("train", "validation", "test")


@dataclass(frozen=True)
class ColumnSchema:
    """Names of the non-feature columns of a dataset CSV."""

    label: str = "label"
    split: str = "split"
    group: str = "group"


@dataclass(frozen=True, eq=False)
class FeatureDataset:
    """Immutable sample × feature matrix with class labels and split tags.

    ``values`` is a float64 array of shape (n_samples, D). ``labels``,
    ``splits`` and (optionally) ``groups`` are per-row string arrays. All
    arrays are made read-only on construction, so one instance can be shared
    by any number of concurrent evaluations.
    """

    values: np.ndarray
    labels: np.ndarray
    splits: np.ndarray
    groups: Optional[np.ndarray] = None
    class_ids: tuple = field(init=False)
    label_codes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2 or values.shape[1] == 0:
            raise DatasetValidationError(
                f"values must be a 2-D matrix with at least one feature, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise DatasetValidationError("values must be finite")
        n = values.shape[0]
        labels = np.array([str(x) for x in self.labels], dtype=str)
        splits = np.array([str(x) for x in self.splits], dtype=str)
        if labels.shape != (n,) or splits.shape != (n,):
            raise DatasetValidationError("labels and splits must have one entry per row")
        unknown = sorted(set(splits.tolist()) - set(SPLITS))
        if unknown:
            raise DatasetValidationError(f"unknown split tag(s): {unknown}")
        groups = None
        if self.groups is not None:
            groups = np.array([str(x) for x in self.groups], dtype=str)
            if groups.shape != (n,):
                raise DatasetValidationError("groups must have one entry per row")
            groups.setflags(write=False)

        class_ids = tuple(sorted(set(labels.tolist())))
        codes = np.searchsorted(np.array(class_ids, dtype=str), labels).astype(np.int64)

        for arr in (values, labels, splits, codes):
            arr.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "splits", splits)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "class_ids", class_ids)
        object.__setattr__(self, "label_codes", codes)

    # ------------------------------------------------------------------
    # Shape helpers
    # ------------------------------------------------------------------

    @property
    def feature_count(self) -> int:
        return int(self.values.shape[1])

    @property
    def sample_count(self) -> int:
        return int(self.values.shape[0])

    def rows(self, split: str) -> np.ndarray:
        """Return the row indices tagged *split*, in file order."""
        if split not in SPLITS:
            raise DatasetValidationError(f"unknown split tag {split!r}")
        return np.flatnonzero(self.splits == split)

    def require_split(self, split: str) -> np.ndarray:
        """Like :meth:`rows` but raises :class:`EmptySplitError` when the split is empty."""
        idx = self.rows(split)
        if idx.size == 0:
            raise EmptySplitError(f"split {split!r} has no rows")
        return idx

    # ------------------------------------------------------------------
    # Derived datasets
    # ------------------------------------------------------------------

    def project(self, feature_indices: Sequence[int]) -> "FeatureDataset":
        """Return the dataset restricted to *feature_indices* (in the given order)."""
        idx = np.asarray(feature_indices, dtype=np.int64)
        if idx.size == 0:
            raise DatasetValidationError("projection must keep at least one feature")
        if idx.min() < 0 or idx.max() >= self.feature_count:
            raise DatasetValidationError("projection index out of range")
        return FeatureDataset(self.values[:, idx], self.labels, self.splits, self.groups)

    def restrict_classes(self, class_ids: Sequence[str]) -> "FeatureDataset":
        """Keep only rows whose label is in *class_ids* (one category's sub-problem)."""
        wanted = [str(c) for c in class_ids]
        missing = sorted(set(wanted) - set(self.class_ids))
        if missing:
            raise DatasetValidationError(f"class(es) not present in dataset: {missing}")
        keep = np.isin(self.labels, wanted)
        groups = self.groups[keep] if self.groups is not None else None
        return FeatureDataset(self.values[keep], self.labels[keep], self.splits[keep], groups)

    def fingerprint(self) -> str:
        """Content hash over values, labels, splits and groups."""
        sep = "\x1f"
        chunks = [
            np.ascontiguousarray(self.values, dtype="<f8").tobytes(),
            sep.join(self.labels.tolist()).encode("utf-8"),
            sep.join(self.splits.tolist()).encode("utf-8"),
        ]
        if self.groups is not None:
            chunks.append(sep.join(self.groups.tolist()).encode("utf-8"))
        return fingerprint_chunks(*chunks)


# ----------------------------------------------------------------------
# CSV I/O
# ----------------------------------------------------------------------


def load_csv(path: Path, schema: ColumnSchema = ColumnSchema()) -> FeatureDataset:
    """Load a dataset CSV, preserving row order.

    Raises
    ------
    DatasetSchemaError
        The label column is missing or no feature column remains.
    DatasetParseError
        A row has the wrong number of cells or a feature cell is not a finite number.
    DatasetValidationError
        A split tag is not one of ``train``, ``validation``, ``test``.
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetSchemaError(f"{path}: empty file") from None

        if schema.label not in header:
            raise DatasetSchemaError(f"{path}: missing label column {schema.label!r}")
        label_col = header.index(schema.label)
        split_col = header.index(schema.split) if schema.split in header else None
        group_col = header.index(schema.group) if schema.group in header else None
        role_cols = {label_col, split_col, group_col} - {None}
        feature_cols = [i for i in range(len(header)) if i not in role_cols]
        if not feature_cols:
            raise DatasetSchemaError(f"{path}: no feature columns")

        values, labels, splits, groups = [], [], [], []
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetParseError(
                    f"expected {len(header)} cells, found {len(row)}", row=row_no
                )
            vec = []
            for col in feature_cols:
                cell = row[col].strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise DatasetParseError(
                        f"non-numeric feature value {cell!r}", row=row_no, column=header[col]
                    ) from None
                if not math.isfinite(v):
                    raise DatasetParseError(
                        f"non-finite feature value {cell!r}", row=row_no, column=header[col]
                    )
                vec.append(v)
            values.append(vec)
            labels.append(row[label_col].strip())
            split = row[split_col].strip() if split_col is not None else "train"
            if split not in SPLITS:
                raise DatasetValidationError(
                    f"row {row_no}: unknown split tag {split!r} (expected one of {SPLITS})"
                )
            splits.append(split)
            if group_col is not None:
                groups.append(row[group_col].strip())

    if not values:
        raise DatasetValidationError(f"{path}: no data rows")

    ds = FeatureDataset(
        values=np.array(values, dtype=np.float64),
        labels=labels,
        splits=splits,
        groups=groups if group_col is not None else None,
    )
    logger.debug("loaded %s: %d rows, D=%d, classes=%s",
                 path, ds.sample_count, ds.feature_count, list(ds.class_ids))
    return ds


def dataset_to_csv_text(ds: FeatureDataset) -> str:
    """Render *ds* in the canonical CSV layout (shortest round-trip float repr)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = [f"f{i}" for i in range(ds.feature_count)] + ["label", "split"]
    if ds.groups is not None:
        header.append("group")
    writer.writerow(header)
    for i in range(ds.sample_count):
        row = [repr(float(v)) for v in ds.values[i]]
        row += [ds.labels[i], ds.splits[i]]
        if ds.groups is not None:
            row.append(ds.groups[i])
        writer.writerow(row)
    return buf.getvalue()


def save_csv(ds: FeatureDataset, path: Path) -> None:
    """Write *ds* to *path* atomically in the canonical CSV layout."""
    atomic_write_text(Path(path), dataset_to_csv_text(ds))
    logger.info("wrote dataset %s (%d rows, D=%d)", path, ds.sample_count, ds.feature_count)


# ----------------------------------------------------------------------
# Aggregation
# ----------------------------------------------------------------------


def mean_feature_vectors(ds: FeatureDataset) -> FeatureDataset:
    """Collapse patch rows into one mean feature vector (MFV) per group.

    Output rows follow the order in which each group first appears. Each
    group's label and split are inherited; the output carries no groups.

    Raises
    ------
    GroupConsistencyError
        A row has no group ID, or rows of one group disagree on label or split.
    """
    if ds.groups is None or np.any(ds.groups == ""):
        raise GroupConsistencyError("every row must carry a group ID")

    uniq, first_idx, inverse = np.unique(ds.groups, return_index=True, return_inverse=True)
    order = np.argsort(first_idx, kind="stable")
    # rank[g] = output position of unique group g
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    out_idx = rank[inverse.reshape(-1)]

    n_groups = uniq.size
    for g in range(n_groups):
        members = out_idx == rank[g]
        if np.unique(ds.labels[members]).size != 1:
            raise GroupConsistencyError(f"group {uniq[g]!r} has inconsistent labels")
        if np.unique(ds.splits[members]).size != 1:
            raise GroupConsistencyError(f"group {uniq[g]!r} has inconsistent splits")

    sums = np.zeros((n_groups, ds.feature_count), dtype=np.float64)
    np.add.at(sums, out_idx, ds.values)
    counts = np.bincount(out_idx, minlength=n_groups).astype(np.float64)
    firsts = first_idx[order]
    return FeatureDataset(
        values=sums / counts[:, None],
        labels=ds.labels[firsts],
        splits=ds.splits[firsts],
    )
