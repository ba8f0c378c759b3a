"""Observational data container, CSV ingestion, and within-group standardization."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import numerics
from .errors import InsufficientData, InvalidArgument, ParseError, SchemaError

__all__ = [
    "ObservationalSample",
    "StandardizationMap",
    "load_csv",
    "write_csv",
    "fit_standardization",
    "apply_standardization",
]


@dataclass(frozen=True)
class ObservationalSample:
    """Covariate matrix X (n x p), binary treatment T, and observed outcome Y(T).

    Immutable after construction; safe to share across threads.
    """

    covariates: np.ndarray
    treatment: np.ndarray
    outcome: np.ndarray
    column_names: tuple[str, ...] | None = None

    def __post_init__(self):
        x = np.asarray(self.covariates, dtype=float)
        t = np.asarray(self.treatment)
        y = np.asarray(self.outcome, dtype=float)
        if x.ndim != 2:
            raise InvalidArgument(f"covariates must be 2-D, got ndim={x.ndim}")
        if t.shape != (x.shape[0],) or y.shape != (x.shape[0],):
            raise InvalidArgument("treatment/outcome length must match covariate rows")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise InvalidArgument("covariates and outcomes must be finite")
        if not np.isin(t, (0, 1)).all():
            raise InvalidArgument("treatment entries must be 0 or 1")
        if self.column_names is not None and len(self.column_names) != x.shape[1]:
            raise InvalidArgument("column_names length must match covariate columns")
        object.__setattr__(self, "covariates", x)
        object.__setattr__(self, "treatment", t.astype(np.int64))
        object.__setattr__(self, "outcome", y)

    @property
    def n_subjects(self) -> int:
        return self.covariates.shape[0]

    @property
    def n_covariates(self) -> int:
        return self.covariates.shape[1]

    def group_indices(self, group: int) -> np.ndarray:
        return np.flatnonzero(self.treatment == group)


@dataclass(frozen=True)
class StandardizationMap:
    """Affine map z = S (x - mean) fitted on one treatment group.

    S is the (ridge-stabilized) inverse square root of the group's sample
    covariance; applying the map to the fitting group gives mean ~0 and
    covariance ~identity.
    """

    group_mean: np.ndarray
    inv_sqrt_cov: np.ndarray
    group_label: int


def _parse_cell(raw: str, row: int, column: str) -> float:
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise ParseError(
            f"row {row}, column '{column}': cannot parse {raw!r} as a number"
        ) from None
    if not np.isfinite(value):
        raise ParseError(f"row {row}, column '{column}': non-finite value {raw!r}")
    return value


def load_csv(path, treatment: str, outcome: str, covariates: Sequence[str]) -> ObservationalSample:
    """Read an observational sample from a headered, comma-separated file.

    Args:
        path: CSV file with a header row; UTF-8, '.' decimal point.
        treatment: name of the 0/1 treatment column.
        outcome: name of the observed-outcome column.
        covariates: names of the covariate columns, in the desired order.

    Raises:
        SchemaError: a named column is missing from the header.
        ParseError: a referenced cell is non-numeric, missing, or a treatment
            value outside {0, 1}; the message names the row and column.
    """
    covariates = list(covariates)
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty, expected a header row") from None
        header = [h.strip() for h in header]
        positions = {}
        for name in [treatment, outcome, *covariates]:
            if name not in header:
                raise SchemaError(f"missing column '{name}' in {path}")
            positions[name] = header.index(name)

        t_rows, y_rows, x_rows = [], [], []
        for i, row in enumerate(reader, start=1):
            if not row:
                continue
            needed = max(positions.values())
            if len(row) <= needed:
                raise ParseError(f"row {i}: expected {needed + 1} fields, got {len(row)}")
            t_val = _parse_cell(row[positions[treatment]], i, treatment)
            if t_val not in (0.0, 1.0):
                raise ParseError(
                    f"row {i}, column '{treatment}': treatment must be 0 or 1, got {t_val:g}"
                )
            t_rows.append(int(t_val))
            y_rows.append(_parse_cell(row[positions[outcome]], i, outcome))
            x_rows.append([_parse_cell(row[positions[c]], i, c) for c in covariates])

    if not t_rows:
        raise ParseError(f"{path}: no data rows")
    return ObservationalSample(
        covariates=np.asarray(x_rows, dtype=float),
        treatment=np.asarray(t_rows, dtype=np.int64),
        outcome=np.asarray(y_rows, dtype=float),
        column_names=tuple(covariates),
    )


def write_csv(sample: ObservationalSample, path, treatment: str = "treatment",
              outcome: str = "outcome") -> None:
    """Write a sample back out; floats use repr so reload is bit-identical."""
    names = sample.column_names or tuple(
        f"x{j + 1}" for j in range(sample.n_covariates)
    )
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([treatment, outcome, *names])
        for i in range(sample.n_subjects):
            writer.writerow(
                [int(sample.treatment[i]), repr(float(sample.outcome[i])),
                 *(repr(float(v)) for v in sample.covariates[i])]
            )


def fit_standardization(sample: ObservationalSample, group: int) -> StandardizationMap:
    """Fit the standardizing map on one treatment group.

    Uses the group sample mean and the n_t - 1 denominator covariance; the
    inverse square root is ridge-stabilized so near-constant columns (e.g.
    binary covariates that barely vary inside a group) do not blow up.

    Raises:
        InsufficientData: fewer than p + 1 subjects in the group.
    """
    rows = sample.covariates[sample.group_indices(group)]
    p = sample.n_covariates
    if rows.shape[0] < p + 1:
        raise InsufficientData(
            f"group {group} has {rows.shape[0]} subjects; need at least {p + 1}"
        )
    mean = rows.mean(axis=0)
    cov = np.atleast_2d(np.cov(rows, rowvar=False, ddof=1))
    return StandardizationMap(
        group_mean=mean,
        inv_sqrt_cov=numerics.inverse_sqrt_spd(cov),
        group_label=int(group),
    )


def apply_standardization(smap: StandardizationMap, covariates) -> np.ndarray:
    """Apply z = S (x - mean) row-wise; works on subjects from any group."""
    x = np.asarray(covariates, dtype=float)
    squeeze = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != smap.group_mean.shape[0]:
        raise InvalidArgument(
            f"expected {smap.group_mean.shape[0]} columns, got {x.shape[1]}"
        )
    z = (x - smap.group_mean) @ smap.inv_sqrt_cov
    return z[0] if squeeze else z
