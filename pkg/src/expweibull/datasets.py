"""Lifetime data ingestion, type II censoring and the two bundled benchmark sets."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .exceptions import DataError, InvalidParameterError
from .likelihood import CensoredSample

ROUNDING_RULES = ("floor", "round", "ceil")

BUNDLED = {
    "ballbearings": (
        "ballbearings.csv",
        "Lieblein and Zelen (1956) ball-bearing endurance data, via Lawless (1982); "
        "analysed in Gupta and Kundu (2001)",
    ),
    "carbon": (
        "carbon.csv",
        "Nichols and Padgett (2006) breaking stress of carbon fibres (GPa)",
    ),
}


@dataclass(frozen=True)
class Dataset:
    name: str
    values: tuple
    source: str = ""

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise DataError(f"dataset {self.name!r} is empty")
        bad = [i for i, v in enumerate(vals) if not (math.isfinite(v) and v > 0)]
        if bad:
            raise DataError(f"dataset {self.name!r}: values must be finite and > 0 (first bad index {bad[0]})")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def _parse(cell: str) -> Optional[float]:
    try:
        return float(cell)
    except ValueError:
        return None


def load_csv(path, column: Union[int, str] = 0, delimiter: str = ",", name: Optional[str] = None) -> Dataset:
    """Read one numeric column of a delimited file.

    A first row whose selected cell is not numeric is taken as a header;
    ``column`` may then name a header field. Blank lines are skipped. Bad
    cells raise :class:`DataError` naming the 1-based line number.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [(lineno, row) for lineno, row in enumerate(csv.reader(fh, delimiter=delimiter), start=1)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    rows = [(lineno, row) for lineno, row in rows if any(cell.strip() for cell in row)]
    if not rows:
        raise DataError(f"{path}: no data rows")

    first_line, first = rows[0]
    if isinstance(column, str):
        header = [cell.strip() for cell in first]
        if column not in header:
            raise DataError(f"{path}: column {column!r} not in header {header}")
        index, rows = header.index(column), rows[1:]
    else:
        index = int(column)
        if index < 0:
            raise InvalidParameterError(f"column index must be >= 0, got {column!r}")
        if index < len(first) and _parse(first[index].strip()) is None:
            rows = rows[1:]

    values = []
    for lineno, row in rows:
        if index >= len(row):
            raise DataError(f"{path}: line {lineno} has no column {index}")
        cell = row[index].strip()
        value = _parse(cell)
        if value is None or not math.isfinite(value):
            raise DataError(f"{path}: line {lineno}: cannot parse {cell!r} as a number")
        if value <= 0:
            raise DataError(f"{path}: line {lineno}: lifetime must be > 0, got {cell}")
        values.append(value)
    if not values:
        raise DataError(f"{path}: no data rows")
    return Dataset(name or path.stem, tuple(values), str(path))


def bundled_path(name: str) -> Path:
    """Filesystem path of a bundled fixture, by key or file name."""
    key = name[:-4] if name.endswith(".csv") else name
    if key not in BUNDLED:
        raise DataError(f"no bundled dataset {name!r}; available: {sorted(BUNDLED)}")
    return Path(str(resources.files("expweibull") / "data" / BUNDLED[key][0]))


def _load_bundled(key: str) -> Dataset:
    fname, source = BUNDLED[key]
    data = load_csv(bundled_path(fname), name=key)
    return Dataset(key, data.values, source)


def load_ballbearings() -> Dataset:
    """23 ball-bearing endurance times (millions of revolutions)."""
    return _load_bundled("ballbearings")


def load_carbon_fibre() -> Dataset:
    """100 carbon-fibre breaking stresses (GPa)."""
    return _load_bundled("carbon")


def rate_to_r(n: int, rate: float, rounding: str = "round") -> int:
    """Number of observed failures when a fraction ``rate`` of ``n`` is censored.

    ``round`` rounds halves up. A 1e-9 slack absorbs binary representation
    error, so ``23 * 0.9`` counts as 20.7 and ``100 * 0.9`` as exactly 90.
    """
    if rounding not in ROUNDING_RULES:
        raise InvalidParameterError(f"rounding must be one of {ROUNDING_RULES}, got {rounding!r}")
    rate = float(rate)
    if not 0.0 <= rate < 1.0:
        raise InvalidParameterError(f"censoring rate must lie in [0, 1), got {rate!r}")
    x = n * (1.0 - rate)
    if rounding == "floor":
        r = math.floor(x + 1e-9)
    elif rounding == "ceil":
        r = math.ceil(x - 1e-9)
    else:
        r = math.floor(x + 0.5 + 1e-9)
    if r < 1:
        raise DataError(f"censoring rate {rate} leaves no observed failures out of n={n}")
    return int(r)


def apply_type2_censoring(data, r: Optional[int] = None, rate: Optional[float] = None,
                          rounding: str = "round") -> CensoredSample:
    """Keep the ``r`` smallest lifetimes of ``data`` with ``n_total = len(data)``.

    Give ``r`` or ``rate``, not both; neither means no censoring. Sorting is
    stable, so tied values keep their input order.
    """
    values = data.as_array() if isinstance(data, Dataset) else np.asarray(data, dtype=float).ravel()
    n = values.size
    if n == 0:
        raise DataError("cannot censor an empty dataset")
    if r is not None and rate is not None:
        raise InvalidParameterError("give either r or rate, not both")
    if rate is not None:
        r = rate_to_r(n, rate, rounding)
    elif r is None:
        r = n
    if isinstance(r, bool) or int(r) != r or not 1 <= r <= n:
        raise DataError(f"r must be an integer in [1, {n}], got {r!r}")
    ordered = np.sort(values, kind="stable")
    return CensoredSample(ordered[: int(r)], n)
