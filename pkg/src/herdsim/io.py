"""Empirical price series: CSV ingestion and log returns."""

import csv
import datetime as _dt
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DomainError, InsufficientDataError
from .market_series import ReturnSeries


@dataclass
class EmpiricalSeries:
    """Prices on consecutive trading rows.

    ``timestamps`` are trading-day indices: the row number for dated files,
    the given ``t`` column otherwise.
    """

    timestamps: np.ndarray
    prices: np.ndarray
    asset_label: str = ""

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        self.prices = np.asarray(self.prices, dtype=float)
        if self.timestamps.shape != self.prices.shape:
            raise DataError("timestamps and prices differ in length")
        if np.any(self.prices <= 0):
            raise DataError("prices must be > 0")
        if np.any(np.diff(self.timestamps) <= 0):
            raise DataError("timestamps must be strictly increasing")

    def __len__(self):
        return len(self.prices)


def ingest_csv(path, asset_label=None):
    """Read a ``date,price`` or ``t,price`` file.

    Errors name the 1-based line of the offending row.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip().lower() for h in rows[0]]
    if header not in (["date", "price"], ["t", "price"]):
        raise DataError(f"{path}: line 1: expected header date,price or t,price, got {rows[0]!r}")
    dated = header[0] == "date"
    stamps, prices = [], []
    prev = None
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise DataError(f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
        a, b = row[0].strip(), row[1].strip()
        try:
            stamp = _dt.date.fromisoformat(a) if dated else float(a)
            price = float(b)
        except ValueError:
            raise DataError(f"{path}: line {lineno}: malformed row {row!r}") from None
        if not price > 0 or not np.isfinite(price):
            raise DataError(f"{path}: line {lineno}: non-positive price {b}")
        if prev is not None and stamp <= prev:
            raise DataError(f"{path}: line {lineno}: timestamps must be strictly increasing")
        prev = stamp
        stamps.append(len(stamps) if dated else stamp)
        prices.append(price)
    label = asset_label if asset_label is not None else str(path)
    return EmpiricalSeries(np.array(stamps, dtype=float), np.array(prices), label)


def returns_from_prices(series, Delta=1):
    """Non-overlapping log returns ``ln P(t) - ln P(t - Delta)``, Delta in rows."""
    k = int(Delta)
    if k != Delta or k < 1:
        raise DomainError(f"Delta must be a positive whole number of rows, got {Delta}")
    if len(series) < k + 1:
        raise InsufficientDataError(f"need >= {k + 1} prices for Delta={k}, got {len(series)}")
    lp = np.log(series.prices[::k])
    return ReturnSeries(np.diff(lp), float(k), "none", meta={"asset": series.asset_label})
