"""Configuration and price-table ingestion for the command-line front end.

A market config is a JSON object with the market parameters plus optional
run controls.  The covariance comes either as a full matrix (``cov``) or as
standard deviations plus a correlation matrix (``sd`` + ``corr``), never
both.  Parsing is strict: unknown keys, shape mismatches, and out-of-range
values raise :class:`ParseError` naming the offending field, and
``parse -> serialize -> parse`` is idempotent.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import date

import numpy as np

from .errors import (
    DegenerateSeries,
    NonPositivePrice,
    ParseError,
    TooFewRows,
)
from .market import GaussianMarket, validate_market

_KNOWN_KEYS = {
    "mu", "alpha", "B", "cov", "sd", "corr",
    "h", "seed", "init_weights", "samples", "grid", "max_iter", "psd_check",
}


@dataclass
class MarketConfig:
    """Parsed market description plus run controls (all runtime knobs optional)."""

    mu: list[float]
    alpha: list[float]
    B: float
    cov: list[list[float]] | None = None
    sd: list[float] | None = None
    corr: list[list[float]] | None = None
    h: int = 2
    seed: int = 0
    init_weights: object = "uniform"
    samples: int = 1_000_000
    grid: int = 200
    max_iter: int = 10_000
    psd_check: bool = True

    @property
    def n(self) -> int:
        return len(self.mu)

    def covariance(self) -> np.ndarray:
        if self.cov is not None:
            return np.asarray(self.cov, dtype=float)
        sd = np.asarray(self.sd, dtype=float)
        return np.outer(sd, sd) * np.asarray(self.corr, dtype=float)

    def to_market(self) -> GaussianMarket:
        return validate_market(
            self.mu, self.covariance(), self.alpha, self.B, psd_check=self.psd_check
        )

    def to_dict(self) -> dict:
        out: dict = {"mu": list(self.mu), "alpha": list(self.alpha), "B": self.B}
        if self.cov is not None:
            out["cov"] = [list(r) for r in self.cov]
        else:
            out["sd"] = list(self.sd)
            out["corr"] = [list(r) for r in self.corr]
        out.update(
            h=self.h, seed=self.seed, init_weights=self.init_weights,
            samples=self.samples, grid=self.grid, max_iter=self.max_iter,
        )
        if not self.psd_check:
            out["psd_check"] = False
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "MarketConfig":
        if not isinstance(raw, dict):
            raise ParseError("config must be a JSON object")
        unknown = set(raw) - _KNOWN_KEYS
        if unknown:
            raise ParseError(f"unknown config keys: {sorted(unknown)}")
        for key in ("mu", "alpha", "B"):
            if key not in raw:
                raise ParseError(f"config missing required field {key!r}")
        mu = _float_list(raw["mu"], "mu")
        alpha = _float_list(raw["alpha"], "alpha")
        n = len(mu)
        if len(alpha) != n:
            raise ParseError(f"alpha has length {len(alpha)}, expected {n}")
        if any(a <= 0 for a in alpha):
            raise ParseError("alpha entries must be strictly positive")
        B = _number(raw["B"], "B")
        if not B < 0:
            raise ParseError(f"B must be strictly negative, got {B}")

        has_cov = "cov" in raw
        has_sdcorr = "sd" in raw or "corr" in raw
        if has_cov == has_sdcorr:
            raise ParseError("config needs exactly one of 'cov' or 'sd'+'corr'")
        cov = sd = corr = None
        if has_cov:
            cov = _matrix(raw["cov"], n, "cov")
        else:
            if "sd" not in raw or "corr" not in raw:
                raise ParseError("'sd' and 'corr' must be given together")
            sd = _float_list(raw["sd"], "sd")
            if len(sd) != n:
                raise ParseError(f"sd has length {len(sd)}, expected {n}")
            if any(s < 0 for s in sd):
                raise ParseError("sd entries must be nonnegative")
            corr = _matrix(raw["corr"], n, "corr")
            for i in range(n):
                if abs(corr[i][i] - 1.0) > 1e-9:
                    raise ParseError(f"corr diagonal entry {i} is {corr[i][i]}, expected 1")

        cfg = cls(
            mu=mu, alpha=alpha, B=B, cov=cov, sd=sd, corr=corr,
            h=int(raw.get("h", 2)),
            seed=int(raw.get("seed", 0)),
            init_weights=raw.get("init_weights", "uniform"),
            samples=int(raw.get("samples", 1_000_000)),
            grid=int(raw.get("grid", 200)),
            max_iter=int(raw.get("max_iter", 10_000)),
            psd_check=bool(raw.get("psd_check", True)),
        )
        if cfg.h < 1:
            raise ParseError("h must be at least 1")
        iw = cfg.init_weights
        if isinstance(iw, str):
            if iw not in ("uniform", "random"):
                raise ParseError(f"init_weights must be 'uniform', 'random', or a matrix, got {iw!r}")
        else:
            _matrix(iw, None, "init_weights")
        return cfg

    @classmethod
    def load(cls, path: str) -> "MarketConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ParseError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"config {path} line {exc.lineno}: {exc.msg}") from exc
        return cls.from_dict(raw)

    def dump(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def _number(x, name: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParseError(f"{name} must be a number, got {x!r}")
    v = float(x)
    if math.isnan(v) or math.isinf(v):
        raise ParseError(f"{name} must be finite")
    return v


def _float_list(x, name: str) -> list[float]:
    if not isinstance(x, (list, tuple)) or not x:
        raise ParseError(f"{name} must be a nonempty array")
    return [_number(v, f"{name}[{i}]") for i, v in enumerate(x)]


def _matrix(x, n: int | None, name: str) -> list[list[float]]:
    if not isinstance(x, (list, tuple)) or not x:
        raise ParseError(f"{name} must be a nonempty matrix")
    rows = [_float_list(r, f"{name}[{i}]") for i, r in enumerate(x)]
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ParseError(f"{name} rows have inconsistent lengths")
    if n is not None and (len(rows) != n or width != n):
        raise ParseError(f"{name} must be {n}x{n}")
    return rows


# ---------------------------------------------------------------------------
# Price tables and moment estimation.
# ---------------------------------------------------------------------------


@dataclass
class PriceTable:
    """Dated price series, one column per bank, strictly positive prices."""

    dates: list[date]
    names: list[str]
    prices: np.ndarray = field(repr=False)


def load_prices(path: str) -> PriceTable:
    """Read a CSV price table: ISO dates ascending, then one series per bank."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ParseError(f"cannot read prices {path}: {exc}") from exc
    if len(rows) < 3:
        raise TooFewRows("need a header and at least two price rows")
    header = rows[0]
    if len(header) < 2:
        raise ParseError("price table needs a date column and at least one series")
    names = [h.strip() for h in header[1:]]
    dates: list[date] = []
    prices = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            d = date.fromisoformat(row[0].strip())
        except ValueError as exc:
            raise ParseError(f"line {lineno}: bad date {row[0]!r}") from exc
        if dates and d <= dates[-1]:
            raise ParseError(f"line {lineno}: dates must be strictly ascending")
        dates.append(d)
        vals = []
        for col, cell in enumerate(row[1:], start=1):
            cell = cell.strip()
            if not cell:
                raise ParseError(f"line {lineno}: missing price in column {header[col]!r}")
            try:
                v = float(cell)
            except ValueError as exc:
                raise ParseError(f"line {lineno}: bad price {cell!r}") from exc
            if v <= 0.0:
                raise NonPositivePrice(f"line {lineno}: price {v} in column {header[col]!r}")
            vals.append(v)
        prices.append(vals)
    return PriceTable(dates=dates, names=names, prices=np.asarray(prices, dtype=float))


def estimate_moments(table: PriceTable) -> tuple[np.ndarray, np.ndarray]:
    """Per-series standard deviation and correlation of daily log-returns.

    Uses the full sample: ``r_t = ln(P_t / P_{t-1})``, sample moments with
    one delta degree of freedom.  A constant series has zero variance and no
    defined correlation, which is reported as an error rather than NaN.
    """
    if table.prices.shape[0] < 3:
        raise TooFewRows("need at least three price rows to estimate moments")
    r = np.diff(np.log(table.prices), axis=0)
    sd = r.std(axis=0, ddof=1)
    flat = [table.names[i] for i in np.flatnonzero(sd == 0.0)]
    if flat:
        raise DegenerateSeries(f"constant price series (correlation undefined): {flat}")
    corr = np.corrcoef(r.T)
    if corr.ndim == 0:  # single series
        corr = np.array([[1.0]])
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return sd, corr
