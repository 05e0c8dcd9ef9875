"""File formats: dividend/price CSVs, estimation config and model JSON.

All numbers in files are decimals (``0.02``, never ``2%``).
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from collections import defaultdict
from datetime import date
from pathlib import Path
from typing import Any

from .core import JointGrowthModel, MomentInputs, PriceMoments
from .errors import InvalidModel, SDDMError
from .estimate import DividendSeries, EstimationConfig, EstimationReport, PriceSeries
from .portfolio import ReturnMoments

DIVIDEND_HEADER = ("ticker", "year", "dividend")
PRICE_HEADER = ("date", "stock_close", "index_close")


class ParseError(SDDMError, ValueError):
    """Malformed input file; the message names the file and line."""

    def __init__(self, path: str | Path, line: int | None, message: str):
        where = f"{path}" if line is None else f"{path}:{line}"
        super().__init__(f"{where}: {message}")
        self.path = str(path)
        self.line = line


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _rows(path: str | Path, header: tuple[str, ...]):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ParseError(path, None, exc.strerror or str(exc)) from exc
    with fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or tuple(c.strip() for c in first) != header:
            raise ParseError(path, 1, f"expected header {','.join(header)}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(path, reader.line_num, f"expected {len(header)} fields, got {len(row)}")
            yield reader.line_num, [c.strip() for c in row]


def _number(path, line, text: str, what: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(path, line, f"{what} {text!r} is not a decimal number") from None
    if not math.isfinite(value):
        raise ParseError(path, line, f"{what} must be finite")
    return value


def read_dividends_csv(path: str | Path) -> list[DividendSeries]:
    """One :class:`DividendSeries` per ticker, in order of first appearance."""
    grouped: dict[str, list[tuple[int, float]]] = defaultdict(list)
    seen: dict[tuple[str, int], int] = {}
    for line, (ticker, year_text, div_text) in _rows(path, DIVIDEND_HEADER):
        if not ticker:
            raise ParseError(path, line, "empty ticker")
        try:
            year = int(year_text)
        except ValueError:
            raise ParseError(path, line, f"year {year_text!r} is not an integer") from None
        if (ticker, year) in seen:
            raise ParseError(path, line, f"duplicate {ticker} dividend for {year}")
        seen[(ticker, year)] = line
        grouped[ticker].append((year, _number(path, line, div_text, "dividend")))
    if not grouped:
        raise ParseError(path, None, "no dividend rows")
    out = []
    for ticker, obs in grouped.items():
        try:
            out.append(DividendSeries(ticker, tuple(sorted(obs))))
        except SDDMError as exc:
            raise type(exc)(f"{path}: {exc}") from exc
    return out


def read_prices_csv(path: str | Path) -> PriceSeries:
    dates, stock, index = [], [], []
    for line, (day, s, i) in _rows(path, PRICE_HEADER):
        try:
            date.fromisoformat(day)
        except ValueError:
            raise ParseError(path, line, f"date {day!r} is not ISO-8601") from None
        if dates and day <= dates[-1]:
            raise ParseError(path, line, "dates must be strictly increasing")
        dates.append(day)
        stock.append(_number(path, line, s, "stock_close"))
        index.append(_number(path, line, i, "index_close"))
    return PriceSeries(tuple(dates), tuple(stock), tuple(index))


def read_json(path: str | Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(path, None, exc.strerror or str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, f"invalid JSON: {exc.msg}") from exc


def read_config(path: str | Path) -> EstimationConfig:
    data = read_json(path)
    if not isinstance(data, dict) or "risk_free_rate" not in data:
        raise ParseError(path, None, "config must be an object with risk_free_rate")
    try:
        return EstimationConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise ParseError(path, None, str(exc)) from exc


def write_json(data: Any, path: str | Path | None = None) -> str:
    text = json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


# ---------------------------------------------------------------------------
# Model files
# ---------------------------------------------------------------------------


def detect_kind(data: Any) -> str:
    """Classify a parsed JSON document by its keys."""
    if not isinstance(data, dict):
        return "unknown"
    if "joint_probs" in data:
        return "model"
    if "growth_covariance" in data and "stock_a" in data:
        return "moment_inputs"
    if "methods" in data and "stocks" in data:
        return "report"
    if "return_moments" in data and "inputs" in data:
        return "moments_output"
    if {"mean_a", "mean_b", "var_a", "var_b", "cov_ab"} <= data.keys() and "variance_exists_a" not in data:
        return "return_moments"
    return "unknown"


def _from_report(data: dict, method: str, source: str) -> JointGrowthModel | MomentInputs:
    from .estimate import canonical_method

    method = canonical_method(method)
    entry = data["methods"].get(method)
    if entry is None:
        raise InvalidModel(f"report has no results for method {method!r}")
    key = "moment_inputs" if source == "moments" else "model"
    if entry.get(key) is None:
        raise InvalidModel(f"report has no {key} for method {method!r} (needs two stocks with prices)")
    return MomentInputs.from_dict(entry[key]) if key == "moment_inputs" else JointGrowthModel.from_dict(entry[key])


def _pair_from_data(data: Any, path, method: str, source: str) -> JointGrowthModel | MomentInputs:
    kind = detect_kind(data)
    try:
        if kind == "model":
            return JointGrowthModel.from_dict(data)
        if kind == "moment_inputs":
            return MomentInputs.from_dict(data)
        if kind == "report":
            return _from_report(data, method, source)
        if kind == "moments_output":
            return _pair_from_data(data["inputs"], path, method, source)
    except (KeyError, TypeError) as exc:
        raise ParseError(path, None, f"missing or malformed field: {exc}") from exc
    raise ParseError(path, None, "not a model, moment-input or estimation report file")


def load_pair(
    path: str | Path, method: str = "geometric_mean", source: str = "moments"
) -> JointGrowthModel | MomentInputs:
    """Load a two-stock parameter set from a model, moment-input or report file.

    For estimation reports ``source`` chooses between the mixed-source
    ``moment_inputs`` (``"moments"``) and the two-state ``model``.  Output of
    the ``moments`` command is accepted too, through its ``inputs`` field.
    """
    return _pair_from_data(read_json(path), path, method, source)


def load_full_model(path: str | Path, method: str = "geometric_mean") -> JointGrowthModel:
    """Load a model with full growth tables (needed for simulation)."""
    data = read_json(path)
    kind = detect_kind(data)
    try:
        if kind == "model":
            return JointGrowthModel.from_dict(data)
        if kind == "report":
            return _from_report(data, method, "model")  # type: ignore[return-value]
        if kind == "moments_output" and detect_kind(data["inputs"]) == "model":
            return JointGrowthModel.from_dict(data["inputs"])
    except (KeyError, TypeError) as exc:
        raise ParseError(path, None, f"missing or malformed field: {exc}") from exc
    raise ParseError(path, None, "simulation needs a full joint model (states, probabilities, table)")


def load_return_moments(
    path: str | Path, method: str = "geometric_mean", source: str = "moments"
) -> ReturnMoments:
    """Return moments from a return-moment file, a ``moments`` output, or any
    two-stock parameter file (converted through the closed forms)."""
    from .portfolio import return_moments

    data = read_json(path)
    kind = detect_kind(data)
    try:
        if kind == "return_moments":
            return ReturnMoments.from_dict(data)
        if kind == "moments_output" and isinstance(data["return_moments"], dict):
            return ReturnMoments.from_dict(data["return_moments"])
    except (KeyError, TypeError) as exc:
        raise ParseError(path, None, f"missing or malformed field: {exc}") from exc
    return return_moments(load_pair(path, method, source))


def price_moments_to_dict(pm: PriceMoments) -> dict[str, Any]:
    out = pm.to_dict()
    out["correlation"] = pm.correlation
    return out
