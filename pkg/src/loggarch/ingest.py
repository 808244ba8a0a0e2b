"""Exchange rate ingestion: fetching, parsing, and return computation.

The parser targets the ECB's historical reference-rate CSV (header row
"Date,USD,JPY,...", rows newest first, gaps marked "N/A"). Fetching
goes through httpx so tests can inject a transport, and successful
bodies land in a local cache directory so repeated runs stay offline.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
from pathlib import Path
from typing import NamedTuple

import httpx
import numpy as np

from .core import ReturnSeries

__all__ = [
    "ECB_HIST_URL",
    "ParsedLevels",
    "default_cache_dir",
    "fetch_ecb",
    "levels_to_returns",
    "parse_ecb_hist",
    "read_returns_csv",
]

ECB_HIST_URL = "https://www.ecb.europa.eu/stats/eurofxref/eurofxref-hist.csv"
CACHE_ENV_VAR = "LOGGARCH_CACHE_DIR"


class ParsedLevels(NamedTuple):
    """One currency's level series in chronological order.

    ``dropped`` counts rows where the requested column was missing.
    """

    dates: tuple
    levels: np.ndarray
    dropped: int


def parse_ecb_hist(csv_bytes: bytes, currency_code: str) -> ParsedLevels:
    """Extract one currency's levels from the ECB history file.

    Output is ordered by ascending date whatever the file order; rows
    whose cell is empty or "N/A" are dropped and counted. An unknown
    code raises with the list of codes the header does offer.
    """
    text = csv_bytes.decode("utf-8-sig", errors="replace")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty file, expected an ECB history header") from None
    if not header or header[0].strip() != "Date":
        raise ValueError(
            f"malformed header: first column must be 'Date', got {header[:3]!r}"
        )
    codes = [cell.strip() for cell in header[1:]]
    wanted = currency_code.strip().upper()
    try:
        column = 1 + codes.index(wanted)
    except ValueError:
        available = ", ".join(c for c in codes if c)
        raise ValueError(
            f"currency {wanted!r} is not in the file; available: {available}"
        ) from None
    rows = []
    dropped = 0
    for line_no, row in enumerate(reader, start=2):
        if not row or not row[0].strip():
            continue
        date = row[0].strip()
        cell = row[column].strip() if column < len(row) else ""
        if cell in ("", "N/A"):
            dropped += 1
            continue
        try:
            level = float(cell)
        except ValueError:
            raise ValueError(
                f"line {line_no}: cannot read {cell!r} as a {wanted} rate"
            ) from None
        rows.append((date, level))
    rows.sort(key=lambda pair: pair[0])
    dates = tuple(date for date, _ in rows)
    levels = np.array([level for _, level in rows], dtype=float)
    return ParsedLevels(dates=dates, levels=levels, dropped=dropped)


def levels_to_returns(levels, dates=None) -> ReturnSeries:
    """Percent log returns, 100 * (log P[t] - log P[t-1]).

    The output is one shorter than the input; when dates are supplied
    each return keeps the date of its later level.
    """
    values = np.asarray(levels, dtype=float).reshape(-1)
    if values.size < 2:
        raise ValueError(f"need at least 2 levels to form returns, got {values.size}")
    bad = np.flatnonzero(~(values > 0.0))
    if bad.size:
        raise ValueError(
            f"level at index {int(bad[0])} is {values[bad[0]]!r}; "
            "log returns need positive levels"
        )
    if dates is not None and len(dates) != values.size:
        raise ValueError(f"dates length {len(dates)} does not match levels {values.size}")
    returns = 100.0 * np.diff(np.log(values))
    return ReturnSeries(
        values=returns, dates=None if dates is None else tuple(dates)[1:]
    )


def default_cache_dir() -> Path:
    """Cache directory: the environment override, or ~/.cache/loggarch."""
    env = os.environ.get(CACHE_ENV_VAR, "").strip()
    if env:
        return Path(env)
    return Path.home() / ".cache" / "loggarch"


def _validate_body(body: bytes, source: str) -> None:
    if not body.strip():
        raise ValueError(f"{source}: empty body, expected an ECB history file")
    first_line = body.lstrip(b"\xef\xbb\xbf \r\n").split(b"\n", 1)[0]
    if not first_line.startswith(b"Date"):
        raise ValueError(
            f"{source}: body does not start with a 'Date' header line"
        )


def _store(cache: Path, source_key: str, body: bytes) -> None:
    content_name = hashlib.sha256(body).hexdigest() + ".csv"
    blobs = cache / "blobs"
    blobs.mkdir(parents=True, exist_ok=True)
    blob = blobs / content_name
    if not blob.exists():
        blob.write_bytes(body)
    index = cache / "index"
    index.mkdir(parents=True, exist_ok=True)
    (index / source_key).write_text(content_name, encoding="ascii")


def _lookup(cache: Path, source_key: str) -> bytes | None:
    entry = cache / "index" / source_key
    if not entry.exists():
        return None
    blob = cache / "blobs" / entry.read_text(encoding="ascii").strip()
    if not blob.exists():
        return None
    return blob.read_bytes()


def fetch_ecb(
    url_or_path: str = ECB_HIST_URL,
    transport: httpx.BaseTransport | None = None,
    cache_dir: str | Path | None = None,
    timeout: float = 30.0,
) -> bytes:
    """Return the raw ECB history file from a URL or a local path.

    Bodies are validated (nonempty, "Date" header) and written to the
    cache, blobs named by content hash with a source index beside them;
    a URL already in the index is served from the cache without any
    network traffic. ``transport`` is handed to the httpx client, which
    is how tests observe or stub the network. HTTP errors and transport
    failures propagate as httpx exceptions.
    """
    cache = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    source_key = hashlib.sha256(url_or_path.encode("utf-8")).hexdigest()
    if url_or_path.startswith(("http://", "https://")):
        cached = _lookup(cache, source_key)
        if cached is not None:
            return cached
        with httpx.Client(transport=transport, timeout=timeout) as client:
            response = client.get(url_or_path)
            response.raise_for_status()
            body = response.content
    else:
        body = Path(url_or_path).read_bytes()
    _validate_body(body, url_or_path)
    _store(cache, source_key, body)
    return body


def read_returns_csv(text_or_bytes) -> ReturnSeries:
    """Read a plain return series from CSV text.

    Accepts either a single column of numbers or two columns
    (date, value), with one optional header row. This is the generic
    input format the command line takes for pre-computed returns.
    """
    if isinstance(text_or_bytes, bytes):
        text = text_or_bytes.decode("utf-8-sig")
    else:
        text = text_or_bytes
    rows = [row for row in csv.reader(io.StringIO(text)) if row and any(c.strip() for c in row)]
    if not rows:
        raise ValueError("no data rows in the returns file")

    def is_number(cell: str) -> bool:
        try:
            return math.isfinite(float(cell))
        except ValueError:
            return False

    start = 0 if is_number(rows[0][-1].strip()) else 1
    if start == 1 and len(rows) == 1:
        raise ValueError("only a header row, no returns")
    values = []
    dates = []
    two_column = len(rows[start]) >= 2
    for line_no, row in enumerate(rows[start:], start=start + 1):
        cell = row[1] if two_column else row[0]
        try:
            values.append(float(cell.strip()))
        except ValueError:
            raise ValueError(f"row {line_no}: cannot read {cell!r} as a return") from None
        if two_column:
            dates.append(row[0].strip())
    return ReturnSeries(
        values=np.array(values, dtype=float),
        dates=tuple(dates) if two_column else None,
    )
