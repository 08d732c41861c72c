"""Clickstream ingestion: page catalogs, hit matrices, log parsers, activity filter."""

from __future__ import annotations

import csv
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "PageCatalog",
    "HitMatrix",
    "ParseError",
    "LogTally",
    "parse_sequence_file",
    "parse_common_log_file",
    "filter_users",
    "activity",
]


class ParseError(ValueError):
    """Raised on malformed input. ``lineno`` is 1-based, or None for whole-file failures."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class PageCatalog:
    """Ordered, immutable list of page (category) labels."""

    labels: tuple[str, ...]
    index: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        index = {label: j for j, label in enumerate(labels)}
        if len(index) != len(labels):
            dupes = sorted(k for k, v in Counter(labels).items() if v > 1)
            raise ValueError(f"duplicate page labels: {dupes}")
        object.__setattr__(self, "index", index)

    def __len__(self) -> int:
        return len(self.labels)

    @classmethod
    def from_csv(cls, path) -> "PageCatalog":
        """Read a two-column ``index,label`` file with 1-based, contiguous indices."""
        with open(path, newline="", encoding="utf-8") as fh:
            return cls._from_rows(csv.reader(fh), str(path))

    @classmethod
    def msnbc(cls) -> "PageCatalog":
        """The 17 MSNBC URL categories, in their canonical numbering."""
        ref = resources.files("coclick").joinpath("data/msnbc_catalog.csv")
        with ref.open("r", encoding="utf-8", newline="") as fh:
            return cls._from_rows(csv.reader(fh), "msnbc_catalog.csv")

    @classmethod
    def _from_rows(cls, rows, source: str) -> "PageCatalog":
        entries = []
        for lineno, row in enumerate(rows, start=1):
            if not row or (lineno == 1 and row[0].strip().lower() == "index"):
                continue
            if len(row) != 2:
                raise ParseError(f"{source}: expected 'index,label'", lineno)
            try:
                entries.append((int(row[0]), row[1].strip()))
            except ValueError:
                raise ParseError(f"{source}: bad index {row[0]!r}", lineno) from None
        entries.sort()
        if [i for i, _ in entries] != list(range(1, len(entries) + 1)):
            raise ParseError(f"{source}: indices must be 1..m without gaps")
        return cls(tuple(label for _, label in entries))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "label"])
            for j, label in enumerate(self.labels, start=1):
                w.writerow([j, label])


@dataclass(frozen=True, eq=False)
class HitMatrix:
    """n x m matrix of visit counts; rows are users, columns are catalog pages."""

    users: tuple[str, ...]
    catalog: PageCatalog
    counts: np.ndarray

    def __post_init__(self):
        users = tuple(str(u) for u in self.users)
        counts = np.array(self.counts, dtype=np.int64, copy=True)
        if counts.ndim != 2 and counts.size == 0:
            counts = counts.reshape(len(users), len(self.catalog))
        if counts.shape != (len(users), len(self.catalog)):
            raise ValueError(
                f"counts shape {counts.shape} does not match "
                f"{len(users)} users x {len(self.catalog)} pages"
            )
        if counts.size and counts.min() < 0:
            raise ValueError("hit counts must be nonnegative")
        if len(set(users)) != len(users):
            raise ValueError("user identifiers must be unique")
        counts.setflags(write=False)
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "counts", counts)

    def __eq__(self, other):
        if not isinstance(other, HitMatrix):
            return NotImplemented
        return (
            self.users == other.users
            and self.catalog == other.catalog
            and np.array_equal(self.counts, other.counts)
        )

    __hash__ = None

    @property
    def n_users(self) -> int:
        return self.counts.shape[0]

    @property
    def n_pages(self) -> int:
        return self.counts.shape[1]

    @property
    def total_hits(self) -> int:
        return int(self.counts.sum())

    def take_rows(self, rows: Sequence[int] | np.ndarray) -> "HitMatrix":
        rows = np.asarray(rows, dtype=np.intp)
        return HitMatrix(tuple(self.users[i] for i in rows), self.catalog, self.counts[rows])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["user", *self.catalog.labels])
            for user, row in zip(self.users, self.counts.tolist()):
                w.writerow([user, *row])

    @classmethod
    def from_csv(cls, path) -> "HitMatrix":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header or len(header) < 1:
                raise ParseError(f"{path}: missing header row")
            catalog = PageCatalog(tuple(header[1:]))
            users, rows = [], []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise ParseError(f"{path}: expected {len(header)} fields", lineno)
                users.append(row[0])
                try:
                    rows.append([int(v) for v in row[1:]])
                except ValueError:
                    raise ParseError(f"{path}: non-integer count", lineno) from None
        counts = np.array(rows, dtype=np.int64).reshape(len(users), len(catalog))
        return cls(tuple(users), catalog, counts)


def parse_sequence_file(lines: Iterable[str], catalog: PageCatalog) -> HitMatrix:
    """Build a hit matrix from MSNBC-style sequences.

    Each non-empty line lists the 1-based category numbers one user visited.
    Users are named by the 1-based ordinal of their sequence, so the first
    non-empty data line is user ``"1"``. The UCI distribution preamble (``%``
    comment lines plus the line of category names between them) is skipped.
    """
    m = len(catalog)
    lengths: list[int] = []
    flat: list[int] = []
    in_preamble = False
    for lineno, line in enumerate(lines, start=1):
        tokens = line.split()
        if not tokens:
            continue
        if tokens[0].startswith("%"):
            in_preamble = not lengths
            continue
        try:
            values = [int(t) for t in tokens]
        except ValueError:
            if in_preamble:
                continue
            bad = next(t for t in tokens if not _is_int(t))
            raise ParseError(f"token {bad!r} is not a positive integer", lineno) from None
        lo, hi = min(values), max(values)
        if lo < 1:
            raise ParseError(f"token {lo} is not a positive integer", lineno)
        if hi > m:
            raise ParseError(f"category {hi} out of range 1..{m}", lineno)
        lengths.append(len(values))
        flat.extend(values)

    n = len(lengths)
    users = tuple(str(i) for i in range(1, n + 1))
    if n == 0:
        return HitMatrix((), catalog, np.zeros((0, m), dtype=np.int64))
    rows = np.repeat(np.arange(n, dtype=np.int64), lengths)
    cols = np.asarray(flat, dtype=np.int64) - 1
    counts = np.bincount(rows * m + cols, minlength=n * m).reshape(n, m)
    return HitMatrix(users, catalog, counts)


def _is_int(token: str) -> bool:
    try:
        int(token)
    except ValueError:
        return False
    return True


_CLF_RE = re.compile(
    r'^(?P<host>\S+) (?P<ident>\S+) (?P<authuser>\S+) '
    r'\[(?P<date>[^\]]+)\] '
    r'"(?P<request>[^"]*)" (?P<status>\d{3}|-) (?P<bytes>\d+|-)\s*$'
)
_CLF_DATE = "%d/%b/%Y:%H:%M:%S %z"


@dataclass
class LogTally:
    """Per-line accounting for a log parse.

    Every input line lands in exactly one bucket, so
    ``hits + sum(skipped.values()) + len(errors)`` equals the line count.
    """

    lines: int = 0
    hits: int = 0
    skipped: Counter = field(default_factory=Counter)
    errors: list[int] = field(default_factory=list)

    @property
    def n_skipped(self) -> int:
        return sum(self.skipped.values())


def parse_common_log_file(
    lines: Iterable[str],
    url_to_category: Mapping[str, str],
    window: tuple[datetime | None, datetime | None] = (None, None),
    catalog: PageCatalog | None = None,
    status_class: str | None = None,
) -> tuple[HitMatrix, LogTally]:
    """Build a hit matrix from Common Log Format lines.

    Users are keyed by the host field, in order of first counted hit. A line
    counts as a hit when it is a GET whose path (query string dropped) maps to
    a category and whose timestamp falls in the half-open ``window``
    ``[start, end)``; either bound may be None. HTTP status is ignored unless
    ``status_class`` (e.g. ``"2xx"``) is given.

    Malformed lines are recorded in the tally and skipped. If more than half
    of the non-blank lines are malformed, a ParseError is raised instead.
    """
    if catalog is None:
        catalog = PageCatalog(tuple(dict.fromkeys(url_to_category.values())))
    missing = sorted(set(url_to_category.values()) - set(catalog.index))
    if missing:
        raise ValueError(f"mapped categories not in catalog: {missing}")
    status_digit = None
    if status_class is not None:
        if not re.fullmatch(r"[1-5]xx", status_class):
            raise ValueError(f"status_class must look like '2xx', got {status_class!r}")
        status_digit = status_class[0]
    start, end = (_aware(t) for t in window)

    tally = LogTally()
    user_index: dict[str, int] = {}
    cells: Counter = Counter()
    for lineno, line in enumerate(lines, start=1):
        tally.lines += 1
        line = line.rstrip("\r\n")
        if not line.strip():
            tally.skipped["blank"] += 1
            continue
        match = _CLF_RE.match(line)
        if match is None:
            tally.errors.append(lineno)
            continue
        try:
            when = datetime.strptime(match["date"], _CLF_DATE)
        except ValueError:
            tally.errors.append(lineno)
            continue
        parts = match["request"].split()
        if len(parts) < 2:
            tally.errors.append(lineno)
            continue
        if parts[0] != "GET":
            tally.skipped["method"] += 1
            continue
        if (start is not None and when < start) or (end is not None and when >= end):
            tally.skipped["window"] += 1
            continue
        if status_digit is not None and match["status"][0] != status_digit:
            tally.skipped["status"] += 1
            continue
        path = parts[1].split("?", 1)[0]
        label = url_to_category.get(path)
        if label is None:
            tally.skipped["unmapped"] += 1
            continue
        user = user_index.setdefault(match["host"], len(user_index))
        cells[user, catalog.index[label]] += 1
        tally.hits += 1

    nonblank = tally.lines - tally.skipped["blank"]
    if nonblank and len(tally.errors) * 2 > nonblank:
        raise ParseError(
            f"{len(tally.errors)} of {nonblank} lines are not Common Log Format"
        )

    counts = np.zeros((len(user_index), len(catalog)), dtype=np.int64)
    for (i, j), c in cells.items():
        counts[i, j] = c
    return HitMatrix(tuple(user_index), catalog, counts), tally


def _aware(t: datetime | None) -> datetime | None:
    # naive bounds are read as UTC so they compare against log offsets
    if t is not None and t.tzinfo is None:
        return t.replace(tzinfo=timezone.utc)
    return t


def filter_users(matrix: HitMatrix, min_count: int, by: str = "distinct") -> HitMatrix:
    """Keep users with at least ``min_count`` distinct pages (or total hits).

    ``by="distinct"`` counts strictly positive cells in the row; ``by="total"``
    sums the row. Row order and user identifiers are preserved.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    keep = activity(matrix, by) >= min_count
    return matrix.take_rows(np.flatnonzero(keep))


def activity(matrix: HitMatrix, by: str = "distinct") -> np.ndarray:
    if by == "distinct":
        return np.count_nonzero(matrix.counts, axis=1)
    if by == "total":
        return matrix.counts.sum(axis=1)
    raise ValueError(f"by must be 'distinct' or 'total', got {by!r}")
