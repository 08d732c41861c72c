"""Three-phase batch run: ingest, cluster users and pages, relate the clusters, write reports."""

from __future__ import annotations

import csv
import dataclasses
import gzip
import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np

from . import clustering
from .clustering import ClusteringResult, DegenerateClusteringError, kmeans_best_of
from .cocluster import CoClusterGrid, build_grid
from .fuzzymath import fuzzy_subsets, similarity_matrix
from .ingest import (
    HitMatrix,
    PageCatalog,
    ParseError,
    activity,
    filter_users,
    parse_common_log_file,
    parse_sequence_file,
)

__all__ = [
    "PipelineConfig",
    "RunManifest",
    "PipelineError",
    "ConfigError",
    "validate_config",
    "run_pipeline",
    "load_hits",
]

log = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_DEGENERATE = 4

R1_NOTE = (
    "r1[i][j]: share of page cluster j's hits made by user cluster i; "
    "each page-cluster column sums to 1 (which user cluster is most interested in a page cluster)"
)
R2_NOTE = (
    "r2[i][j]: share of user cluster i's hits falling in page cluster j; "
    "each user-cluster row sums to 1 (how a user cluster's interest is spread over page clusters)"
)


class PipelineError(RuntimeError):
    """A failed run, tagged with the phase that failed and the CLI exit code."""

    def __init__(self, phase: str, message: str, exit_code: int):
        self.phase = phase
        self.exit_code = exit_code
        super().__init__(f"[{phase}] {message}")


class ConfigError(PipelineError):
    def __init__(self, errors: list[str], phase: str = "config"):
        self.errors = list(errors)
        super().__init__(phase, "; ".join(errors), EXIT_CONFIG)


@dataclass
class PipelineConfig:
    """Settings for one run. Defaults reproduce the MSNBC experiment setup."""

    input: str = ""
    format: str = "sequence"
    catalog: str | None = None
    url_map: str | None = None
    min_count: int = 9
    filter_by: str = "distinct"
    ku: int = 10
    kp: int = 3
    restarts: int = clustering.RESTARTS
    seed: int = 0
    max_iter: int = clustering.MAX_ITER
    tol: float = clustering.TOL
    out: str = "out"
    dump_similarity: bool = False
    dump_subsets: bool = False
    cache_dir: str | None = None
    status_class: str | None = None
    window_start: str | None = None
    window_end: str | None = None

    # file keys mirror the CLI flags
    _KEYS = {
        "input": "input",
        "format": "format",
        "catalog": "catalog",
        "url-map": "url_map",
        "ku": "ku",
        "kp": "kp",
        "restarts": "restarts",
        "seed": "seed",
        "max-iter": "max_iter",
        "tol": "tol",
        "out": "out",
        "dump-similarity": "dump_similarity",
        "dump-subsets": "dump_subsets",
        "cache-dir": "cache_dir",
        "status-class": "status_class",
        "window-start": "window_start",
        "window-end": "window_end",
    }

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_lines(self) -> list[str]:
        lines = []
        flag = "min-distinct" if self.filter_by == "distinct" else "min-total"
        lines.append(f"{flag} = {self.min_count}")
        for key, attr in self._KEYS.items():
            value = getattr(self, attr)
            if value is None:
                continue
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key} = {value}")
        return lines

    def save(self, path) -> None:
        Path(path).write_text("\n".join(self.to_lines()) + "\n", encoding="utf-8")

    @classmethod
    def from_mapping(cls, values: dict) -> "PipelineConfig":
        """Build from flag-named keys (``min-distinct``, ``max-iter``, ...)."""
        kwargs = {}
        bad = []
        for key, raw in values.items():
            key = key.strip().lstrip("-").replace("_", "-")
            if key in ("min-distinct", "min-total"):
                kwargs["filter_by"] = "distinct" if key == "min-distinct" else "total"
                kwargs["min_count"] = int(raw)
                continue
            attr = cls._KEYS.get(key)
            if attr is None:
                bad.append(key)
                continue
            kwargs[attr] = _coerce(cls.__dataclass_fields__[attr], raw)
        if bad:
            raise ConfigError([f"unknown config key {k!r}" for k in bad])
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        return cls.from_mapping(read_config_file(path))


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError([f"{path}:{lineno}: expected 'key = value'"])
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def _coerce(f: dataclasses.Field, raw):
    if not isinstance(raw, str):
        return raw
    kind = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", "")
    if kind.startswith("bool"):
        return raw.lower() in ("1", "true", "yes", "on")
    if kind.startswith("int"):
        return int(raw)
    if kind.startswith("float"):
        return float(raw)
    return raw


@dataclass
class RunManifest:
    config: dict
    stats: dict = field(default_factory=dict)
    clustering: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    valid: bool = True
    error: str | None = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")


def validate_config(config: PipelineConfig, stats: dict | None = None) -> list[str]:
    """Every problem with ``config``, as messages; empty when the config is usable.

    ``stats`` (``filtered_users``, ``pages``) enables the cluster-count bounds.
    """
    errors = []
    if config.format not in ("sequence", "clf"):
        errors.append(f"format must be 'sequence' or 'clf', got {config.format!r}")
    if config.filter_by not in ("distinct", "total"):
        errors.append(f"filter mode must be 'distinct' or 'total', got {config.filter_by!r}")
    if config.min_count < 1:
        errors.append("threshold must be >= 1")
    for name in ("ku", "kp", "restarts", "max_iter"):
        if getattr(config, name) < 1:
            errors.append(f"{name} must be >= 1")
    if not config.tol >= 0:
        errors.append("tol must be >= 0")
    if not config.input:
        errors.append("input path is required")
    elif not Path(config.input).is_file():
        errors.append(f"input file not found: {config.input}")
    if config.catalog is not None and not Path(config.catalog).is_file():
        errors.append(f"catalog file not found: {config.catalog}")
    if config.format == "clf":
        if config.url_map is None:
            errors.append("clf input needs a url map (path,label CSV)")
        elif not Path(config.url_map).is_file():
            errors.append(f"url map file not found: {config.url_map}")
        for name in ("window_start", "window_end"):
            value = getattr(config, name)
            if value is not None:
                try:
                    datetime.fromisoformat(value)
                except ValueError:
                    errors.append(f"{name} is not an ISO timestamp: {value!r}")
    if config.status_class is not None and config.status_class not in {f"{d}xx" for d in "12345"}:
        errors.append(f"status class must look like '2xx', got {config.status_class!r}")
    errors.extend(_check_writable(Path(config.out), "output dir"))
    if config.cache_dir is not None:
        errors.extend(_check_writable(Path(config.cache_dir), "cache dir"))
    if stats is not None:
        users = stats.get("filtered_users")
        pages = stats.get("pages")
        if users is not None and config.ku > users:
            errors.append(f"k_u exceeds user count ({config.ku} > {users})")
        if pages is not None and config.kp > pages:
            errors.append(f"k_p exceeds page count ({config.kp} > {pages})")
    return errors


def _check_writable(path: Path, what: str) -> list[str]:
    probe = path
    while not probe.exists():
        if probe.parent == probe:
            break
        probe = probe.parent
    if not probe.is_dir():
        return [f"{what} {path} is not under a directory"]
    if not os.access(probe, os.W_OK):
        return [f"{what} {path} is not writable"]
    return []


def _open_text(path):
    if str(path).endswith(".gz"):
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, encoding="utf-8")


def _read_url_map(path) -> dict:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows and rows[0][0].strip().lower() in ("path", "url"):
        rows = rows[1:]
    return {r[0].strip(): r[1].strip() for r in rows}


def load_hits(config: PipelineConfig) -> tuple[HitMatrix, dict]:
    """Parse the configured input into a raw (unfiltered) hit matrix plus parse stats."""
    parse_stats = {}
    if config.format == "sequence":
        catalog = PageCatalog.from_csv(config.catalog) if config.catalog else PageCatalog.msnbc()
        with _open_text(config.input) as fh:
            matrix = parse_sequence_file(fh, catalog)
    else:
        url_map = _read_url_map(config.url_map)
        catalog = PageCatalog.from_csv(config.catalog) if config.catalog else None
        window = tuple(
            datetime.fromisoformat(v) if v else None
            for v in (config.window_start, config.window_end)
        )
        with _open_text(config.input) as fh:
            matrix, tally = parse_common_log_file(
                fh, url_map, window, catalog=catalog, status_class=config.status_class
            )
        parse_stats = {
            "lines": tally.lines,
            "hits": tally.hits,
            "skipped": dict(sorted(tally.skipped.items())),
            "malformed_lines": tally.errors,
        }
    return matrix, parse_stats


def _digest(*arrays: np.ndarray, tag: str = "") -> str:
    h = hashlib.sha256(tag.encode())
    for a in arrays:
        a = np.ascontiguousarray(a)
        h.update(str(a.shape).encode())
        h.update(str(a.dtype).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def _cached_similarity(subsets, axis: str, cache_dir: Path | None) -> tuple[np.ndarray, bool]:
    vecs = subsets.vectors(axis)
    if cache_dir is None:
        return similarity_matrix(subsets, axis).values, False
    path = cache_dir / f"similarity-{axis}-{_digest(vecs, tag=axis)[:32]}.npy"
    if path.is_file():
        return np.load(path), True
    values = similarity_matrix(subsets, axis).values
    cache_dir.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp.npy")
    np.save(tmp, values)
    os.replace(tmp, path)
    return values, False


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_matrix(path: Path, corner: str, row_labels, col_labels, values) -> None:
    _write_csv(path, [corner, *col_labels],
               ([r, *(_fmt(v) for v in row)] for r, row in zip(row_labels, values)))


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def _cluster_entries(clusters, names, prefix: str) -> list[dict]:
    return [
        {"cluster": f"c{i}_{prefix}", "index": i, "size": len(members),
         "members": [names[m] for m in members]}
        for i, members in enumerate(clusters, start=1)
    ]


def _restart_report(result: ClusteringResult) -> dict:
    return {
        "k": result.k,
        "chosen_seed": result.seed,
        "chosen_db_index": result.db_index,
        "iterations": result.iterations,
        "inertia": result.inertia,
        "restarts": [{"seed": s, "db_index": db} for s, db in result.restart_scores],
    }


def write_reports(out: Path, matrix: HitMatrix, grid: CoClusterGrid) -> list[Path]:
    """Write the relation tables, block sums, membership lists and long-form heatmap data."""
    ku, kp = grid.shape
    ucols = [f"c{i}_u" for i in range(1, ku + 1)]
    pcols = [f"c{j}_p" for j in range(1, kp + 1)]
    users = _cluster_entries(grid.user_clusters, matrix.users, "u")
    pages = _cluster_entries(grid.page_clusters, matrix.catalog.labels, "p")

    written = []
    path = out / "r1.csv"
    _write_matrix(path, "user_cluster", ucols, pcols, grid.r1)
    written.append(path)
    path = out / "r2.csv"
    _write_matrix(path, "page_cluster", pcols, ucols, grid.r2.T)
    written.append(path)
    path = out / "block_hits.csv"
    _write_csv(path, ["user_cluster", *pcols],
               ([u, *row] for u, row in zip(ucols, grid.block_hits.tolist())))
    written.append(path)
    path = out / "heatmap.csv"
    _write_csv(path, ["user_cluster", "page_cluster", "r1", "r2", "block_hits"], (
        [ucols[i], pcols[j], _fmt(grid.r1[i, j]), _fmt(grid.r2[i, j]), int(grid.block_hits[i, j])]
        for i in range(ku) for j in range(kp)
    ))
    written.append(path)
    for name, entries in (("clusters_users.json", users), ("clusters_pages.json", pages)):
        _write_json(out / name, entries)
        written.append(out / name)
    path = out / "report.json"
    _write_json(path, {
        "user_clusters": users,
        "page_clusters": pages,
        "block_hits": grid.block_hits.tolist(),
        "r1": {"note": R1_NOTE, "rows": ucols, "columns": pcols, "values": grid.r1.tolist()},
        "r2": {"note": R2_NOTE, "rows": ucols, "columns": pcols, "values": grid.r2.tolist()},
    })
    written.append(path)
    return written


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_pipeline(config: PipelineConfig) -> RunManifest:
    """Run ingest, user clustering, page clustering and the relation phase; write all outputs.

    Raises PipelineError (or its ConfigError subclass) tagged with the failing
    phase. Files written before a failure are removed and the manifest written
    in their place is marked invalid.
    """
    errors = validate_config(config)
    if errors:
        raise ConfigError(errors)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    cache_dir = Path(config.cache_dir) if config.cache_dir else out / "cache"
    manifest = RunManifest(config=config.to_dict())
    written: list[Path] = []
    timings = manifest.timings
    phase = "ingest"
    try:
        t0 = time.perf_counter()
        try:
            raw, parse_stats = load_hits(config)
        except (ParseError, ValueError, OSError) as exc:
            raise PipelineError("ingest", str(exc), EXIT_PARSE) from exc
        t = config.min_count
        distinct, total = activity(raw, "distinct"), activity(raw, "total")
        matrix = filter_users(raw, t, config.filter_by)
        manifest.stats = {
            "raw_users": raw.n_users,
            "pages": raw.n_pages,
            "raw_hits": raw.total_hits,
            "filtered_users": matrix.n_users,
            "total_hits": matrix.total_hits,
            "filter": {"by": config.filter_by, "min_count": t},
            # both readings of the activity threshold, for sensitivity checks
            "users_by_threshold": {
                "distinct_ge": int((distinct >= t).sum()),
                "distinct_gt": int((distinct > t).sum()),
                "total_ge": int((total >= t).sum()),
                "total_gt": int((total > t).sum()),
            },
            **({"parse": parse_stats} if parse_stats else {}),
        }
        errors = validate_config(config, {"filtered_users": matrix.n_users, "pages": matrix.n_pages})
        if errors:
            raise ConfigError(errors, phase="ingest")
        path = out / "hits.csv"
        matrix.to_csv(path)
        written.append(path)
        timings["ingest"] = time.perf_counter() - t0
        log.info("ingest: %d raw users, %d kept", raw.n_users, matrix.n_users)

        subsets = fuzzy_subsets(matrix)
        if config.dump_subsets:
            for name, values, labels in (
                ("subsets_users.csv", subsets.user_memberships, matrix.catalog.labels),
                ("subsets_pages.csv", subsets.page_memberships, matrix.catalog.labels),
            ):
                _write_matrix(out / name, "user", matrix.users, labels, values)
                written.append(out / name)

        results = {}
        for phase, axis, k, names in (
            ("users", "users", config.ku, matrix.users),
            ("pages", "pages", config.kp, matrix.catalog.labels),
        ):
            t0 = time.perf_counter()
            sim, hit = _cached_similarity(subsets, axis, cache_dir)
            if config.dump_similarity:
                path = out / f"similarity_{axis}.csv"
                _write_matrix(path, axis[:-1], names, names, sim)
                written.append(path)
            try:
                results[axis] = kmeans_best_of(
                    sim, k, restarts=config.restarts, base_seed=config.seed,
                    max_iter=config.max_iter, tol=config.tol,
                )
            except DegenerateClusteringError as exc:
                raise PipelineError(phase, str(exc), EXIT_DEGENERATE) from exc
            timings[phase] = time.perf_counter() - t0
            manifest.clustering[axis] = {**_restart_report(results[axis]), "similarity_cached": hit}
            log.info("%s: k=%d, DB=%s", axis, k, results[axis].db_index)

        phase = "relations"
        t0 = time.perf_counter()
        grid = build_grid(matrix, results["users"], results["pages"])
        written.extend(write_reports(out, matrix, grid))
        timings["relations"] = time.perf_counter() - t0
    except Exception as exc:
        for path in written:
            path.unlink(missing_ok=True)
        manifest.valid = False
        manifest.error = str(exc)
        manifest.save(out / "manifest.json")
        if isinstance(exc, PipelineError):
            raise
        raise PipelineError(phase, f"{type(exc).__name__}: {exc}", 1) from exc

    manifest.outputs = {p.name: _sha256(p) for p in written}
    manifest.save(out / "manifest.json")
    return manifest
