"""File formats: field CSV, covariance CSV, map CSV, trajectory CSV, key=value config."""
from __future__ import annotations

import io as _io
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError
from .field import PatternCovariance, as_field


def atomic_write_bytes(path, data: bytes):
    """Write to a temp file next to ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


def _format_matrix(values) -> str:
    lines = []
    for row in np.asarray(values, dtype=np.float64):
        lines.append(",".join("nan" if not np.isfinite(v) else repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def field_to_csv(field) -> str:
    return _format_matrix(field)


def field_from_csv(text: str) -> np.ndarray:
    try:
        values = np.loadtxt(_io.StringIO(text), delimiter=",", ndmin=2)
    except ValueError as exc:
        raise InvalidArgumentError(f"cannot parse field CSV: {exc}") from exc
    return as_field(values)


def save_field_csv(field, path):
    atomic_write_text(path, field_to_csv(field))


def load_field_csv(path) -> np.ndarray:
    return field_from_csv(Path(path).read_text())


def load_field(path) -> np.ndarray:
    """Read a field from ``.pgm`` (image mode) or CSV."""
    from .imaging import load_pgm

    if str(path).lower().endswith(".pgm"):
        return as_field(load_pgm(path))
    return load_field_csv(path)


def map_to_csv(values) -> str:
    """Full-precision map export; undefined sites are written as ``nan``."""
    return _format_matrix(values)


def covariance_to_csv(cov: PatternCovariance) -> str:
    return f"K={cov.K},central={cov.central_index}\n" + _format_matrix(cov.sigma_p)


def covariance_from_csv(text: str) -> PatternCovariance:
    header, _, body = text.partition("\n")
    try:
        meta = dict(item.split("=", 1) for item in header.strip().split(","))
        K, central = int(meta["K"]), int(meta["central"])
    except (KeyError, ValueError) as exc:
        raise InvalidArgumentError(f"bad covariance header {header!r}") from exc
    matrix = np.loadtxt(_io.StringIO(body), delimiter=",", ndmin=2)
    if matrix.shape != (K, K):
        raise InvalidArgumentError(f"covariance body is {matrix.shape}, header says K={K}")
    return PatternCovariance.from_matrix(matrix, central)


def records_to_csv(records, header: str) -> str:
    return header + "\n" + "".join(r.to_csv_row() + "\n" for r in records)


def parse_key_values(text: str) -> dict:
    """Flat ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgumentError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out
