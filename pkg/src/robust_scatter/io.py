"""File formats: SONAR data, sample CSVs, pattern specifications.

CSV output is RFC-4180 style with ``.`` decimals and 17 significant digits,
so values round-trip exactly.
"""

import csv
import io
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParseError, WrongShape
from .experiments import LabeledDataset
from .graphs import SparsityPattern, banded_pattern, grid_pattern

SONAR_FEATURES = 60
SONAR_LABELS = ("M", "R")
SONAR_URL = ("https://archive.ics.uci.edu/ml/machine-learning-databases/"
             "undocumented/connectionist-bench/sonar/sonar.all-data")


def load_sonar(path):
    """Parse the UCI ``sonar.all-data`` layout: 60 floats then ``R`` or ``M``.

    The file is never downloaded; see ``SONAR_URL`` for the canonical source.

    Raises
    ------
    WrongShape
        If the file is empty or its rows do not carry 60 features.
    ParseError
        For a malformed line (the line number is attached).
    """
    lines = Path(path).read_text().splitlines()
    records = [(k, line) for k, line in enumerate(lines, start=1) if line.strip()]
    if not records:
        raise WrongShape(f"{path} contains no observations")
    first_fields = len(records[0][1].split(","))
    if first_fields != SONAR_FEATURES + 1 and first_fields > 2:
        raise WrongShape(f"expected {SONAR_FEATURES} features, first row has {first_fields - 1}")
    features, labels = [], []
    for lineno, line in records:
        fields = [t.strip() for t in line.split(",")]
        if len(fields) != SONAR_FEATURES + 1:
            raise ParseError(f"expected {SONAR_FEATURES + 1} fields, found {len(fields)}", lineno)
        label = fields[-1]
        if label not in SONAR_LABELS:
            raise ParseError(f"label {label!r} is not R or M", lineno)
        try:
            features.append([float(t) for t in fields[:-1]])
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        labels.append(label)
    return LabeledDataset(np.array(features), np.array(labels))


def format_float(x):
    return format(float(x), ".17g")


def write_matrix_csv(M, fh=None):
    """Write rows of ``M`` as headerless CSV; returns the text when ``fh`` is None."""
    buf = io.StringIO() if fh is None else fh
    writer = csv.writer(buf, lineterminator="\n")
    for row in np.atleast_2d(M):
        writer.writerow([format_float(v) for v in row])
    return buf.getvalue() if fh is None else None


def read_samples_csv(path):
    """One observation per row, no header."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not t.strip() for t in row):
                continue
            try:
                rows.append([float(t) for t in row])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if len(rows[-1]) != len(rows[0]):
                raise ParseError(f"expected {len(rows[0])} values, found {len(rows[-1])}", lineno)
    if not rows:
        raise WrongShape(f"{path} contains no observations")
    return np.array(rows)


def parse_pattern(spec, p=None):
    """Build a pattern from a config value or a CLI string.

    Accepted forms: ``"full"``, ``"diagonal"``, ``{"banded": d}``,
    ``{"grid": [rows, cols]}``, ``{"edges": [[i, j], ...]}`` (1-based), a
    full ``{"p": ..., "edges": ...}`` object, and the strings ``banded:d``,
    ``grid:RxC`` or a path to a JSON file holding any of the above.
    """
    if isinstance(spec, str):
        s = spec.strip()
        if s in ("full", "complete"):
            return _need_p(p, SparsityPattern.complete)
        if s in ("diagonal", "empty"):
            return _need_p(p, SparsityPattern.empty)
        if s.startswith("banded:"):
            return parse_pattern({"banded": int(s.split(":", 1)[1])}, p)
        if s.startswith("grid:"):
            r, c = s.split(":", 1)[1].lower().split("x")
            return parse_pattern({"grid": [int(r), int(c)]}, p)
        path = Path(s)
        if path.exists():
            return parse_pattern(json.loads(path.read_text()), p)
        raise ConfigError(f"unrecognized pattern {spec!r}")
    if not isinstance(spec, dict):
        raise ConfigError(f"pattern must be a string or an object, got {type(spec).__name__}")
    if set(spec) == {"p", "edges"}:
        G = SparsityPattern.from_json_dict(spec)
    elif set(spec) == {"banded"}:
        G = _need_p(p, lambda q: banded_pattern(q, int(spec["banded"])))
    elif set(spec) == {"grid"}:
        rows, cols = spec["grid"]
        G = grid_pattern(int(rows), int(cols))
    elif set(spec) == {"edges"}:
        G = _need_p(p, lambda q: SparsityPattern.from_json_dict({"p": q, "edges": spec["edges"]}))
    else:
        raise ConfigError(f"unrecognized pattern object with keys {sorted(spec)}")
    if p is not None and G.p != p:
        raise ConfigError(f"pattern has {G.p} vertices but the data has {p} variables")
    return G


def _need_p(p, build):
    if p is None:
        raise ConfigError("this pattern form needs the dimension p")
    return build(p)
