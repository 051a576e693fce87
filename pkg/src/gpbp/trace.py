"""Per-sweep run traces and CSV output with embedded metadata."""

import csv
import json


class Trace:
    """Column-oriented per-sweep log with a fixed schema."""

    def __init__(self, columns):
        self.columns = list(columns)
        self._data = {c: [] for c in self.columns}

    def add_row(self, **kwargs):
        for c in self.columns:
            self._data[c].append(kwargs.get(c))

    def __len__(self):
        return len(self._data[self.columns[0]]) if self.columns else 0

    def column(self, name):
        return self._data[name]

    def last(self, name):
        values = self._data[name]
        return values[-1] if values else None

    def rows(self):
        for k in range(len(self)):
            yield {c: self._data[c][k] for c in self.columns}

    def to_csv(self, path, meta=None):
        write_csv(path, self.columns, self.rows(), meta=meta)


def write_csv(path, fieldnames, rows, meta=None):
    """Write CSV rows preceded by ``# key: json`` comment lines.

    ``meta`` carries the resolved configuration and seed so every output
    file is self-describing.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for key, value in (meta or {}).items():
            fh.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        # plain float repr even for numpy scalar subclasses
        return repr(float(value))
    return value


def read_csv(path):
    """Read back a CSV written by :func:`write_csv`.

    Returns
    -------
    (meta, rows)
        ``meta`` maps comment keys to parsed JSON; ``rows`` is a list of
        dicts of strings.
    """
    meta = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        pos = fh.tell()
        line = fh.readline()
        while line.startswith("#"):
            key, _, payload = line[1:].partition(":")
            meta[key.strip()] = json.loads(payload)
            pos = fh.tell()
            line = fh.readline()
        fh.seek(pos)
        rows = list(csv.DictReader(fh))
    return meta, rows
