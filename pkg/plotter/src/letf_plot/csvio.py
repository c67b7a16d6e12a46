"""Reader for the letf CLI's schema-versioned CSV files.

The plotting layer consumes these files as its only interface to the
numerics; it never recomputes a value.  Layout: a '# schema-version: 1'
first line, optional '# key: value' metadata lines, a header row, then data
rows.  Empty cells decode to None, 'true'/'false' to booleans.
"""

from __future__ import annotations

from dataclasses import dataclass, field

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """The input file is not a schema-version-1 CSV."""


def _decode(cell: str):
    if cell == "":
        return None
    if cell == "true":
        return True
    if cell == "false":
        return False
    try:
        return float(cell)
    except ValueError:
        return cell


@dataclass
class Table:
    metadata: dict = field(default_factory=dict)
    header: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    def column(self, name: str, where=None):
        idx = self.header.index(name)
        return [row[idx] for row in self.rows if where is None or where(self)]

    def records(self):
        for row in self.rows:
            yield dict(zip(self.header, row))


def read_table(path: str) -> Table:
    with open(path) as fh:
        first = fh.readline().strip()
        if first != f"# schema-version: {SCHEMA_VERSION}":
            raise SchemaError(
                f"{path}: expected '# schema-version: {SCHEMA_VERSION}' on the "
                f"first line, got {first!r}"
            )
        table = Table()
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("# "):
                key, _, val = line[2:].partition(": ")
                table.metadata[key] = val
                continue
            if not table.header:
                table.header = line.split(",")
            else:
                table.rows.append([_decode(c) for c in line.split(",")])
    if not table.header:
        raise SchemaError(f"{path}: no header row")
    return table
