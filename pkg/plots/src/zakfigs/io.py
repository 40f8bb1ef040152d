"""Reading stozak CSV outputs: schema header, units, comment metadata.

Every stozak CSV starts with ``# schema=<id> config=<hash>`` followed by
comment lines (a ``generated_at`` timestamp, optional ``# key=value`` pairs),
then a header row whose column names carry units, ``name[unit]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class SchemaError(ValueError):
    pass


@dataclass
class Table:
    schema: str
    config_hash: str
    columns: list
    rows: list          # list of dicts (floats where possible)
    meta: dict = field(default_factory=dict)

    def column(self, name: str):
        if name not in self.columns:
            raise SchemaError(f"missing column {name!r}; file has {self.columns}")
        return [r[name] for r in self.rows]


def _parse_value(tok: str):
    try:
        return float(tok)
    except ValueError:
        return tok


def read_table(path: str, expect_schema: str | None = None) -> Table:
    schema, config_hash = "", ""
    meta: dict = {}
    columns: list = []
    rows: list = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("schema="):
                    parts = body.split()
                    schema = parts[0].split("=", 1)[1]
                    for p in parts[1:]:
                        if p.startswith("config="):
                            config_hash = p.split("=", 1)[1]
                elif "=" in body and not body.startswith("generated_at"):
                    key, val = body.split("=", 1)
                    meta[key.strip()] = _parse_value(val.strip())
                continue
            if not columns:
                columns = [c.split("[")[0] for c in line.split(",")]
                continue
            toks = line.split(",")
            rows.append({c: _parse_value(t) for c, t in zip(columns, toks)})
    if not schema:
        raise SchemaError(f"{path} carries no schema header line")
    if expect_schema is not None and schema != expect_schema:
        raise SchemaError(
            f"{path} has schema {schema!r}, figure needs {expect_schema!r}")
    if not columns:
        raise SchemaError(f"{path} has no column header row")
    return Table(schema=schema, config_hash=config_hash, columns=columns,
                 rows=rows, meta=meta)
