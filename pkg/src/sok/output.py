"""CSV and JSON emitters.

CSV dialect: comma separated, ``.`` decimal, one header row, LF line endings,
UTF-8. Numbers are written with 17 significant digits, so parsing a file and
writing it back reproduces it byte for byte. Lines starting with ``#`` carry
metadata; those after the data (the footer) hold the truncation marker.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .ode_core import Trajectory


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "1" if value else "0"
    return f"{float(value):.17g}"


def _cell(text: str):
    try:
        return float(text)
    except ValueError:
        return text


@dataclass
class CsvTable:
    header: list[str]
    rows: list[list] = field(default_factory=list)
    comments: list[str] = field(default_factory=list)
    footer: list[str] = field(default_factory=list)

    def dumps(self) -> str:
        lines = [f"# {c}" for c in self.comments]
        lines.append(",".join(self.header))
        lines.extend(",".join(fmt(v) for v in row) for row in self.rows)
        lines.extend(f"# {c}" for c in self.footer)
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "CsvTable":
        comments, footer, rows = [], [], []
        header = None
        for line in text.split("\n")[:-1] if text.endswith("\n") else text.split("\n"):
            if line.startswith("#"):
                (comments if header is None else footer).append(line[2:] if line.startswith("# ") else line[1:])
            elif header is None:
                header = line.split(",")
            else:
                if footer:
                    raise ValueError("data row after footer comment")
                rows.append([_cell(c) for c in line.split(",")])
        if header is None:
            raise ValueError("no header row")
        return cls(header, rows, comments, footer)


TRUNCATION_PREFIX = "truncated: "


def trajectory_table(traj: Trajectory, comments=()) -> CsvTable:
    table = CsvTable(["t", "x", "v"], [[t, x, v] for t, x, v in zip(traj.t, traj.x, traj.v)], list(comments))
    if traj.truncated:
        table.footer.append(TRUNCATION_PREFIX + str(traj.reason).replace("\n", " "))
    return table


def trajectory_from_table(table: CsvTable) -> Trajectory:
    if table.header[:3] != ["t", "x", "v"]:
        raise ValueError(f"not a trajectory table: header {table.header}")
    reason = next((f[len(TRUNCATION_PREFIX):] for f in table.footer if f.startswith(TRUNCATION_PREFIX)), None)
    cols = list(zip(*table.rows))
    return Trajectory(cols[0], cols[1], cols[2], truncated=reason is not None, reason=reason)


def trajectory_dict(traj: Trajectory) -> dict:
    return {
        "t": traj.t.tolist(),
        "x": traj.x.tolist(),
        "v": traj.v.tolist(),
        "truncated": traj.truncated,
        "reason": traj.reason,
    }


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
