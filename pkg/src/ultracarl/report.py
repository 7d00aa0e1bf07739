"""CSV and text outputs.

Every file starts with ``# key=value`` lines (command, seed, config hash,
version) ahead of the CSV header. Floats are written with ``repr`` so
reruns are byte-identical; nothing time-dependent is recorded.
"""

from __future__ import annotations

import csv
import json
import math
import os
from typing import Iterable, List, Mapping, Sequence

from . import __version__


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(float(v))
    if hasattr(v, "item"):  # numpy scalar
        return fmt(v.item())
    return str(v)


def meta_lines(meta: Mapping[str, object]) -> List[str]:
    base = {"tool": "ultracarl", "version": __version__}
    base.update(meta)
    return [f"# {k}={fmt(v)}" for k, v in base.items()]


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence], meta: Mapping[str, object]):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in meta_lines(meta):
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path: str):
    """(meta dict, header, rows) of a file written by :func:`write_csv`."""
    meta, lines = {}, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# "):
                k, _, v = line[2:].rstrip("\n").partition("=")
                meta[k] = v
            else:
                lines.append(line)
    rows = list(csv.reader(lines))
    return meta, rows[0], rows[1:]


def write_summary(path: str, title: str, sections: Mapping[str, object], meta: Mapping[str, object],
                  config_echo: Mapping[str, object]):
    with open(path, "w", encoding="utf-8") as fh:
        for line in meta_lines(meta):
            fh.write(line + "\n")
        fh.write(f"\n{title}\n{'=' * len(title)}\n")
        for name, body in sections.items():
            fh.write(f"\n{name}\n{'-' * len(name)}\n")
            if isinstance(body, str):
                fh.write(body.rstrip("\n") + "\n")
            else:
                for k, v in body.items():
                    fh.write(f"{k}: {fmt(v)}\n")
        fh.write("\nconfiguration (defaults filled in)\n----------------------------------\n")
        fh.write(json.dumps(config_echo, sort_keys=True, indent=2, default=str) + "\n")
