"""Serialization shared by the command line and the benchmark runner."""
from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from . import __version__
from .instance import Instance


def meta(command: str, params: dict, seed, inst: Instance | None = None) -> dict:
    return {
        "tool": "quenchdual",
        "version": __version__,
        "command": command,
        "instance": inst.digest() if inst is not None else None,
        "params": params,
        "seed": seed,
    }


def jsonable(x):
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dumps_json(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"


def dumps_csv(header, rows, comment: dict | None = None) -> str:
    buf = io.StringIO()
    if comment is not None:
        buf.write("# " + json.dumps(jsonable(comment), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                    for v in row])
    return buf.getvalue()
