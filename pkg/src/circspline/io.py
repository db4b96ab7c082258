"""File formats: graph/bank/product JSON, signal and coefficient CSV."""

from __future__ import annotations

import csv
import json
import time
from pathlib import Path

import numpy as np

from .circulant import CirculantGraph

__all__ = [
    "fmt",
    "read_graph",
    "write_graph",
    "read_signal",
    "write_signal",
    "write_json",
    "read_json",
    "write_nla_csv",
    "write_pyramid",
    "write_manifest",
    "parse_gens",
    "parse_alphas",
]


def fmt(v: float) -> str:
    """Round-trip exact text form of a double."""
    return format(float(v), ".17g")


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialize {type(o).__name__}")


def read_json(path):
    return json.loads(Path(path).read_text())


def read_graph(path) -> CirculantGraph:
    return CirculantGraph.from_dict(read_json(path))


def write_graph(path, g: CirculantGraph) -> None:
    write_json(path, g.to_dict())


def read_signal(path) -> np.ndarray:
    """Read ``index,re,im`` CSV (the ``im`` column is optional)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty signal file")
    header = [h.strip() for h in rows[0]]
    if header[:2] != ["index", "re"]:
        raise ValueError(f"{path}: expected header 'index,re,im', got {','.join(header)}")
    body = rows[1:]
    idx = np.array([int(r[0]) for r in body])
    if not np.array_equal(idx, np.arange(len(body))):
        raise ValueError(f"{path}: indices must run 0..n-1 in order")
    re = np.array([float(r[1]) for r in body])
    im = np.array([float(r[2]) for r in body]) if len(header) > 2 else np.zeros_like(re)
    return re + 1j * im


def write_signal(path, x) -> None:
    x = np.asarray(x, dtype=complex).ravel()
    with open(path, "w", newline="") as fh:
        fh.write("index,re,im\n")
        for i, v in enumerate(x):
            fh.write(f"{i},{fmt(v.real)},{fmt(v.imag)}\n")


def write_nla_csv(path, curve, extra=None, extra_name="snr_db_compare") -> None:
    with open(path, "w", newline="") as fh:
        fh.write("k,snr_db" + (f",{extra_name}" if extra is not None else "") + "\n")
        for i, (k, s) in enumerate(curve):
            line = f"{int(k)},{fmt(s)}"
            if extra is not None:
                line += f",{fmt(extra[i][1])}"
            fh.write(line + "\n")


def write_pyramid(directory, pyramid, stem: str = "pyramid") -> list[str]:
    """Per-level coefficient CSVs plus a JSON description; returns file names."""
    directory = Path(directory)
    files = []
    levels = []
    for j, lv in enumerate(pyramid.levels):
        name = f"{stem}_level{j}_hp.csv"
        write_signal(directory / name, lv.hp_coeffs)
        files.append(name)
        levels.append(
            {
                "level": j,
                "graph": lv.graph.to_dict(),
                "pattern": "".join("1" if b else "0" for b in lv.pattern.keep_lp),
                "bank": lv.bank.to_dict(),
                "hp_file": name,
            }
        )
    root = f"{stem}_root_lp.csv"
    write_signal(directory / root, pyramid.root_lp)
    files.append(root)
    desc = f"{stem}.json"
    root_graph = pyramid.root_graph.to_dict() if pyramid.root_graph is not None else None
    write_json(directory / desc, {"levels": levels, "root_graph": root_graph, "root_file": root})
    files.append(desc)
    return files


def write_manifest(path, command: str, inputs: dict, params: dict, outputs: list, started: float) -> None:
    from . import __version__

    write_json(
        path,
        {
            "command": command,
            "inputs": inputs,
            "parameters": params,
            "outputs": outputs,
            "version": __version__,
            "wall_clock_s": round(time.perf_counter() - started, 6),
        },
    )


def parse_gens(text: str) -> list[tuple[int, float]]:
    """``"1:1,2:0.5"`` or ``"1,2"`` to ``[(1, 1.0), (2, 0.5)]``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        s, _, w = part.partition(":")
        out.append((int(s), float(w) if w else 1.0))
    if not out:
        raise ValueError("empty generator list")
    return out


def parse_alphas(text: str):
    """``"0.39,h:0.5"``: plain values are trigonometric, ``h:`` marks hyperbolic."""
    from .circulant import ExponentParam

    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if part.startswith(("h:", "hyp:")):
            out.append(ExponentParam(float(part.split(":", 1)[1]), "hyperbolic"))
        else:
            out.append(ExponentParam(float(part.removeprefix("t:"))))
    return out
