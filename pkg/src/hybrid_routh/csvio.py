"""CSV files exchanged between the command-line steps.

Schemas (one header row, then numeric rows):

* trajectory: ``t, arc, q0..q{n-1}, v0..v{n-1}``
* impacts: ``t, q0.., vpre0.., vpost0.., mu_pre, mu_post`` (mu cells empty
  when no cyclic coordinate is attached)
* reduced trajectory: ``t, segment, mu, x0.., xdot0.., theta``
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def _fmt(x) -> str:
    return repr(float(x))


def trajectory_header(n: int):
    return ["t", "arc"] + [f"q{i}" for i in range(n)] + [f"v{i}" for i in range(n)]


def write_trajectory(path, traj):
    t, arc, y = traj.stacked()
    n = y.shape[1] // 2 if y.size else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(trajectory_header(n))
        for ti, ai, yi in zip(t, arc, y):
            w.writerow([_fmt(ti), str(int(ai))] + [_fmt(x) for x in yi])


def write_impacts(path, impacts, n: int):
    header = (["t"] + [f"q{i}" for i in range(n)] + [f"vpre{i}" for i in range(n)]
              + [f"vpost{i}" for i in range(n)] + ["mu_pre", "mu_post"])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for imp in impacts:
            mus = ["" if m is None else _fmt(m) for m in (imp.momentum_pre, imp.momentum_post)]
            w.writerow([_fmt(imp.t)] + [_fmt(x) for x in imp.state_pre.q] + [_fmt(x) for x in imp.state_pre.v]
                       + [_fmt(x) for x in imp.state_post.v] + mus)


def write_reduced(path, rt):
    k = rt.hybrid.system.dim - 1
    header = ["t", "segment", "mu"] + [f"x{i}" for i in range(k)] + [f"xdot{i}" for i in range(k)] + ["theta"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, seg in enumerate(rt.segments):
            for ti, yi, th in zip(seg.arc.t, seg.arc.y, seg.theta):
                w.writerow([_fmt(ti), str(i), _fmt(seg.mu)] + [_fmt(x) for x in yi] + [_fmt(rt.theta0 + th)])


def read_table(path):
    """Return ``(header, data)``; raises ValueError on malformed or empty files."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise ValueError(f"{path}: no data rows")
    data = np.empty((len(body), len(header)))
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        for j, cell in enumerate(row):
            try:
                data[lineno - 2, j] = float(cell) if cell.strip() else np.nan
            except ValueError:
                raise ValueError(f"{path}:{lineno}: column {header[j]!r} is not numeric: {cell!r}") from None
    return header, data


def classify(header) -> str:
    """Name of the schema a header belongs to: trajectory, reduced or impacts."""
    if header[:3] == ["t", "segment", "mu"] and header[-1] == "theta":
        return "reduced"
    if header[:2] == ["t", "arc"] and len(header) >= 4 and (len(header) - 2) % 2 == 0:
        return "trajectory"
    if header[:1] == ["t"] and header[-2:] == ["mu_pre", "mu_post"]:
        return "impacts"
    raise ValueError(f"unrecognized CSV header: {', '.join(header)}")
