"""Reduced and reconstructed billiard runs for the two damping strengths.

Writes CSV and SVG files under ``demos/out/<preset>/`` through the same code
path as ``hybrid-routh reduce`` followed by ``hybrid-routh plot``.  The
reduced (t, r) trace bounces between the wall r = 1 and an interior turning
point; the disk plot shows the reconstructed path inside the unit circle.
"""

from pathlib import Path

from hybrid_routh import cli
from hybrid_routh.csvio import read_table

HERE = Path(__file__).resolve().parent

for preset in ("fig1", "fig2"):
    out = HERE / "out" / preset
    assert cli.main(["reduce", preset, "--out-dir", str(out)]) == 0
    assert cli.main(["plot", str(out / "reduced.csv"), str(out / "reconstructed.csv")]) == 0
    header, data = read_table(out / "reduced.csv")
    mus = sorted({float(x) for x in data[:, header.index("mu")]})
    print(f"{preset}: {int(data[-1, 1])} impacts, momentum values {mus}, plots in {out}")
