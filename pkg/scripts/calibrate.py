"""Regenerate tests/data/calibration.json (the frozen inequality constants).

Takes a few seconds; the acceptance suite checks fresh ensembles against these
maxima with a 5 % margin.
"""

import json
from pathlib import Path

from srsp.analysis import inequality_ensemble
from srsp.spectral import make_grid

CASES = [
    dict(dim=1, points=64, box_length=20.0, gamma=0.5, s=0.5, band=[1, 8], samples=4000, seed=0),
    dict(dim=2, points=32, box_length=10.0, gamma=1.0, s=0.5, band=[1, 8], samples=2000, seed=0),
]


def main():
    out = []
    for case in CASES:
        grid = make_grid(case["dim"], case["points"], case["box_length"])
        r = inequality_ensemble(grid, case["gamma"], case["s"], case["samples"], case["seed"], case["band"])
        out.append(dict(case, hardy=float(r["hardy"].max()), leibniz=float(r["leibniz"].max())))
        print(case["dim"], out[-1]["hardy"], out[-1]["leibniz"])
    path = Path(__file__).resolve().parents[1] / "tests" / "data" / "calibration.json"
    path.write_text(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
