"""Regenerate the golden files in this directory.

The ideal phase profile and the corner-cell geometry come from the scalar
oracle (independent route).  The capacitance maps are regression baselines
produced by the package itself.
"""
import json
import sys
from pathlib import Path

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE.parent))

import oracle  # noqa: E402

TX, RX, M, N, D, F = (-0.4, 0.0, 0.1), (0.2, 0.0, 0.2), 30, 30, 5e-3, 8e9


def main():
    prof = oracle.ideal_phase(TX, RX, M, N, D, F)
    with open(HERE / "ideal_phase_30x30.csv", "w") as fh:
        for row in prof:
            fh.write(",".join(f"{x:.15e}" for x in row) + "\n")
    with open(HERE / "corner_geometry.json", "w") as fh:
        json.dump(oracle.corner_geometry(TX, RX, M, N, D), fh, indent=2, sort_keys=True)

    from ristlm.cell import UnitCellDesign
    from ristlm.link import LinkScenario
    from ristlm.synthesis import synthesize_surface

    sc = LinkScenario(TX, RX, M, N, UnitCellDesign.square(D, 0.5e-3, 1.2e-3), f=F)
    for mode in ("normal", "oblique"):
        cmap = synthesize_surface(sc, mode)
        with open(HERE / f"capacitance_{mode}_30x30.csv", "w") as fh:
            for row in cmap.c_var:
                fh.write(",".join(f"{x:.15e}" for x in row) + "\n")


if __name__ == "__main__":
    main()
