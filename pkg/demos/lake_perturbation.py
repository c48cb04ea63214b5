"""A small, slightly heavy bump on a lake at rest.

The bump splits into a left-going and a right-going front.  Because the
scheme preserves the lake exactly, everything ahead of the fronts stays at
rest up to the scheme's numerical spreading.

    python demos/lake_perturbation.py [max_level]
"""
import sys

import numpy as np

from vdswe import preset, run

level = int(sys.argv[1]) if len(sys.argv) > 1 else 4
res = run(preset(3).with_overrides(max_level=level, t_final=0.6, snapshots=()))
g, U = res.disc.grid, res.U

line = np.abs(g.yc - 0.5) < g.dy
order = np.argsort(g.xc[line])
xs, hu = g.xc[line][order], U[line, 1][order]
left, right = xs[np.argmin(hu)], xs[np.argmax(hu)]
print(f"t={res.t:g}: left front near x={left:.2f} (hu<0), right front near x={right:.2f} (hu>0)")

dev = np.abs(U[:, 0] - 1.0)
for x0 in (-1.9, -1.5, -1.0, 1.0, 1.5, 1.9):
    k = np.argmin(np.abs(g.xc - x0) + np.abs(g.yc - 0.5))
    print(f"  |w - 1| at x={g.xc[k]:+.2f}: {dev[k]:.2e}")
