"""Light and heavy water meet over a Gaussian hump.

The same problem is run twice: with the well-balanced source quadrature and
with the plain one.  Over the hump the plain quadrature produces spurious
currents even in still water, which the refinement criteria pick up, so the
plain run ends up with more leaves.

    python demos/density_hump.py [max_level]
"""
import sys

import numpy as np

from vdswe import preset, run

level = int(sys.argv[1]) if len(sys.argv) > 1 else 4
base = preset(2).with_overrides(max_level=level, snapshots=())

results = {}
for mode in ("wb", "nwb"):
    res = run(base.with_overrides(source_mode=mode))
    results[mode] = res
    print(f"{mode:>3}: {res.steps} steps, max leaves {res.summary['max_leaves']}, "
          f"min depth {res.summary['min_h']:.4f}")

# density along the channel centerline at the final time
res = results["wb"]
g = res.disc.grid
h = res.U[:, 0] - res.disc.bathymetry.center
rho = res.U[:, 3] / h
line = np.abs(g.yc - 0.5) < g.dy
order = np.argsort(g.xc[line])
xs, rs = g.xc[line][order], rho[line][order]
print("centerline density at t=0.8:")
for x0 in np.arange(0.6, 1.4, 0.1):
    k = np.argmin(np.abs(xs - x0))
    print(f"  x={xs[k]:.3f}  rho={rs[k]:.1f}")
