"""Heavy water is pumped into a channel that narrows abruptly.

A jet of denser water enters through the middle of the west wall and hits
the contraction at x = 1; the masked corners are not part of the domain.  The
run checks that depths and densities stay nonnegative at every face point.

    python demos/contraction.py [max_level] [t_final]
"""
import sys

from vdswe import preset, run

level = int(sys.argv[1]) if len(sys.argv) > 1 else 3
t_final = float(sys.argv[2]) if len(sys.argv) > 2 else 0.5
res = run(preset(4).with_overrides(max_level=level, t_final=t_final, snapshots=()))

s = res.summary
print(f"t={res.t:g} after {res.steps} steps, leaves {s['min_leaves']}..{s['max_leaves']}")
print(f"smallest reconstructed depth {s['min_h']:.4g}, smallest density {s['min_rho']:.4g}")
print(f"water volume grew from {res.history[0].volume:.4f} to {res.history[-1].volume:.4f} "
      "through the inflow")
