"""Lyapunov exponent and bifurcation measure over the Riley parameter plane.

The Riley family sends a to [[1, 1], [0, 1]] and b to [[1, 0], [lam, 1]].
Averaging log-norms of the same random words at every pixel gives a
subharmonic field; its discrete Laplacian is a positive measure that sits
on the boundary of the discreteness region.

    python3 demos/riley_bifurcation.py [outdir]
"""

import sys
from pathlib import Path

import numpy as np

from lyapbif.family import riley
from lyapbif.io import write_field, write_mass
from lyapbif.lyapunov import ParamGrid, chi_field
from lyapbif.potential import ddc

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo-out/riley")
out.mkdir(parents=True, exist_ok=True)

R = riley()
mu = R.default_measure()  # uniform on a, a^-1, b, b^-1
grid = ParamGrid.from_bounds(-8, 2, -5, 5, 128, 128)

chi = chi_field(R, mu, grid, n=40, m=200, seed=1)
print(f"chi ranges over [{chi.values.min():.4f}, {chi.values.max():.4f}]")

# inside the discreteness region chi is harmonic, so almost all of the mass
# lands near the boundary of the slice
bif = ddc(chi)
s = bif.summary()
print(f"bifurcation mass {s['total']:.4f}, negative part / positive part {s['negative_fraction']:.2e}")

full = bif.full()
top = full > np.percentile(full, 95)
lam = grid.lams()[top]
print(f"top 5% of cells: |Im lam| median {np.median(np.abs(lam.imag)):.3f}, "
      f"Re lam in [{lam.real.min():.2f}, {lam.real.max():.2f}]")

write_field(out / "chi", chi)
write_mass(out / "bif", bif)
print(f"wrote {out}/chi.* and {out}/bif.*")
