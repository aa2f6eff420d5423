"""Zeros of tr^2 - 4 along random words, compared with the bifurcation measure.

For a word w of length n the parameters where rho_lam(w) is parabolic form a
finite set.  Counting each with weight 1/(2n) and averaging over a few
words gives a point measure that approaches the bifurcation measure as the
words get longer.

    python3 demos/trace_loci.py
"""

from lyapbif.experiments import compare_mass, random_trace_measure
from lyapbif.family import riley
from lyapbif.lyapunov import ParamGrid
from lyapbif.potential import bif_measure
from lyapbif.zeros import Box, trace_locus

R = riley()
mu = R.default_measure()

# a single short word: tr(ab) = 2 + lam, so tr^2 = 4 at lam = 0 and lam = -4
for p in trace_locus(R, R.parse("ab"), 4, Box(0j, 6, 6)).points:
    print(f"ab parabolic at {p.lam.real:+.12f}{p.lam.imag:+.12f}i (mult {p.mult})")

grid = ParamGrid.from_bounds(-8, 2, -5, 5, 128, 128)
bif = bif_measure(R, mu, grid, n=40, m=200, seed=1)

print("\n  n   points   TV(8x8 blocks)  correlation")
for n in (10, 20, 40):
    emp, clouds, _ = random_trace_measure(R, mu, grid, n, k=10, t=4, seed=2)
    rep = compare_mass(emp, bif, 8)
    print(f"{n:>3} {sum(c.total_multiplicity for c in clouds):>8}   {rep.tv:>12.4f}  {rep.correlation:>11.4f}")
