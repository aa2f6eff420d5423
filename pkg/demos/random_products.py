"""Tail statistics of random products in a Schottky group.

a = diag(s, 1/s) and a rotated copy b of a, conjugated by a translation by
lam.  For small lam the two generators play ping-pong, random products are
loxodromic with well separated fixed points, and log|tr| / n concentrates
at the Lyapunov exponent.

    python3 demos/random_products.py
"""

import numpy as np

from lyapbif.experiments import EpsRule, delta_statistics, pair_separation_stats, trace_ld_statistics
from lyapbif.family import schottky
from lyapbif.lyapunov import chi_furstenberg_estimate, chi_norm_estimate
from lyapbif.words import WalkSampler

S = schottky(3)
mu = S.default_measure()
lam = 0.1

a = chi_norm_estimate(S, mu, lam, 200, 5000, WalkSampler(mu, 1, 0))
b = chi_furstenberg_estimate(S, mu, lam, 100, 20_000, WalkSampler(mu, 1, 1))
print(f"chi from norms {a.value:.4f} +- {a.stderr:.4f}, from the stationary chain {b.value:.4f} +- {b.stderr:.4f}")

ns = [25, 50, 100, 200]
print("\nP(fixed points closer than 1/n)")
print(delta_statistics(S, mu, lam, ns, EpsRule("power", 1.0), 5000, seed=3).format())

ld = trace_ld_statistics(S, mu, lam, 0.2, ns, 5000, seed=3)
print("\nP(|log|tr|/n - chi| > 0.2)")
print(ld.format())
print(f"log-probability slope {ld.log_slope():.4f} per unit n")

for n in (20, 40, 80):
    v = pair_separation_stats(S, mu, lam, 0.1, n, 2000, seed=3)
    print(f"pairs at n={n:>3} not loxodromic with separation exp(-0.1 n): {v:.4f}")
