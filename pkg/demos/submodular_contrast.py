"""
Independent cascade for contrast
================================

Under independent cascade the spread is submodular, so on the same
two-level tree one seed per leaf beats putting every seed in one leaf.
Each leaf then holds its own giant component and every seed reaches one.
"""

from hiercontagion import submodular_demo

rep = submodular_demo(3, 2, n=100_000, trials=50, seed=7)
print(f"leaf mean degree {rep.leaf_mean_degree:.2f}")
print(f"spread        {rep.spread_mean:9.0f} +- {rep.spread_se:.0f}  (oracle {rep.oracle_spread:.0f})")
print(f"concentrated  {rep.concentrated_mean:9.0f} +- {rep.concentrated_se:.0f}"
      f"  (oracle {rep.oracle_concentrated:.0f})")
print("spread wins" if rep.spread_wins else "no significant difference")
