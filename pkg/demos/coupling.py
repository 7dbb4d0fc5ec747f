"""
Coupling two walks
==================

Walk A replays walk B's moves and adds the extra Poisson steps its larger
rates owe it, so A hits 0 only if B does.  Each walker keeps its
own marginal law, which a chi-square test against free walks confirms.
Dropping the extra steps (the broken variant) is detected at once.
"""

from hiercontagion.walk import coupled_ensemble, coupling_marginal_check

cnt = coupled_ensemble(2, 1.0, 2, trials=100_000, seed=4).counts()
print("containment:", {k: cnt[k] for k in ("a_hit", "b_hit", "a_not_b", "b_not_a")})

for broken in (False, True):
    chk = coupling_marginal_check(2, 1.0, 2, trials=100_000, seed=5, walker="A", broken=broken)
    print(f"broken={broken!s:5}  chi2={chk.statistic:.1f}  p={chk.pvalue:.3g}")
