"""Filter design with Monte Carlo density evolution at a small, quick scale.

Lists the affine classes of bijective filters for (L=2, Nbv=3), then ranks
a handful of filters by threshold.  Small pools make the estimates noisy and
push them up by a few tenths of a dB; the ordering is what to look at.
"""
from rasc import analysis, ring
from rasc.analysis import McdeConfig
from rasc.ring import RingParams

p = RingParams(2, 3)
classes = {}
for g in ring.bijective_filters(p):
    classes.setdefault(analysis.affine_class(int(g), p), []).append(int(g))
print(f"{len(ring.bijective_filters(p))} bijective filters in {len(classes)} affine classes")
for rep, members in sorted(classes.items()):
    print(f"  {rep:3d}: {members}")

cfg = McdeConfig(N_sam=1000, l_max=60, eps_sigma=1e-3, R_max=1)
for fb in (28, 44, 1, 7):
    res = analysis.threshold_search(analysis.ensemble(p, 2, fb), cfg)
    print(f"FB={fb:3d} {ring.format_taps(fb, p):24s} threshold {res.snr_db:6.3f} dB"
          f"  gap {res.gap_db:5.3f} dB")
