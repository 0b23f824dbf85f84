"""Find the mean changes in a stored series.

A 900-point ARMA(1,1) series gets three planted shifts.  Plain binary
segmentation and the validated variant are run on it, and each kept change
is described by its direction and relative size.

    python demos/offline_segmentation.py
"""

import numpy as np

from rcpd import (
    CriticalValueTable,
    Kind,
    binary_segmentation,
    direction_baseline,
    modified_binary_segmentation,
)
from rcpd.critical_values import default_cache_path
from rcpd.evaluation import change_magnitudes
from rcpd.synthetic import ArmaSpec, ChangePlan, generate

spec = ArmaSpec(n=900, seed=11)
# shifts start at the listed index; detected changes are reported as the
# last index before the shift, so expect 299, 549 and 749
plan = ChangePlan([(300, 2.0), (550, -1.5), (750, 2.5)])
series = generate(spec, plan)
x = series.column(1) + 10.0  # a positive level makes relative sizes meaningful

table = CriticalValueTable(default_cache_path())
cv = table(Kind.OFFLINE, r=1, alpha=0.05)
print(f"off-line critical value (alpha=0.05): {cv:.3f}")

bs = binary_segmentation(x[:, None], cv=cv)
mbs = modified_binary_segmentation(x[:, None], cv=cv)
print(f"binary segmentation:    {bs}")
print(f"validated segmentation: {mbs}")

for k, d, m in zip(mbs, direction_baseline(x, mbs), change_magnitudes(x, mbs)):
    print(f"  change after {k:4d}: {d.value:<4s}  relative size {m:.1%}")

bounds = [0, *mbs, x.size]
print("segment means:", np.round([x[a:b].mean() for a, b in zip(bounds, bounds[1:])], 2))
