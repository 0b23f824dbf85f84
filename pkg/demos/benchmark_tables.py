"""Small-scale runs of the synthetic experiments.

Each experiment is run with 100 replications so the whole script finishes in
a minute or two.  The full-size runs behind the acceptance checks use 500.
The same tables are available from the command line via ``rcpd bench``.

    python demos/benchmark_tables.py
"""

from rcpd import CriticalValueTable
from rcpd.critical_values import default_cache_path
from rcpd.synthetic import experiment_segmentation, experiment_single_cp, experiment_trend

table = CriticalValueTable(default_cache_path())
REPS = 100

print("exact-count rates, plain vs validated binary segmentation")
print(experiment_segmentation(reps=REPS, seed=1, cv_provider=table).to_csv())

print("direction success of the two indicators")
print(experiment_trend(reps=REPS, seed=2, cv_provider=table).to_csv())

print("one change at index 300, standard statistic")
report = experiment_single_cp(reps=REPS, mus=(0.0, 1.0, 2.0), seed=3, variant="standard",
                              cv_provider=table)
print(report.to_csv())
