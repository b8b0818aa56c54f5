"""Leave-one-out QDA on the SONAR (mines vs rocks) data.

Each class covariance is estimated four ways: sample covariance, its
diagonal (naive Bayes), a banded Gaussian fit and a banded MGGD fit. The band
and beta are picked per class on random train/validation splits.

The full run takes several minutes on one core; pass a fold count to
evaluate only a prefix of the 208 held-out points.

    python demos/sonar_classification.py [path/to/sonar.all-data] [folds]
"""

from pathlib import Path
import sys
import time

from robust_scatter.experiments import SonarConfig, sonar_experiment
from robust_scatter.io import load_sonar

default = Path(__file__).resolve().parent.parent / "tests" / "data" / "sonar_keel.csv"
path = sys.argv[1] if len(sys.argv) > 1 else default
folds = int(sys.argv[2]) if len(sys.argv) > 2 else 20

data = load_sonar(path)
print(f"{len(data.labels)} samples, {data.features.shape[1]} features")
t0 = time.perf_counter()
cfg = SonarConfig(seed=0, folds=list(range(0, len(data.labels), max(1, len(data.labels) // folds))))
table = sonar_experiment(data, cfg)
print(f"{len(cfg.folds)} held-out points in {time.perf_counter() - t0:.0f}s")
for name, err in table.rows:
    print(f"  {name:18s} {100 * err:5.1f}% error")
sel = table.diagnostics["selections"][0]
print("first fold selections:", sel)
