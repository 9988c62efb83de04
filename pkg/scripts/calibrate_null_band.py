"""Monte-Carlo calibration of the null min-p rate, oracle-side.

Estimates the fraction of independent series pairs whose minimum p-value
over lags 1..5 lands under 0.1, using only the reference implementations in
tests/oracles.py (normal equations + high-precision tails).  The acceptance
suite freezes the band printed here and checks the package against it on the
batch-0 seeds.

Run from the repository root:  python scripts/calibrate_null_band.py
"""

import statistics
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

import oracles  # noqa: E402

PAIRS_PER_BATCH = 200
N_BATCHES = 40
ALPHA = 0.1


def batch_fraction(batch: int) -> float:
    hits = 0
    for i in range(PAIRS_PER_BATCH):
        seed = batch * PAIRS_PER_BATCH + i
        source, target = oracles.null_pair_values(seed)
        assert source.min() > 0.0 and target.min() > 0.0, f"seed {seed} went negative"
        results = oracles.granger_pvalues_oracle(source, target, max_lag=5)
        min_p = min(p for _, p in results)
        if min_p < ALPHA:
            hits += 1
    return hits / PAIRS_PER_BATCH


def main() -> int:
    start = time.perf_counter()
    fractions = []
    for batch in range(N_BATCHES):
        frac = batch_fraction(batch)
        fractions.append(frac)
        print(f"batch {batch:2d}: fraction = {frac:.4f}")
    mean = statistics.mean(fractions)
    sd = statistics.stdev(fractions)
    print(f"\nbatches={N_BATCHES} pairs/batch={PAIRS_PER_BATCH}")
    print(f"mean={mean:.4f} sd={sd:.4f} min={min(fractions):.4f} max={max(fractions):.4f}")
    print(f"batch 0 (the frozen test batch): {fractions[0]:.4f}")
    print(f"suggested band: [{mean - 4 * sd:.4f}, {mean + 4 * sd:.4f}]")
    print(f"elapsed {time.perf_counter() - start:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
