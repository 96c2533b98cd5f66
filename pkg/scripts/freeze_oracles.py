"""Regenerate tests/frozen/oracle_values.json from the brute-force oracles.

The oracles in tests/oracles.py never import the package, so the frozen
numbers are an independent reference for the regression tests.

    python3 scripts/freeze_oracles.py
"""

import json
import math
import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

import oracles  # noqa: E402


def random_strongly_connected(rng, n, p_inf=0.4, lo=-5, hi=9):
    """Integer matrix with a guaranteed ring i -> i+1 plus random extra arcs."""
    A = [[math.inf] * n for _ in range(n)]
    for i in range(n):
        A[i][(i + 1) % n] = rng.randint(lo, hi)
        for j in range(n):
            if A[i][j] == math.inf and rng.random() > p_inf:
                A[i][j] = rng.randint(lo, hi)
    return A


def encode(M):
    return [[("inf" if x == math.inf else x) for x in row] for row in M]


def main():
    rng = random.Random(20240601)
    cases = []
    for _ in range(20):
        A = random_strongly_connected(rng, 5)
        lam = oracles.min_cycle_mean(A)
        B = [[x - lam for x in row] for row in A]
        cases.append({
            "A": encode(A),
            "min_cycle_mean": lam,
            "critical_nodes": oracles.critical_nodes(A),
            "closure_normalized": encode(oracles.closure(B)),
            "power_period": list(oracles.power_period(B)),
            "A_cubed": encode(oracles.power(A, 3)),
        })
    pendulum = {
        "n_x": 8, "n_sub": 2, "v_max": 6.0, "fourier_cos": [0.0, 1.0],
        "substep0": encode([[oracles.mechanical_substep_entry([0.0, 1.0], 8, 2, 6.0, 0, i, j)
                             for j in range(8)] for i in range(8)]),
    }
    doc = {"random_kernels": cases, "pendulum_substep": pendulum}
    out = ROOT / "tests" / "frozen" / "oracle_values.json"
    out.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
