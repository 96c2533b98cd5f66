"""Free-particle kernel error and barrier size under joint refinement.

For each n_sub the spatial grid uses n_x = n_sub**2 cells. The one-period
kernel is compared with (x - y)**2 / 2 on pairs at circle distance <= 0.4.

    python3 scripts/refinement_study.py [--max-sub 16]
"""

import argparse

import numpy as np

from weakkam.pipeline import config_from_dict, run_stages


def one_level(n_sub, v_max=2.0):
    cfg = config_from_dict({"scenario": "free", "n_initial": 1,
                            "grid": {"n_x": n_sub ** 2, "n_sub": n_sub, "v_max": v_max}})
    res = run_stages(cfg, "classes")
    D = res.grid.distance_matrix()
    mask = D <= 0.4
    exact = 0.5 * D ** 2
    rel = np.max(np.abs(res.matrix - exact)[mask]) / np.max(exact[mask])
    return {
        "n_x": n_sub ** 2,
        "n_sub": n_sub,
        "kernel_rel_err": float(rel),
        "alpha0": res.critical.alpha0_karp + 0.0,
        "max_abs_h_inf": float(np.max(np.abs(res.barriers.h_inf))),
        "n_classes": len(res.decomposition.static_classes),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-sub", type=int, default=16)
    args = ap.parse_args()
    print(f"{'n_x':>6} {'n_sub':>5} {'kernel err':>11} {'alpha0':>10} {'max|h_inf|':>11} {'classes':>7}")
    n_sub = 2
    while n_sub <= args.max_sub:
        r = one_level(n_sub)
        print(f"{r['n_x']:6d} {r['n_sub']:5d} {r['kernel_rel_err']:11.4g} {r['alpha0']:10.3g} "
              f"{r['max_abs_h_inf']:11.4g} {r['n_classes']:7d}")
        n_sub *= 2


if __name__ == "__main__":
    main()
