"""Pendulum critical value from the three estimators on a sequence of grids.

    python3 scripts/critical_value_convergence.py
"""

from weakkam.pipeline import config_from_dict, run_stages

GRIDS = [(32, 4), (64, 8), (128, 16), (256, 16), (512, 32)]


def main():
    print(f"{'n_x':>5} {'n_sub':>5} {'karp':>14} {'bisection':>14} {'subadditive':>14}")
    for n_x, n_sub in GRIDS:
        cfg = config_from_dict({"scenario": "pendulum", "grid": {"n_x": n_x, "n_sub": n_sub}})
        cv = run_stages(cfg, "critical-value").critical
        print(f"{n_x:5d} {n_sub:5d} {cv.alpha0_karp:14.8f} {cv.alpha0_bisection:14.8f} "
              f"{cv.alpha0_subadditive:14.8f}")


if __name__ == "__main__":
    main()
