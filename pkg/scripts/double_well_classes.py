"""Static classes of the double-well scenario as the grid is refined.

Prints the class count, the representative positions and the pseudometric
distance between the first two representatives.

    python3 scripts/double_well_classes.py
"""

from weakkam.barriers import pseudometric
from weakkam.pipeline import config_from_dict, run_stages

GRIDS = [(64, 8), (128, 16), (256, 16), (512, 16)]


def main():
    for n_x, n_sub in GRIDS:
        cfg = config_from_dict({"scenario": "double-well", "grid": {"n_x": n_x, "n_sub": n_sub}})
        res = run_stages(cfg, "classes")
        sc = res.decomposition.static_classes
        reps = sc.representatives
        line = f"n_x={n_x:4d} classes={len(sc)} reps=" + ", ".join(f"{r / n_x:.4f}" for r in reps)
        if len(reps) >= 2:
            nodes = res.barriers.mather_nodes
            d = pseudometric(res.barriers.k, nodes)
            i, j = nodes.index(reps[0]), nodes.index(reps[1])
            line += f" d={d[i, j]:.6f}"
        print(line)


if __name__ == "__main__":
    main()
