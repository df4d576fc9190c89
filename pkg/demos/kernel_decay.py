"""Radial decay of the t-averaged Bochner-Riesz kernel in the plane.

Prints the fitted log-log slope next to the predicted ``-((d-1)/2 + alpha)``
for a few values of ``alpha``.

    python3 demos/kernel_decay.py
"""
from rieszlab.experiments import ExperimentConfig, kernel_decay_experiment


def main():
    for alpha in (0.5, 1.0, 2.0):
        cfg = ExperimentConfig.from_dict({
            "experiment": "kernel-decay", "d": 2, "grid": {"n": 2048, "L": 256.0},
            "params": {"alpha": alpha}, "output": {"csv": "unused.csv"}})
        rep = kernel_decay_experiment(cfg)
        lo, hi = rep.fit_range
        print(f"alpha={alpha:4.2f}  slope={rep.slope:+.4f}  expected={rep.expected:+.4f}  "
              f"range=[{lo:g}, {hi:g}]")


if __name__ == "__main__":
    main()
