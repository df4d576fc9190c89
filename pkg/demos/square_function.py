"""Square function ``G_alpha`` of a modulated Gaussian in the plane.

By Plancherel, ``||G_alpha f||_2^2 / ||f||_2^2`` equals
``alpha / (4(2 alpha - 1))`` for ``alpha > 1/2``.  The script prints the
measured ratio for several ``alpha``.

    python3 demos/square_function.py
"""
import numpy as np

from rieszlab.grids import GridField
from rieszlab.square import g_alpha


def main():
    f = GridField.from_function(
        lambda x, y: np.exp(-(x * x + y * y) / 8.0) * np.cos(2.0 * x), dim=2, n=256, extent=64.0)
    mass = np.sum(np.abs(f.values) ** 2)
    for alpha in (0.75, 1.0, 2.0):
        g = np.abs(g_alpha(f, alpha).field.values)
        want = alpha / (4.0 * (2.0 * alpha - 1.0))
        print(f"alpha={alpha:4.2f}  ratio={np.sum(g * g) / mass:.5f}  expected={want:.5f}")


if __name__ == "__main__":
    main()
