"""Build the dissipative Poisson suspension E2 and the fixed-point example E1.

Samples the marked point process, forms the infinitely divisible field by
stochastic integration and compares the empirical characteristic function of
X_0 with the Levy-Khintchine formula.
"""

import math

import numpy as np

from idpe import (DiscreteAtoms, DissipativeKernel, FixedPointAtoms, IntegerLattice, Kernel, LevySpec, RngStream,
                  count, empirical_charfn, folner_window, leaf, marginal_charfn, sample_point_config,
                  simulate_trace, simulate_values, validate_levy)

Z = IntegerLattice(1)
# E1: one atom of mass 1/2 at the mark 2, fixed by every translation
E1 = validate_levy(LevySpec(Z, (FixedPointAtoms(((2.0, 0.5),)),)))
# E2: unit-rate points on Z carrying the kernel f = delta_0 + delta_1 / 2 with unit marks
E2 = validate_levy(LevySpec(Z, (DissipativeKernel(Kernel.create(Z, {0: 1.0, 1: 0.5}),
                                                  DiscreteAtoms((1.0,), (1.0,)), 1.0),)))


def main(n=200_000):
    theta = sample_point_config(E1, folner_window(Z, 0), RngStream(1), n=n)
    c = count(theta)
    print(f"E1 atom count: mean {c.mean():.4f}, var {c.var():.4f} (Poisson(0.5))")
    print(f"E1 P(no atoms) = {np.mean(c == 0):.4f}, exp(-1/2) = {math.exp(-0.5):.4f}")

    tgrid = np.linspace(-5, 5, 101)
    for name, spec in (("E1", E1), ("E2", E2)):
        model = leaf(Z, levy=spec)
        x = simulate_values(model, [0], RngStream(2), n)[:, 0, 0]
        phi_hat, se = empirical_charfn(x, tgrid)
        phi = marginal_charfn(model, [0], tgrid[:, None])
        k = int(np.argmax(np.abs(phi_hat - phi)))
        print(f"{name}: sup_t |phi_hat - phi| = {abs(phi_hat[k] - phi[k]):.5f} at t={tgrid[k]:+.1f} "
              f"(5/sqrt(n) = {5 / math.sqrt(n):.5f})")

    tr = simulate_trace(leaf(Z, levy=E2), folner_window(Z, 10), RngStream(3))
    print("one E2 path on [-10, 10]:", " ".join(f"{v:g}" for v in tr.values[:, 0]))


if __name__ == "__main__":
    main()
