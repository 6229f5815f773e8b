"""Isochrons: the level sets of the asymptotic phase.

Every point on an isochron converges to the same trajectory on the cycle,
so the curves fan out from the cycle into the basin.  For the circular
model they are radial rays; for the twisted model they are logarithmic
spirals, curving because off-cycle states rotate at a radius-dependent
rate while they relax inward or outward.
"""

import math

import numpy as np

import phasekit as pk


def main():
    print("=== isochron geometry ===")

    model = pk.make_model("radial")
    cycle = pk.find_limit_cycle(model, (1.7, 0.1))
    iso = pk.compute_isochron(model, cycle, 0.0, (0.3, 2.0), n_points=60)
    worst = np.max(np.abs(iso.points[:, 1]))
    print("radial model, zero-phase isochron: the positive x axis")
    print(f"  max |y| along the curve    {worst:.2e}")
    print(f"  phase residual             {iso.phase_residual:.2e}")

    model = pk.make_model("spiral")
    cycle = pk.find_limit_cycle(model, (0.5, 0.5))
    theta = math.pi / 4
    iso = pk.compute_isochron(model, cycle, theta, (0.3, 2.0), n_points=200)
    r = np.hypot(iso.points[:, 0], iso.points[:, 1])
    phi = np.arctan2(iso.points[:, 1], iso.points[:, 0])
    resid = np.abs(np.angle(np.exp(1j * (phi + np.log(r) - theta))))
    print(f"\nspiral model, isochron of theta = pi/4 "
          f"(identity: angle + log radius = theta)")
    for k in np.linspace(0, len(r) - 1, 7).astype(int):
        print(f"  r = {r[k]:.3f}   angle = {phi[k]: .4f}   "
              f"identity residual {resid[k]:.1e}")
    print(f"  worst residual over {len(r)} points: {resid.max():.2e}")

    print("\ncontraction onto the cycle: the distance of an isochron point")
    print("from the cycle shrinks by exp(lambda T) per period")
    lam = pk.floquet_exponent(model, cycle)
    k = int(np.argmin(np.abs(r - 1.02)))    # start close to the cycle
    x = iso.points[k]
    r0 = abs(np.hypot(*x) - 1.0)
    x1 = pk.flow(model, x, cycle.period, tol=(1e-12, 1e-14))
    r1 = abs(np.hypot(*x1) - 1.0)
    print(f"  measured ratio {r1 / r0:.3e}   "
          f"exp(lambda T) = {math.exp(lam * cycle.period):.3e}")


if __name__ == "__main__":
    main()
