"""Phase models of coupled pairs -- and a warning case where they fail.

A detuned pair of rotating-wave oscillators with mutual direct coupling
reduces to phase equations whose edge function is sin - cos; the pair locks
where the antisymmetric part balances the detuning.  The second half builds
a pair whose sensitivity is prescribed to rotate against the coupling term:
its averaged coupling vanishes identically, so the first-order phase model
predicts free drift even though the full pair locks -- locking there is a
beyond-first-order effect, flagged by a large order ratio.
"""

import math
import warnings

import numpy as np

import phasekit as pk


def main():
    print("=== detuned pair with direct coupling ===")
    d_omega, eps = 0.02, 0.05
    ma = pk.make_model("stuart_landau", omega=2.0 - 0.5 * d_omega, c2=1.0)
    mb = pk.make_model("stuart_landau", omega=2.0 + 0.5 * d_omega, c2=1.0)
    spec = pk.NetworkSpec(models=[ma, mb], epsilon=eps,
                          a=np.array([[0.0, 1.0], [1.0, 0.0]]),
                          coupling="direct")
    pm = pk.build_phase_model(spec)
    cf = pm.edges[(0, 1)]
    err = np.max(np.abs(cf.values - (np.sin(cf.grid) - np.cos(cf.grid))))
    print(f"edge function vs sin - cos: max err {err:.2e}")
    psi_star = math.asin(d_omega / (2.0 * eps))
    print(f"predicted lock at psi* = arcsin(d_omega / 2 eps) = {psi_star:.6f}")

    report = pk.compare_full_vs_reduced(spec, horizon_mult=1.0)
    print(f"full vs reduced over one averaging time: "
          f"max phase err {report.max_error:.3e} (eps = {eps})")

    print("\n=== prescribed sensitivity that defeats first order ===")
    spec = pk.sl_prescribed_pair(0.02, 0.2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pm = pk.build_phase_model(spec)
        worst = max(np.max(np.abs(cf.values)) for cf in pm.edges.values())
        print(f"averaged coupling of the prescribed pair: max |qbar| "
              f"= {worst:.2e}")
        print(f"order ratio (residual detuning / first-order capacity): "
              f"{pk.order_ratio(pm):.2e}")
        report = pk.compare_full_vs_reduced(spec, horizon_mult=4.0)
    print(f"phase-model error against the full pair: "
          f"{report.max_error:.2f} rad -- the full pair locks, the")
    print("first-order model drifts at the detuning; a vanishing averaged")
    print("coupling is a structural warning, not a license to reduce")


if __name__ == "__main__":
    main()
