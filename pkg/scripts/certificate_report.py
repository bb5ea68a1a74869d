#!/usr/bin/env python3
"""Print the certificate chain for the reference coplanar steady state.

Shows how the certified Lyapunov weight, time-step bounds and decay rate vary
with the scheme and the stiffness scale sigma.
"""
import sys

from kinlyap.certify import certify_explicit, certify_implicit
from kinlyap.model import CoplanarSteadyState, coplanar_model
from kinlyap.structure import coplanar_lambda0, decompose

STEADY = CoplanarSteadyState(U=1.0, f_e=(0.4, 0.3, 0.2, 0.6))


def main() -> int:
    dx = float(sys.argv[1]) if len(sys.argv) > 1 else 0.05
    lam0 = coplanar_lambda0(STEADY)
    print(f"steady state f_e={STEADY.f_e}, dx={dx}")
    print(f"{'scheme':9s} {'sigma':>6s} {'alpha':>12s} {'nu':>12s} "
          f"{'dt_cfl':>9s} {'dt_source':>12s}")
    for sigma in (1.0, 0.1, 0.02):
        model = coplanar_model(STEADY, sigma)
        dec = decompose(model, lam0)
        for kind, certify in (("explicit", certify_explicit), ("implicit", certify_implicit)):
            c = certify(model, dec, dx)
            dts = f"{c.dt_source:.4e}" if c.dt_source is not None else "-"
            print(f"{kind:9s} {sigma:6g} {c.alpha:12.5g} {c.nu:12.5g} "
                  f"{c.dt_cfl:9.4g} {dts:>12s}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
