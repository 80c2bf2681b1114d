#!/usr/bin/env python3
"""Follow the isomonodromic Hamiltonian flow seeded by the closed-form
solution and tabulate the monodromy traces along the way: they should be
constant to integrator accuracy, and the endpoint must land back on the
closed form.

Example:
    python scripts/flow_traces.py --tau 0.2,1.1 --r 0.3 --s 0.2 --dtau 0,0.3 --steps 6
"""

import argparse

import numpy as np

from painleve_torus import (
    INDEX_ZERO,
    gle_params,
    hamiltonian_flow,
    hitchin_p,
    hitchin_state,
    make_context,
    monodromy,
)
from painleve_torus.pvi import nearest_representative


def cplx(text):
    re_s, im_s = text.split(",")
    return complex(float(re_s), float(im_s))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tau", type=cplx, default=0.2 + 1.1j)
    ap.add_argument("--r", type=float, default=0.3)
    ap.add_argument("--s", type=float, default=0.2)
    ap.add_argument("--dtau", type=cplx, default=0.2j)
    ap.add_argument("--steps", type=int, default=4)
    args = ap.parse_args()

    state = hitchin_state(args.r, args.s, args.tau)
    print(f"seed (r,s)=({args.r},{args.s}) at tau={args.tau}: "
          f"p={state.p:.12g} A={state.A:.12g}")
    states = hamiltonian_flow(INDEX_ZERO, state, args.tau + args.dtau, steps=args.steps)

    print(f"{'tau':>22} {'tr N1':>26} {'tr N2':>26}")
    for st in states:
        c = make_context(st.tau)
        rep = monodromy(c, gle_params(c, INDEX_ZERO, st.p, st.A))
        print(f"{st.tau:>22.6g} {np.trace(rep.N1):>26.16g} {np.trace(rep.N2):>26.16g}")

    c1 = make_context(states[-1].tau)
    pt, _ = hitchin_p(c1, args.r, args.s)
    target = pt.r + pt.s * c1.tau
    err = abs(nearest_representative(c1, states[-1].p, target) - states[-1].p)
    print(f"endpoint vs closed form: {err:.3e}")


if __name__ == "__main__":
    main()
