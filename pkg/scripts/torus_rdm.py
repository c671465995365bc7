"""Compare the first-order one-body density matrix correction on the torus
with its closed form for a range of Fock cutoffs."""

import argparse

import numpy as np

from bogoexp.expansion import prepare, projector_coefficients, rdm1_coefficients, torus_rdm_closed_form
from bogoexp.io import load_model


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--model", default="torus")
    p.add_argument("--nmax", default="8,10,12,14")
    args = p.parse_args()

    model = load_model(args.model)
    if model.torus is None:
        raise SystemExit("the closed form exists only for torus models")
    for nmax in (int(x) for x in args.nmax.split(",")):
        ctx = prepare(model, nmax, 1)
        P1 = projector_coefficients(ctx.sd, ctx.hj, 0, 1)
        _, g1 = rdm1_coefficients(ctx.sd, P1, 0, ctx.sol)
        dev = np.max(np.abs(g1 - torus_rdm_closed_form(model, ctx.sol)))
        print(f"nmax={nmax:3d}  max deviation {dev:.3e}")
    np.set_printoptions(precision=6, suppress=True)
    print(g1.real)


if __name__ == "__main__":
    main()
