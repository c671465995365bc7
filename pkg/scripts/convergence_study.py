"""Run the energy, wavefunction and projector convergence studies on a model
and write one CSV per study plus a JSON summary.

    python3 scripts/convergence_study.py --model torus --out runs/torus
"""

import argparse
import time
from pathlib import Path

from bogoexp.io import dumps, load_model
from bogoexp.verify import (
    DEFAULT_NLIST,
    energy_convergence_study,
    projector_convergence_study,
    wavefunction_convergence_study,
)

STUDIES = {
    "energy": (energy_convergence_study, (0, 1, 2)),
    "wavefunction": (wavefunction_convergence_study, (0, 1, 2)),
    "projector": (projector_convergence_study, (0, 1)),
}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--model", default="torus")
    p.add_argument("--level", type=int, default=0)
    p.add_argument("--Nlist", default=",".join(map(str, DEFAULT_NLIST)))
    p.add_argument("--out", default="runs/convergence")
    args = p.parse_args()

    model = load_model(args.model)
    Nlist = [int(x) for x in args.Nlist.split(",")]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for kind, (fn, orders) in STUDIES.items():
        for a in orders:
            t0 = time.perf_counter()
            res = fn(model, args.level, a, Nlist)
            (out / f"{kind}_a{a}.csv").write_text(res.csv(), encoding="utf-8")
            summary[f"{kind}_a{a}"] = dict(res.summary(), seconds=time.perf_counter() - t0)
            fit = res.fit
            print(f"{kind:12s} a={a}  slope {fit.slope:6.3f}  R2 {fit.r2:.5f}  pass {fit.passed}")
    (out / "summary.json").write_text(dumps(summary), encoding="utf-8")


if __name__ == "__main__":
    main()
