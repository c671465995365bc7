"""Command-line front end.

Every command prints a JSON report on stdout and, with ``--out``, writes the
same report (and CSV tables for studies) into that directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BogoexpError, CheckFailed, ConfigError
from .io import dumps, load_model, model_hash

COMMANDS = ("hartree", "bogoliubov", "expand", "verify", "rdm", "selftest")
STUDIES = ("energy", "projector", "wavefunction")


@dataclass
class RunConfig:
    command: str
    study: str = None
    model: str = "torus"
    nmax: int = None
    level: int = 0
    order: int = 1
    Nlist: tuple = (10, 14, 20, 28, 40)
    out: str = None
    deterministic: bool = False
    seed: int = 0
    dump_operators: bool = False

    def __post_init__(self):
        if self.nmax is None:
            self.nmax = max(2 + 3 * self.order, 8)
        self.Nlist = tuple(sorted(int(N) for N in self.Nlist))
        self.validate()

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}", commands=list(COMMANDS))
        if self.command == "verify" and self.study not in STUDIES:
            raise ConfigError("verify needs one of energy, projector, wavefunction", study=self.study)
        if self.order < 0 or self.level < 0:
            raise ConfigError("order and level must be non-negative", order=self.order, level=self.level)
        if self.nmax < 2 + 3 * self.order:
            raise ConfigError(
                f"nmax={self.nmax} is below 2 + 3*order = {2 + 3 * self.order}: the operator "
                "coefficients change the excitation number by up to three per order, so smaller "
                "cutoffs clip the sectors the coefficients reach",
                nmax=self.nmax, order=self.order,
            )
        bad = [N for N in self.Nlist if N <= max(2, self.nmax)]
        if bad and self.command == "verify":
            raise ConfigError("every N must exceed max(2, nmax)", bad=bad, nmax=self.nmax)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    p = _Parser(prog="bogoexp", description="Expansions around Bogoliubov theory on finite mode bases.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("study", nargs="?", choices=STUDIES, help="study kind for 'verify'")
    p.add_argument("--model", help="fixture name, JSON file or inline JSON (default: torus)")
    p.add_argument("--nmax", type=int, help="Fock cutoff for the coefficients")
    p.add_argument("--level", type=int, help="Bogoliubov level index n")
    p.add_argument("--order", type=int, help="expansion order a")
    p.add_argument("--Nlist", help="comma-separated particle numbers for studies")
    p.add_argument("--out", help="directory for report files")
    p.add_argument("--deterministic", action="store_true", default=None)
    p.add_argument("--seed", type=int, help="seed for random Hartree starts")
    p.add_argument("--config", help="JSON file with option defaults; flags win")
    p.add_argument("--dump-operators", action="store_true", default=None,
                   help="with 'expand' and --out, write the projector coefficients")
    return p


def parse_config(argv):
    args = build_parser().parse_args(argv)
    values = {}
    if args.config:
        try:
            values.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
    for key in ("model", "nmax", "level", "order", "Nlist", "out", "deterministic", "seed", "dump_operators"):
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    if isinstance(values.get("Nlist"), str):
        try:
            values["Nlist"] = [int(x) for x in values["Nlist"].split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigError("Nlist must be comma-separated integers") from exc
    unknown = set(values) - {f for f in RunConfig.__dataclass_fields__}
    if unknown:
        raise ConfigError("unknown config keys", keys=sorted(unknown))
    return RunConfig(command=args.command, study=args.study, **values)


# ---------------------------------------------------------------- commands


def _solve(cfg, model):
    from .model import hartree_solve

    return hartree_solve(model, seed=cfg.seed)


def cmd_hartree(cfg, model):
    sol = _solve(cfg, model)
    return {
        "eH": sol.eH, "muH": sol.muH, "gap": sol.gH, "residual": sol.residual,
        "iterations": sol.iterations, "phi": sol.phi, "eps": sol.eps,
    }, {}


def cmd_bogoliubov(cfg, model):
    from .bogoliubov import quasifree_groundstate_check
    from .expansion import prepare

    ctx = prepare(model, cfg.nmax, cfg.level + 1, _solve(cfg, model))
    sd = ctx.sd
    report = {
        "E00": sd.E00, "quasiparticle_energies": sd.d,
        "levels": [{"energy": lv.energy, "multiplicity": lv.multiplicity} for lv in sd.levels],
        "gaps": sd.gaps, "contour_radii": sd.contour,
        "quasiparticle_match": [{"deviation": dev, "occupations": list(nu)} for dev, nu in sd.cross_check],
        "reliable_levels": sd.reliable,
    }
    if sd.level(0).multiplicity == 1:
        report["wick"] = quasifree_groundstate_check(sd)
    return report, {}


def cmd_expand(cfg, model):
    from .expansion import expand
    from .fock import dump_operator

    res = expand(model, cfg.level, cfg.order, cfg.nmax, sol=_solve(cfg, model))
    files = {}
    if cfg.dump_operators:
        for l, P in enumerate(res.Pcoeffs):
            files[f"P_{l}.txt"] = dump_operator(P)
    return res.summary(), files


def cmd_verify(cfg, model):
    from . import verify

    fn = {
        "energy": verify.energy_convergence_study,
        "projector": verify.projector_convergence_study,
        "wavefunction": verify.wavefunction_convergence_study,
    }[cfg.study]
    res = fn(model, cfg.level, cfg.order, cfg.Nlist, nmax=cfg.nmax, sol=_solve(cfg, model))
    report = res.summary()
    report["rows"] = res.rows
    return report, {f"{cfg.study}.csv": res.csv(), f"{cfg.study}.json": dumps(res.summary())}


def cmd_rdm(cfg, model):
    from .expansion import prepare, projector_coefficients, rdm1_coefficients, torus_rdm_closed_form

    ctx = prepare(model, cfg.nmax, cfg.level + 1, _solve(cfg, model))
    P1 = projector_coefficients(ctx.sd, ctx.hj, cfg.level, 1)
    g0, g1 = rdm1_coefficients(ctx.sd, P1, cfg.level, ctx.sol)
    report = {"gamma0": g0, "gamma1": g1, "trace_gamma1": np.trace(g1)}
    if model.torus is not None and cfg.level == 0:
        cf = torus_rdm_closed_form(model, ctx.sol)
        report["closed_form"] = cf
        report["closed_form_deviation"] = float(np.max(np.abs(g1 - cf)))
    return report, {}


def cmd_selftest(cfg, model):
    from . import verify
    from .bogoliubov import quasifree_groundstate_check
    from .expansion import (
        energy_closed_forms,
        energy_coefficients,
        energy_coefficients_iterative,
        prepare,
        projector_coefficients,
        projector_from_wavefunctions,
        remainder_identity_check,
        taylor_coefficients,
        wavefunction_coefficients,
    )
    from .fock import substitution_rules_check

    sol = _solve(cfg, model)
    ctx = prepare(model, cfg.nmax, cfg.level + 1, sol)
    sd, hj, n = ctx.sd, ctx.hj, cfg.level
    a = min(max(cfg.order, 2), 3)
    checks = {}

    def record(name, value, tol):
        checks[name] = {"value": float(value), "tolerance": tol, "pass": bool(value <= tol)}

    if model.M > 1:
        record("substitution_rules", max(substitution_rules_check(sol, 4).values()), 1e-10)
        record("excitation_identity", verify.excitation_identity_check(model, sol, ctx.kernels, 5), 1e-9)
    N = max(cfg.nmax, 6)
    table = taylor_coefficients(a + 2)
    record("remainder_identity", max(remainder_identity_check(ctx.kops, table, k, N)["residual"]
                                     for k in range(a + 1)), 1e-10)
    P = [projector_coefficients(sd, hj, n, l).dense() for l in range(a + 1)]
    record("projector_trace", max(abs(np.trace(p)) for p in P[1:]), 1e-9)
    record("projector_convolution", max(float(np.max(np.abs(sum(P[j] @ P[l - j] for j in range(l + 1)) - P[l])))
                                        for l in range(1, a + 1)), 1e-9)
    record("projector_hermitian", max(float(np.max(np.abs(p - p.conj().T))) for p in P), 1e-10)
    E = energy_coefficients(sd, hj, n, 2)
    if sd.level(n).multiplicity == 1:
        Ei = energy_coefficients_iterative(sd, hj, n, 2)
        c1, c2 = energy_closed_forms(sd, hj, n)
        record("energy_iterative", max(abs(x - y) for x, y in zip(E, Ei)), 1e-9)
        record("energy_closed_forms", max(abs(E[1] - c1), abs(E[2] - c2)), 1e-9)
        wf = wavefunction_coefficients(sd, hj, n, a, projectors=P, energies=E)
        record("wavefunction_projectors", max(float(np.max(np.abs(projector_from_wavefunctions(wf, l) - P[l])))
                                              for l in range(3)), 1e-9)
        record("alpha_odd", max(abs(wf.alpha[l]) for l in range(1, a + 1, 2)), 1e-12)
    if n == 0 and sd.level(0).multiplicity == 1 and model.M > 1:
        # pair correlations need a deeper cutoff than the coefficient checks
        wick = quasifree_groundstate_check(prepare(model, max(cfg.nmax, 12), 1, sol, ctx.kernels).sd)
        record("wick_one_three_point", max(wick["one_point_max"], wick["three_point_max"]), 1e-9)
        record("wick_four_point", wick["four_point_residual"], 1e-8)
    report = {"checks": checks, "pass": all(c["pass"] for c in checks.values())}
    return report, {}


HANDLERS = {
    "hartree": cmd_hartree,
    "bogoliubov": cmd_bogoliubov,
    "expand": cmd_expand,
    "verify": cmd_verify,
    "rdm": cmd_rdm,
    "selftest": cmd_selftest,
}


def run(cfg: RunConfig, stdout=None):
    """Execute ``cfg`` and return the exit status."""
    stdout = stdout or sys.stdout
    model = load_model(cfg.model)
    report, files = HANDLERS[cfg.command](cfg, model)
    header = {"command": cfg.command, "study": cfg.study, "model": model.label or cfg.model,
              "model_hash": model_hash(model), "config": {k: v for k, v in asdict(cfg).items() if k != "out"}}
    if not cfg.deterministic:
        header["version"] = __version__
    doc = {"run": header, "report": report}
    text = dumps(doc)
    stdout.write(text)
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{cfg.command}.json").write_text(text, encoding="utf-8")
        for name, content in files.items():
            (out / name).write_text(content, encoding="utf-8")
    if report.get("pass") is False:
        raise CheckFailed("one or more checks failed")
    return 0


def main(argv=None):
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        return run(cfg)
    except BogoexpError as exc:
        sys.stderr.write(json.dumps({"error": exc.as_dict()}, default=str, sort_keys=True) + "\n")
        return exc.exit_status


if __name__ == "__main__":
    sys.exit(main())
