"""Command-line front end.

Every artifact (JSON or CSV) carries the resolved run configuration and the
library version. Exit codes: 0 ok, 2 bad configuration, 3 solver failure,
4 a --check gate failed.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DiracEnsError

EXIT_CONFIG, EXIT_SOLVER, EXIT_CHECK = 2, 3, 4

PRESETS = ("gaussian", "quartic", "cubic", "hexic", "single-quartic", "single-cubic",
           "single-hexic")
COUPLING_FLAGS = ("t2", "t3", "t4", "t6")


class CheckFailed(Exception):
    pass


# --- configuration ------------------------------------------------------------------

@dataclass
class RunConfig:
    command: str
    model: str = "quartic"
    couplings: dict = field(default_factory=dict)
    dirac_terms: str | None = None
    single_terms: str | None = None
    mode: str = "numeric"
    tol: float = 1e-10
    seed: int = 0
    out: str = "out"
    check: bool = False
    options: dict = field(default_factory=dict)

    @property
    def formal_order(self):
        if self.mode == "numeric":
            return None
        return int(self.mode.split(":", 1)[1])

    def validate(self):
        if self.model not in PRESETS and self.model != "custom":
            raise ConfigError(f"unknown model {self.model!r}; choose from {', '.join(PRESETS)} "
                              "or pass --dirac-terms / --single-terms")
        if self.mode != "numeric":
            head, _, order = self.mode.partition(":")
            if head != "formal" or not order.isdigit() or int(order) < 1:
                raise ConfigError(f"--mode must be 'numeric' or 'formal:<order>', got {self.mode!r}")
        if self.tol <= 0:
            raise ConfigError("--tol must be positive")
        bad = set(self.couplings) - set(COUPLING_FLAGS)
        if bad:
            raise ConfigError(f"unknown couplings {sorted(bad)}")
        return self

    def to_json(self):
        d = asdict(self)
        d["couplings"] = {k: str(v) for k, v in self.couplings.items()}
        return d


CONFIG_KEYS = {f for f in RunConfig.__dataclass_fields__ if f != "command"}


def _coupling(s):
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None


def _terms(s):
    out = {}
    for part in s.split(","):
        k, _, v = part.partition(":")
        if not v:
            raise ConfigError(f"term {part!r} is not of the form power:coefficient")
        out[int(k)] = Fraction(v)
    return out


def build_potential(cfg):
    from .dirac import DiracPotential, potential_to_bitracial, single_trace
    from .criticality import family
    if cfg.dirac_terms:
        return potential_to_bitracial(DiracPotential(tuple(_terms(cfg.dirac_terms).items())))
    if cfg.single_terms:
        t = _terms(cfg.single_terms)
        g = t.pop(2, Fraction(1))
        return single_trace(t, gaussian=g)
    c = dict(cfg.couplings)
    if cfg.model == "gaussian":
        return single_trace({}, gaussian=c.get("t2", Fraction(1)))
    needed = {"quartic": ("t4",), "cubic": ("t3",), "hexic": ("t4", "t6")}[
        cfg.model.replace("single-", "")]
    missing = [k for k in needed if k not in c]
    if missing:
        raise ConfigError(f"model {cfg.model} needs --{' --'.join(missing)}")
    extra = set(c) - set(needed) - {"t2"}
    if extra:
        raise ConfigError(f"model {cfg.model} does not take {sorted(extra)}")
    return family(cfg.model, **c)


def load_config_file(path):
    d = json.loads(Path(path).read_text())
    unknown = set(d) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    return d


# --- output helpers -------------------------------------------------------------------

def _stamp(cfg, payload):
    return {"version": __version__, "config": cfg.to_json(), **payload}


def _write_json(cfg, name, payload):
    path = Path(cfg.out) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_stamp(cfg, payload), indent=2, default=_jsonable) + "\n")
    return path


def _write_csv(cfg, name, columns, rows, docs):
    path = Path(cfg.out) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        head = {"columns": docs, "version": __version__, "config": cfg.to_json()}
        fh.write("# " + json.dumps(head, sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        w.writerows(rows)
    return path


def _jsonable(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _solve(cfg, p):
    from .spectral import solve_one_cut
    if cfg.mode == "numeric":
        return solve_one_cut(p, mode="numeric", tol=min(cfg.tol, 1e-12))
    return solve_one_cut(p, mode="formal", order=cfg.formal_order)


# --- subcommands ------------------------------------------------------------------------

def cmd_solve(cfg):
    from .recursion import correlator_table
    from .loop_equations import sde_sweep
    from .spectral import density
    p = build_potential(cfg)
    sol = _solve(cfg, p)
    lmax = cfg.options.get("lmax", 8)
    tab = correlator_table(sol, gmax=1, nmax=2, lmax=lmax)
    rep = sde_sweep(sol.potential, tab, gmax=1, lmax=lmax, tol=cfg.tol)
    payload = {"solution": sol.to_dict(lmax), "table": tab.to_json(), "sde": rep.to_json()}
    d = None
    if cfg.mode == "numeric":
        d = density(sol, allow_negative=True)
        mf = float(d.min_factor())
        payload["density_min_factor"] = mf
        payload["past_critical"] = mf < 0
    path = _write_json(cfg, "solution.json", payload)
    print(f"wrote {path}")
    if d is not None:
        if payload["past_critical"]:
            print("warning: the density is negative near an edge; these couplings lie past "
                  "the critical line (formal branch only)", file=sys.stderr)
        b, a = d.support
        xs = np.linspace(b, a, cfg.options.get("grid", 401))
        rows = [[repr(float(x)), repr(float(d(x)))] for x in xs]
        dp = _write_csv(cfg, "density.csv", ["x", "rho"], rows,
                        {"x": "eigenvalue grid over the support", "rho": "limiting density"})
        print(f"wrote {dp}")
        print(f"alpha={float(sol.alpha):.12g} gamma={float(sol.gamma):.12g} "
              f"support=[{b:.12g}, {a:.12g}]")
    print(f"SDE max |residual| = {rep.max_abs:.3e} over {rep.checked} equations")
    if cfg.check and not rep.passed:
        raise CheckFailed("SDE residual above tolerance")


def cmd_correlators(cfg):
    from .recursion import correlator_table
    from .loop_equations import sde_sweep
    p = build_potential(cfg)
    sol = _solve(cfg, p)
    o = cfg.options
    tab = correlator_table(sol, gmax=o["gmax"], nmax=o["nmax"], lmax=o["lmax"])
    rep = sde_sweep(sol.potential, tab, gmax=o["gmax"], lmax=o["lmax"], tol=cfg.tol)
    path = _write_json(cfg, "correlators.json", {"solution": sol.to_dict(o["lmax"]),
                                                 "table": tab.to_json(), "sde": rep.to_json()})
    rows = [[r["g"], " ".join(map(str, r["lengths"])), json.dumps(r["value"])]
            for r in tab.records()]
    cp = _write_csv(cfg, "correlators.csv", ["g", "lengths", "value"], rows,
                    {"g": "genus", "lengths": "space-separated boundary lengths",
                     "value": "coefficient (number, exact string, or series object)"})
    print(f"wrote {path}\nwrote {cp}")
    print(f"SDE max |residual| = {rep.max_abs:.3e} over {rep.checked} equations")
    if cfg.check and not rep.passed:
        raise CheckFailed("SDE residual above tolerance")


def cmd_free_energy(cfg):
    from .recursion import free_energy_series
    from .criticality import singular_exponent
    if cfg.formal_order is None:
        raise ConfigError("free-energy needs --mode formal:<order>")
    p = build_potential(cfg)
    g = cfg.options["genus"]
    s = free_energy_series(p, g=g, order=cfg.formal_order)
    coeffs = list(s.coeffs) + [0] * (cfg.formal_order + 1 - len(s.coeffs))
    payload = {"genus": g, "coefficients": [str(c) if isinstance(c, Fraction) else c
                                            for c in coeffs]}
    if cfg.options.get("ratio") and cfg.formal_order >= 20:
        payload["ratio_analysis"] = singular_exponent(coeffs, g=g).to_json()
    path = _write_json(cfg, "free_energy.json", payload)
    rows = [[n, str(c), repr(float(c))] for n, c in enumerate(coeffs)]
    cp = _write_csv(cfg, "free_energy.csv", ["n", "exact", "float"], rows,
                    {"n": "power of the formal coupling", "exact": "coefficient",
                     "float": "coefficient as a float"})
    print(f"wrote {path}\nwrote {cp}")
    if "ratio_analysis" in payload:
        ra = payload["ratio_analysis"]
        print(f"t_c ~ {ra['t_c']:.6g}, exponent ~ {ra['exponent']:.4g}")


def cmd_critical(cfg):
    from .criticality import edge_exponent, find_critical, matching_tuning
    free = [f for f in cfg.options["free"].split(",") if f]
    if cfg.model in ("gaussian", "custom"):
        raise ConfigError("critical needs a family preset")
    for f in free:
        if f not in cfg.couplings:
            raise ConfigError(f"give a subcritical start value with --{f}")
    start = {f: float(cfg.couplings[f]) for f in free}
    fixed = {k: v for k, v in cfg.couplings.items() if k not in free}
    cp = find_critical(cfg.model, free, fixed=fixed, start=start, tol=min(cfg.tol, 1e-12))
    slope = edge_exponent(cp.solution, cp.edge)
    payload = {"critical_point": cp.to_json(), "edge_exponent": slope}
    if cfg.options.get("match") and cfg.model.startswith("single-"):
        m = matching_tuning(cfg.model.replace("single-", ""),
                            {k: v for k, v in cp.couplings.items() if k != "t2"},
                            single_solution=cp.solution)
        payload["matching"] = m.to_json()
    path = _write_json(cfg, "critical.json", payload)
    print(f"wrote {path}")
    print("couplings: " + ", ".join(f"{k}={v:.12g}" for k, v in cp.couplings.items()))
    print(f"gamma_c={cp.gamma_c:.12g} edge exponent={slope:.4f} model={cp.minimal_model}")
    if "matching" in payload:
        print("matched Dirac couplings: " + ", ".join(
            f"{k}={v:.12g}" for k, v in payload["matching"]["couplings"].items()))
    if cfg.check and abs(slope - 1.5) > 0.05:
        raise CheckFailed(f"edge exponent {slope:.4f} is not 3/2")


def _grid(spec):
    try:
        a, b, n = spec.split(":")
        return np.linspace(float(a), float(b), int(n))
    except ValueError:
        raise ConfigError(f"grid must be start:stop:count, got {spec!r}") from None


def cmd_phase_diagram(cfg):
    from .criticality import PHASE_COLUMNS, PHASE_COLUMN_DOCS, quartic_phase_diagram, _fmt
    if cfg.model != "quartic":
        raise ConfigError("the phase diagram is implemented for the quartic model")
    grid = _grid(cfg.options["t4_grid"])
    rows = quartic_phase_diagram(grid)
    path = _write_csv(cfg, "phase_diagram.csv", PHASE_COLUMNS,
                      [[_fmt(r[c]) for c in PHASE_COLUMNS] for r in rows], PHASE_COLUMN_DOCS)
    print(f"wrote {path} ({len(rows)} rows)")
    bad = [r for r in rows if r["t2_matching"] == r["t2_matching"]
           and abs(r["t2_matching"] - r["t2_matching_closed_form"]) > 1e-8]
    if cfg.check and bad:
        raise CheckFailed(f"{len(bad)} matching rows disagree with the closed form")


def cmd_painleve(cfg):
    from .criticality import painleve_series
    s = painleve_series(cfg.options["order"])
    res = s.residual()
    path = _write_json(cfg, "painleve.json", {**s.to_json(), "residual": [str(r) for r in res]})
    print(f"wrote {path}")
    for k, a in enumerate(s.coefficients):
        print(f"a_{k} = {a}")
    ok = all(r == 0 for r in res)
    print("substitution residual exactly zero" if ok else "nonzero substitution residual")
    if cfg.check and not ok:
        raise CheckFailed("Painleve residual is not zero")


def cmd_mc(cfg):
    from .montecarlo import MCRun, compare_density, metropolis_sample
    from .spectral import density
    o = cfg.options
    p = build_potential(cfg)
    run = MCRun(N=o["N"], sweeps=o["sweeps"], burn_in=o["burn_in"], chains=o["chains"],
                seed=cfg.seed, step_scale=o["step_scale"])
    res = metropolis_sample(p, run)
    payload = {"result": res.to_json()}
    report = None
    try:
        sol = _solve(cfg.__class__(**{**asdict(cfg), "mode": "numeric"}), p)
        report = compare_density(res, density(sol, allow_negative=True))
        payload["comparison"] = report.to_json()
        payload["analytic_moments"] = {str(k): float(v) for k, v in sol.moments(4).items()}
    except DiracEnsError as e:
        payload["comparison"] = {"skipped": str(e)}
    path = _write_json(cfg, "mc.json", payload)
    docs = {"left": "bin left edge", "right": "bin right edge", "density": "normalized count"}
    for tag, dirac in (("H", False), ("D", True)):
        e, h = res.histogram(bins=o.get("bins", 60), dirac=dirac)
        _write_csv(cfg, f"mc_hist_{tag}.csv", ["left", "right", "density"],
                   [[repr(float(e[i])), repr(float(e[i + 1])), repr(float(h[i]))]
                    for i in range(len(h))], docs)
    print(f"wrote {path}")
    m2, se2 = res.moments[2]
    print(f"T2 = {m2:.6f} +- {se2:.6f}  acceptance={res.acceptance:.3f}  "
          f"identity rel err={res.identity_max_rel:.2e}")
    if report is not None:
        print(f"KS = {report.ks:.4f}  z = {report.z_scores}  passed={report.passed}")
    if cfg.check and (report is None or not report.passed):
        raise CheckFailed("Monte Carlo comparison failed")


def cmd_oracle(cfg):
    from .wick import wick_series
    p = build_potential(cfg)
    o = cfg.options
    obs = tuple(int(x) for x in o["observable"].split(",") if x.strip()) if o["observable"] else ()
    order = cfg.formal_order if cfg.formal_order is not None else o["order"]
    s = wick_series(obs, p, order, connected=not o["disconnected"], method=o["method"])
    n = len(obs)
    rows, coeffs = [], []
    for v, lp in enumerate(s):
        terms = {str(k): str(c) for k, c in sorted(lp.terms.items())}
        gvals = {str(g): str(lp.coeff(2 - 2 * g - n)) for g in range(o["gmax"] + 1)}
        coeffs.append({"order": v, "laurent_in_N": terms, "genus": gvals})
        rows.append([v] + [gvals[str(g)] for g in range(o["gmax"] + 1)])
    path = _write_json(cfg, "oracle.json", {"observable": list(obs), "coefficients": coeffs})
    print(f"wrote {path}")
    for r in rows:
        print(f"eps^{r[0]}: " + "  ".join(f"g{g}={x}" for g, x in enumerate(r[1:])))


def cmd_sde_check(cfg):
    from .dirac import BitracialPotential
    from .loop_equations import CorrelatorTable, sde_sweep
    d = json.loads(Path(cfg.options["table"]).read_text())
    if "table" not in d or "solution" not in d:
        raise ConfigError("expected a solution.json or correlators.json artifact")
    p = BitracialPotential.from_dict(d["solution"]["potential"])
    tab = CorrelatorTable.from_json(d["table"])
    rep = sde_sweep(p, tab, gmax=cfg.options["gmax"], lmax=cfg.options["lmax"], tol=cfg.tol)
    path = _write_json(cfg, "sde_report.json", {"source": cfg.options["table"],
                                                 "report": rep.to_json()})
    print(f"wrote {path}")
    print(f"max |residual| = {rep.max_abs:.3e} over {rep.checked} equations "
          f"({len(rep.skipped)} outside the table)")
    if not rep.passed:
        raise CheckFailed("SDE residual above tolerance")


COMMANDS = {
    "solve": cmd_solve, "correlators": cmd_correlators, "free-energy": cmd_free_energy,
    "critical": cmd_critical, "phase-diagram": cmd_phase_diagram, "painleve": cmd_painleve,
    "mc": cmd_mc, "oracle": cmd_oracle, "sde-check": cmd_sde_check,
}


# --- parser ---------------------------------------------------------------------------

def build_parser():
    glob = argparse.ArgumentParser(add_help=False)
    glob.add_argument("--mode", default=None, help="numeric | formal:<order>")
    glob.add_argument("--tol", type=float, default=None)
    glob.add_argument("--seed", type=int, default=None)
    glob.add_argument("--out", default=None, help="output directory (default: out)")
    glob.add_argument("--config", default=None, help="JSON file with RunConfig keys")
    glob.add_argument("--check", action="store_true", default=None,
                      help="exit 4 when the acceptance gate fails")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--model", default=None, help="preset: " + ", ".join(PRESETS))
    for c in COUPLING_FLAGS:
        model.add_argument(f"--{c}", type=_coupling, default=None)
    model.add_argument("--dirac-terms", default=None, help="free-form Dirac terms 'l:c,...'")
    model.add_argument("--single-terms", default=None,
                       help="free-form single-trace t_i 'i:c,...' (2 sets the Gaussian term)")

    ap = argparse.ArgumentParser(prog="diracens", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[glob, model])
    s.add_argument("--lmax", type=int, default=8)
    s.add_argument("--grid", type=int, default=401)

    s = sub.add_parser("correlators", parents=[glob, model])
    s.add_argument("--gmax", type=int, default=1)
    s.add_argument("--nmax", type=int, default=2)
    s.add_argument("--lmax", type=int, default=8)

    s = sub.add_parser("free-energy", parents=[glob, model])
    s.add_argument("--genus", type=int, default=0, choices=(0, 1))
    s.add_argument("--ratio", action="store_true", help="ratio analysis (needs order >= 20)")

    s = sub.add_parser("critical", parents=[glob, model])
    s.add_argument("--free", default="t4", help="comma-separated free couplings")
    s.add_argument("--match", action="store_true", help="also tune the matched Dirac couplings")

    s = sub.add_parser("phase-diagram", parents=[glob, model])
    s.add_argument("--t4-grid", default="-0.08:0.5:100")

    s = sub.add_parser("painleve", parents=[glob])
    s.add_argument("--order", type=int, default=6)

    s = sub.add_parser("mc", parents=[glob, model])
    s.add_argument("--N", type=int, default=32)
    s.add_argument("--sweeps", type=int, default=200_000)
    s.add_argument("--burn-in", type=int, default=2_000)
    s.add_argument("--chains", type=int, default=4)
    s.add_argument("--step-scale", type=float, default=1.0)
    s.add_argument("--bins", type=int, default=60)

    s = sub.add_parser("oracle", parents=[glob, model])
    s.add_argument("--observable", default="2", help="trace powers, e.g. '2,2'; empty for log Z")
    s.add_argument("--order", type=int, default=3)
    s.add_argument("--gmax", type=int, default=1)
    s.add_argument("--disconnected", action="store_true")
    s.add_argument("--method", default="pairings", choices=("pairings", "recursion"))

    s = sub.add_parser("sde-check", parents=[glob])
    s.add_argument("--table", required=True, help="solution.json or correlators.json")
    s.add_argument("--gmax", type=int, default=1)
    s.add_argument("--lmax", type=int, default=8)
    return ap


_GLOBAL = ("mode", "tol", "seed", "out", "check")


def resolve_config(args):
    """Defaults < --config file < explicit flags."""
    base = {}
    if args.config:
        base = load_config_file(args.config)
    cfg = RunConfig(command=args.command)
    for k, v in base.items():
        if k == "couplings":
            v = {c: Fraction(str(x)) for c, x in v.items()}
        setattr(cfg, k, v)
    for k in _GLOBAL:
        v = getattr(args, k, None)
        if v is not None:
            setattr(cfg, k, v)
    if getattr(args, "model", None):
        cfg.model = args.model
    for c in COUPLING_FLAGS:
        v = getattr(args, c, None)
        if v is not None:
            cfg.couplings[c] = v
    for k in ("dirac_terms", "single_terms"):
        if getattr(args, k, None):
            setattr(cfg, k, getattr(args, k))
    if cfg.dirac_terms or cfg.single_terms:
        cfg.model = "custom"
    skip = set(_GLOBAL) | {"command", "config", "model", "dirac_terms", "single_terms",
                           *COUPLING_FLAGS}
    opts = dict(cfg.options)
    opts.update({k: v for k, v in vars(args).items() if k not in skip})
    cfg.options = opts
    return cfg.validate()


def _threads():
    n = os.environ.get("DIRACENS_NUM_THREADS")
    if not n:
        return
    try:
        import numba
        numba.set_num_threads(int(n))
    except (ImportError, ValueError):
        pass


def _glue_negative_values(argv):
    # '--t4-grid -0.08:0.5:100' would otherwise read the grid as a flag
    out, it = [], iter(argv)
    for a in it:
        if a in ("--t4-grid", "--t2", "--t3", "--t4", "--t6"):
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


def main(argv=None):
    ap = build_parser()
    argv = _glue_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else 0
    _threads()
    try:
        cfg = resolve_config(args)
        COMMANDS[cfg.command](cfg)
    except CheckFailed as e:
        print(f"check failed: {e}", file=sys.stderr)
        return EXIT_CHECK
    except (ConfigError, json.JSONDecodeError, FileNotFoundError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DiracEnsError as e:
        print(f"solver failure ({type(e).__name__}): {e}", file=sys.stderr)
        return EXIT_SOLVER
    return 0


if __name__ == "__main__":
    sys.exit(main())
