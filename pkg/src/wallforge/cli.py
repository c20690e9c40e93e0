"""Command-line front end: ``wallforge {solve,certify,asympt,sweep,strip2d}``.

Settings come from built-in defaults, then an optional JSON config file
(``--config``), then flags; later sources win. Exit codes: 0 success,
1 a certificate or check failed, 2 invalid input or solver error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import asymptotics, certifier, grid1d, model, solver1d, strip2d
from .errors import IncompatibleParams, WallforgeError, WrongRegime
from .model import Params, Regime

log = logging.getLogger("wallforge")

DEFAULT_ALPHAS = (0.5, 1.0, 2.0, 4.0, 8.0)
DEFAULT_RATIOS = (0.05, 0.2, 0.4)
# default interval and spacing, in units of the slow decay length 1/lambda_minus
R_DECAY_LENGTHS = 40.0
H_DECAY_LENGTHS = 0.01
# constant regime: Neumann relaxation domain
CONSTANT_R = 10.0
CONSTANT_H = 0.05
GUESS_RANGE = (0.2, 1.5)
WORKERS_ENV = "WALLFORGE_WORKERS"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    alpha: Optional[float] = None
    omega: Optional[float] = None
    R_schedule: Optional[tuple] = None
    h: Optional[float] = None
    guess_steepness: Optional[float] = None
    output_dir: str = "."
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    # sweep
    points: Optional[tuple] = None
    alphas: Optional[tuple] = None
    ratios: Optional[tuple] = None
    omegas: Optional[tuple] = None
    workers: Optional[int] = None
    # strip
    L_prime: float = 4.0
    n_prime: int = 64
    n_N: int = 800
    strip_R: float = 20.0
    perturbation: float = 0.05

    def params(self) -> Params:
        if self.alpha is None or self.omega is None:
            raise ConfigError("alpha and omega are required")
        return Params(self.alpha, self.omega)

    def solve_options(self) -> solver1d.SolveOptions:
        names = {f.name for f in fields(solver1d.SolveOptions)}
        picked = {k: v for k, v in self.tolerances.items() if k in names}
        return solver1d.SolveOptions(**picked)

    def certifier_overrides(self) -> dict:
        names = {f.name for f in fields(solver1d.SolveOptions)}
        return {k: v for k, v in self.tolerances.items() if k not in names}


def _floats(text) -> Optional[tuple]:
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return tuple(float(t) for t in text)
    text = str(text).strip()
    if not text:
        return ()
    return tuple(float(t) for t in text.split(","))


def _points(value) -> Optional[tuple]:
    """``[[alpha, omega], ...]`` from JSON or ``"a:w,a:w"`` from a flag."""
    if value is None:
        return None
    if isinstance(value, str):
        value = [item.split(":") for item in value.split(",") if item.strip()]
    out = []
    for item in value:
        if len(item) != 2:
            raise ConfigError(f"grid point needs alpha and omega, got {item!r}")
        out.append((float(item[0]), float(item[1])))
    return tuple(out)


_TUPLE_KEYS = {"R_schedule": _floats, "alphas": _floats, "ratios": _floats,
               "omegas": _floats, "points": _points}


def build_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        values.update(loaded)
    for name in (f.name for f in fields(RunConfig)):
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for key, conv in _TUPLE_KEYS.items():
        if key in values:
            values[key] = conv(values[key])
    try:
        cfg = RunConfig(**values)
        tol_names = set(certifier.TOLERANCES) | {f.name for f in fields(solver1d.SolveOptions)}
        bad = sorted(set(cfg.tolerances) - tol_names)
        if bad:
            raise ConfigError(f"unknown tolerance keys: {', '.join(bad)}")
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


# ---------------------------------------------------------------------------
# shared pipeline pieces


def default_schedule(p: Params) -> solver1d.ContinuationSchedule:
    lam = model.decay_exponents(p)[0]
    R = R_DECAY_LENGTHS / lam
    return solver1d.ContinuationSchedule((R / 8, R / 4, R / 2, R), H_DECAY_LENGTHS / lam)


def schedule_for(cfg: RunConfig, p: Params) -> solver1d.ContinuationSchedule:
    if cfg.R_schedule is None and cfg.h is None:
        return default_schedule(p)
    base = default_schedule(p)
    R_values = cfg.R_schedule if cfg.R_schedule is not None else base.R_values
    h = cfg.h if cfg.h is not None else base.target_h
    return solver1d.ContinuationSchedule(R_values, h)


def _require_wall(p: Params) -> None:
    if p.regime is Regime.CONSTANT_ONLY:
        raise WrongRegime(
            f"ConstantOnly regime (omega/alpha = {p.ratio:.6g} >= 1/2): no domain wall exists"
        )


def solve_wall(cfg: RunConfig, p: Params, steepness=None, trace=None) -> grid1d.Profile:
    _require_wall(p)
    sched = schedule_for(cfg, p)
    k = steepness if steepness is not None else cfg.guess_steepness
    return solver1d.continue_in_R(p, sched, cfg.solve_options(), steepness=k, trace=trace)[-1]


def fit_record(p: Params, prof: grid1d.Profile) -> dict:
    eq = model.equilibria(p)
    if p.regime is Regime.OMEGA_ZERO:
        return asymptotics.omega_zero_asymptotics(p.alpha, prof).to_record()
    ld = model.linear_data(p)
    fit = asymptotics.fit_decay(grid1d.recenter(prof, eq), eq, ld)
    return fit.to_record(p.alpha, p.omega, prof.grid.R, prof.grid.h, ld)


def relax_constant(cfg: RunConfig, p: Params, seed: int) -> grid1d.Profile:
    grid = grid1d.Grid.from_spacing(CONSTANT_R, CONSTANT_H)
    rng = np.random.default_rng(seed)
    guess = grid1d.Profile(
        grid, rng.uniform(*GUESS_RANGE, grid.n_nodes), rng.uniform(*GUESS_RANGE, grid.n_nodes)
    )
    return solver1d.relax_neumann(p, grid, guess, cfg.solve_options())


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n")


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fail(err: Exception) -> int:
    print(f"{type(err).__name__}: {err}", file=sys.stderr)
    return 2


# ---------------------------------------------------------------------------
# commands


def cmd_solve(cfg: RunConfig) -> int:
    try:
        p = cfg.params()
        trace: list = []
        try:
            prof = solve_wall(cfg, p, trace=trace)
        finally:
            if trace:
                out = _outdir(cfg)
                lines = [solver1d.TRACE_HEADER] + [str(t) for t in trace]
                (out / "trace.txt").write_text("\n".join(lines) + "\n")
    except (WallforgeError, ConfigError, ValueError) as err:
        return _fail(err)
    grid1d.write_csv(prof, _outdir(cfg) / "profile.csv")
    log.info("solved R=%g h=%g", prof.grid.R, prof.grid.h)
    return 0


def _read_profile(path) -> grid1d.Profile:
    try:
        return grid1d.read_csv(path)
    except (OSError, ValueError, StopIteration) as exc:
        raise ConfigError(f"cannot read profile {path}: {exc}") from exc


def cmd_certify(cfg: RunConfig, profile_path, partner_path=None) -> int:
    try:
        p = cfg.params()
        prof = _read_profile(profile_path)
        partner = _read_profile(partner_path) if partner_path else None
        with certifier.overridden_tolerances(cfg.certifier_overrides()):
            if p.regime is Regime.CONSTANT_ONLY:
                cert = certifier.certify_constant(p, prof)
            else:
                eq = model.equilibria(p)
                if not prof.has_dirichlet_data(eq):
                    raise IncompatibleParams(
                        f"profile end values do not match (a, b) = ({eq.a:.17g}, {eq.b:.17g}) "
                        f"for alpha={p.alpha:g}, omega={p.omega:g}"
                    )
                cert = certifier.certify_wall(p, prof, partner=partner)
    except (WallforgeError, ConfigError, KeyError, ValueError) as err:
        return _fail(err)
    (_outdir(cfg) / "certificate.json").write_text(cert.to_json())
    if cert.overall_pass:
        return 0
    for rec in cert.failing():
        print(f"FAILED {rec.name}: measured {rec.measured} target {rec.target}", file=sys.stderr)
    return 1


def cmd_asympt(cfg: RunConfig, profile_path=None) -> int:
    try:
        p = cfg.params()
        _require_wall(p)
        prof = _read_profile(profile_path) if profile_path else solve_wall(cfg, p)
        record = fit_record(p, prof)
    except (WallforgeError, ConfigError, ValueError) as err:
        return _fail(err)
    _write_json(_outdir(cfg) / "fit.json", record)
    return 0


def sweep_points(cfg: RunConfig) -> list:
    """Ordered, deduplicated ``(alpha, omega)`` pairs of the sweep."""
    if cfg.points is not None:
        pts = list(cfg.points)
    else:
        alphas = cfg.alphas if cfg.alphas is not None else DEFAULT_ALPHAS
        if cfg.omegas is not None:
            pts = [(a, w) for a in alphas for w in cfg.omegas]
        else:
            ratios = cfg.ratios if cfg.ratios is not None else DEFAULT_RATIOS
            pts = [(a, a * r) for a in alphas for r in ratios]
    unique = sorted(set(pts))
    if len(unique) < len(pts):
        log.warning("dropped %d duplicate grid points", len(pts) - len(unique))
    return unique


def run_point(cfg: RunConfig, alpha: float, omega: float) -> dict:
    """Solve, certify and fit one parameter point; errors are recorded, not raised."""
    rec = {"alpha": alpha, "omega": omega, "status": "completed", "error": None,
           "certificate": None, "fit": None}
    try:
        p = Params(alpha, omega)
        rec["regime"] = p.regime.value
        with certifier.overridden_tolerances(cfg.certifier_overrides()):
            if p.regime is Regime.CONSTANT_ONLY:
                prof = relax_constant(cfg, p, cfg.seed)
                rec["certificate"] = certifier.certify_constant(p, prof).to_dict()
                return rec
            prof = solve_wall(cfg, p)
            k = cfg.guess_steepness or solver1d.default_steepness(p)
            partner = solve_wall(cfg, p, steepness=2.0 * k)
            rec["certificate"] = certifier.certify_wall(p, prof, partner=partner).to_dict()
        try:
            rec["fit"] = fit_record(p, prof)
        except WallforgeError as err:
            rec["fit"] = {"error": f"{type(err).__name__}: {err}"}
    except (WallforgeError, ValueError) as err:
        rec["status"] = "error"
        rec["error"] = f"{type(err).__name__}: {err}"
    return rec


def _run_point_star(job):
    return run_point(*job)


def worker_count(cfg: RunConfig) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from exc
    elif cfg.workers is not None:
        n = cfg.workers
    else:
        n = os.cpu_count() or 1
    if n < 1:
        raise ConfigError(f"worker count must be positive, got {n}")
    return n


def cmd_sweep(cfg: RunConfig) -> int:
    try:
        pts = sweep_points(cfg)
        n_workers = min(worker_count(cfg), max(len(pts), 1))
    except (ConfigError, ValueError) as err:
        return _fail(err)
    jobs = [(cfg, a, w) for a, w in pts]
    if n_workers == 1 or len(jobs) <= 1:
        results = [_run_point_star(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            # map keeps submission order, so the merge is independent of timing
            results = list(pool.map(_run_point_star, jobs))
    _write_json(_outdir(cfg) / "sweep.json", results)
    n_err = sum(r["status"] != "completed" for r in results)
    n_fail = sum(
        r["certificate"] is not None and not r["certificate"]["overall_pass"] for r in results
    )
    log.info("%d points, %d errors, %d failed certificates", len(results), n_err, n_fail)
    return 0 if n_err == 0 else 1


def cmd_strip2d(cfg: RunConfig) -> int:
    try:
        p = cfg.params()
        grid = strip2d.StripGrid(cfg.L_prime, cfg.strip_R, cfg.n_prime, cfg.n_N)
        prof = solver1d.solve_on_grid(p, grid.line, cfg.solve_options())
        fld = strip2d.relax_strip(p, grid, cfg.perturbation, cfg.seed, profile=prof)
        report = strip2d.analyze(p, fld, prof)
    except (WallforgeError, ConfigError, ValueError) as err:
        return _fail(err)
    out = _outdir(cfg)
    strip2d.write_csv(fld, out / "field.csv")
    summary = {"alpha": p.alpha, "omega": p.omega, "seed": cfg.seed,
               "iterations": fld.iterations, "residual": fld.residual, **report.to_dict()}
    _write_json(out / "strip.json", summary)
    print(json.dumps(summary))
    return 0 if report.passed() else 1


# ---------------------------------------------------------------------------
# argument parsing


def _common(sub: argparse.ArgumentParser, params=True):
    sub.add_argument("--config", help="JSON config file; flags override its entries")
    if params:
        sub.add_argument("--alpha", type=float)
        sub.add_argument("--omega", type=float)
        sub.add_argument("--R", dest="R_schedule", help="comma-separated continuation schedule")
        sub.add_argument("--h", type=float, help="target grid spacing")
        sub.add_argument("--steepness", dest="guess_steepness", type=float,
                         help="steepness of the tanh initial guess")
    sub.add_argument("--out", dest="output_dir", help="output directory")
    sub.add_argument("--seed", type=int)
    sub.add_argument("-v", "--verbose", action="count", default=0)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wallforge", description=__doc__.splitlines()[0])
    subs = ap.add_subparsers(dest="command", required=True)

    _common(subs.add_parser("solve", help="continue a domain wall to the final interval"))

    sp = subs.add_parser("certify", help="certify a profile.csv")
    _common(sp)
    sp.add_argument("--profile", required=True)
    sp.add_argument("--partner", help="independent solve for the sliding check")

    sp = subs.add_parser("asympt", help="fit tail rates and amplitudes")
    _common(sp)
    sp.add_argument("--profile", help="profile.csv to fit (solved when omitted)")

    sp = subs.add_parser("sweep", help="solve, certify and fit over a parameter grid")
    _common(sp)
    sp.add_argument("--alphas")
    sp.add_argument("--ratios", help="omega/alpha values")
    sp.add_argument("--omegas")
    sp.add_argument("--points", help="explicit pairs alpha:omega,alpha:omega")
    sp.add_argument("--workers", type=int)

    sp = subs.add_parser("strip2d", help="relax a perturbed wall on a periodic strip")
    _common(sp, params=False)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--omega", type=float)
    sp.add_argument("--L-prime", dest="L_prime", type=float)
    sp.add_argument("--n-prime", dest="n_prime", type=int)
    sp.add_argument("--n-N", dest="n_N", type=int)
    sp.add_argument("--R", dest="strip_R", type=float)
    sp.add_argument("--perturbation", type=float)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = build_config(args)
    except (ConfigError, ValueError) as err:
        return _fail(err)
    if args.command == "solve":
        return cmd_solve(cfg)
    if args.command == "certify":
        return cmd_certify(cfg, args.profile, args.partner)
    if args.command == "asympt":
        return cmd_asympt(cfg, args.profile)
    if args.command == "sweep":
        return cmd_sweep(cfg)
    return cmd_strip2d(cfg)


if __name__ == "__main__":
    sys.exit(main())
