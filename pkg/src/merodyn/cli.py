"""Command-line front end.

Complex numbers are written ``re,im`` on the command line and ``[re, im]`` in
JSON.  Every result goes to standard output as one JSON record per line; a
failure writes one JSON error record to standard error.

Negative values need the ``--flag=value`` form, e.g. ``--seed=-2,0``.

Exit codes: 0 success, 1 a verify check or file I/O failed, 2 usage error
(including unknown families and bad seeds), 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import render as R
from . import shell as S
from . import special as SP
from .errors import (BadSeed, FamilyHasNoPoles, NumericalFailure, ParameterSingularity, Stalled,
                     UnknownFamily)
from .families import get_family, parse_complex
from .orbit import DEFAULT_BUDGET, IterationBudget, Status, iterate_free_av
from .verify import SUITES, run_suite

COMMANDS = ("render", "solve", "probe", "ray", "boundary", "verify")
ACTIONS = {"solve": ("vc", "mis"), "probe": ("density",), "verify": SUITES}
IMAGE_SUFFIXES = (".ppm", ".png")
EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

_COMPLEX_FIELDS = ("center", "guess", "at", "seed")


class UsageError(Exception):
    pass


@dataclass
class JobConfig:
    command: str
    family_id: str | None = None
    action: str | None = None
    center: complex | None = None
    width: float | None = None
    height: float | None = None
    resolution: tuple | None = None
    guess: complex | None = None
    p: int | None = None
    pole: int | None = None
    m: int | None = None
    n: int | None = None
    sv_index: int = 0
    at: complex | None = None
    radii: tuple | None = None
    p_max: int = 6
    seed: complex | None = None
    theta: float | None = None
    tmin: float = -12.0
    dt_max: float | None = None
    level: float | None = None
    budget: IterationBudget = DEFAULT_BUDGET
    out: str | None = None
    palette: R.Palette | None = None
    threads: int | None = None
    bless: bool = False

    def validate(self) -> "JobConfig":
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        allowed = ACTIONS.get(self.command)
        if allowed is not None and self.action not in allowed:
            raise UsageError(f"{self.command}: action must be one of {', '.join(allowed)}")
        if self.command != "verify":
            if self.family_id is None:
                raise UsageError(f"{self.command} needs --family")
            get_family(self.family_id)  # raises UnknownFamily
        for f in fields(self):
            v = getattr(self, f.name)
            vals = []
            if isinstance(v, (int, float, complex)) and not isinstance(v, bool):
                vals = [complex(v)]
            elif isinstance(v, tuple):
                vals = [complex(x) for x in v]
            for c in vals:
                if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                    raise UsageError(f"{f.name} must be finite, got {v!r}")
        if self.threads is not None and self.threads < 1:
            raise UsageError("--threads must be >= 1")
        return self

    def to_dict(self) -> dict:
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in _COMPLEX_FIELDS and v is not None:
                v = [v.real, v.imag]
            elif f.name == "budget":
                v = asdict(v)
            elif f.name == "palette" and v is not None:
                v = v.to_dict()
            elif isinstance(v, tuple):
                v = list(v)
            d[f.name] = v
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "JobConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise UsageError(f"unknown config fields: {sorted(extra)}")
        d = dict(d)
        for k in _COMPLEX_FIELDS:
            if d.get(k) is not None:
                re, im = d[k]
                d[k] = complex(float(re), float(im))
        if "budget" in d:
            d["budget"] = IterationBudget.from_dict(d["budget"])
        if d.get("palette") is not None:
            d["palette"] = R.Palette.from_dict(d["palette"])
        if d.get("resolution") is not None:
            d["resolution"] = tuple(int(x) for x in d["resolution"])
        if d.get("radii") is not None:
            d["radii"] = tuple(float(x) for x in d["radii"])
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "JobConfig":
        return cls.from_dict(json.loads(text))


# -- argument parsing --------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _complex_arg(text):
    try:
        return parse_complex(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _res_arg(text):
    try:
        nx, ny = text.lower().split("x")
        return int(nx), int(ny)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NXxNY, got {text!r}") from None


def _radii_arg(text):
    try:
        return tuple(float(r) for r in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated radii, got {text!r}") from None


def _theta_arg(text):
    if text == "auto":
        return None
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a float or 'auto', got {text!r}") from None


def _json_or_file(text: str) -> dict:
    s = text.strip()
    if not s.startswith("{"):
        s = Path(text).read_text()
    try:
        return json.loads(s)
    except json.JSONDecodeError as exc:
        raise UsageError(f"invalid JSON: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: MERODYN_THREADS, then CPU count)")
    common.add_argument("--budget", default=None, help="iteration budget as JSON text or a JSON file")
    common.add_argument("--dump-config", action="store_true",
                        help="print the job as JSON and exit without computing")

    fam = _Parser(add_help=False)
    fam.add_argument("--family", dest="family_id", required=True)

    p = _Parser(prog="merodyn", description="Parameter planes of meromorphic families.")
    p.add_argument("--config", default=None, help="run a job stored as JSON")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    r = sub.add_parser("render", parents=[common, fam], help="classify a window of the plane")
    r.add_argument("--center", type=_complex_arg, required=True)
    r.add_argument("--width", type=float, required=True)
    r.add_argument("--height", type=float, required=True)
    r.add_argument("--res", dest="resolution", type=_res_arg, required=True)
    r.add_argument("--out", required=True, help="output path ending in .ppm, .png or .csv")
    r.add_argument("--palette", default=None, help="palette as JSON text or a JSON file")

    s = sub.add_parser("solve", help="polish special parameters")
    ssub = s.add_subparsers(dest="action", parser_class=_Parser)
    vc = ssub.add_parser("vc", parents=[common, fam], help="virtual cycle parameter")
    vc.add_argument("--p", type=int, required=True)
    vc.add_argument("--pole", type=int, default=None)
    vc.add_argument("--guess", type=_complex_arg, required=True)
    mis = ssub.add_parser("mis", parents=[common, fam], help="Misiurewicz parameter")
    mis.add_argument("--m", type=int, required=True)
    mis.add_argument("--n", type=int, required=True)
    mis.add_argument("--sv", dest="sv_index", type=int, default=0)
    mis.add_argument("--guess", type=_complex_arg, required=True)

    pr = sub.add_parser("probe", help="search disks for special parameters")
    prsub = pr.add_subparsers(dest="action", parser_class=_Parser)
    den = prsub.add_parser("density", parents=[common, fam])
    den.add_argument("--at", type=_complex_arg, required=True)
    den.add_argument("--radii", type=_radii_arg, required=True)
    den.add_argument("--p-max", dest="p_max", type=int, default=6)

    ray = sub.add_parser("ray", parents=[common, fam], help="trace an internal ray")
    ray.add_argument("--seed", type=_complex_arg, required=True)
    ray.add_argument("--theta", type=_theta_arg, default=None,
                     help="ray angle in turns (arg rho / 2 pi), or 'auto' for the seed's own")
    ray.add_argument("--tmin", type=float, default=-12.0)
    ray.add_argument("--dt-max", dest="dt_max", type=float, default=None)
    ray.add_argument("--out", required=True)

    b = sub.add_parser("boundary", parents=[common, fam], help="trace a level curve of |rho|")
    b.add_argument("--seed", type=_complex_arg, required=True)
    b.add_argument("--level", type=float, required=True)
    b.add_argument("--out", required=True)

    v = sub.add_parser("verify", parents=[common], help="run a self-check suite")
    v.add_argument("action", choices=SUITES)
    v.add_argument("--bless", action="store_true", help="regenerate the golden file first")
    return p


def parse_job(argv) -> tuple[JobConfig, bool]:
    """Turn argv into a validated job; the flag asks for a config dump."""
    ns = build_parser().parse_args(argv)
    if ns.config is not None:
        if ns.command is not None:
            raise UsageError("--config cannot be combined with a command")
        return JobConfig.from_json(Path(ns.config).read_text()).validate(), False
    if ns.command is None:
        raise UsageError("a command is required: " + ", ".join(COMMANDS))
    d = {k: v for k, v in vars(ns).items()
         if k in {f.name for f in fields(JobConfig)} and v is not None}
    budget = DEFAULT_BUDGET
    if getattr(ns, "budget", None) is not None:
        try:
            budget = IterationBudget.from_dict(_json_or_file(ns.budget))
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad budget: {exc}") from None
    d["budget"] = budget
    if getattr(ns, "palette", None) is not None:
        try:
            d["palette"] = R.Palette.from_dict(_json_or_file(ns.palette))
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad palette: {exc}") from None
    return JobConfig(**d).validate(), bool(getattr(ns, "dump_config", False))


# -- commands ----------------------------------------------------------------------

def _emit(out, record: dict):
    out.write(json.dumps(record, sort_keys=True) + "\n")


def _cx(z):
    return None if z is None else [z.real, z.imag]


def do_render(job: JobConfig, out) -> int:
    path = Path(job.out)
    suffix = path.suffix.lower()
    if suffix not in IMAGE_SUFFIXES + (".csv",):
        raise UsageError(f"--out must end in .ppm, .png or .csv, got {job.out!r}")
    fam = get_family(job.family_id)
    grid = R.render_plane(fam, R.Window(job.center, job.width, job.height), job.resolution,
                          job.budget, threads=job.threads)
    if suffix == ".csv":
        R.emit_grid(grid, path)
    else:
        R.emit_image(grid, job.palette or R.DEFAULT_PALETTE, path)
    st, per = grid.status, grid.period
    counts = {s.name: int(np.count_nonzero(st == s)) for s in Status}
    periods = np.unique(per[st == Status.ConvergedFreeCycle])
    _emit(out, {"type": "RenderResult", "out": str(path), "family": job.family_id,
                "resolution": list(job.resolution), "elapsed": grid.elapsed,
                "counts": counts, "periods": [int(k) for k in periods]})
    return EXIT_OK


def do_solve(job: JobConfig, out) -> int:
    fam = get_family(job.family_id)
    if job.action == "vc":
        hit = SP.solve_virtual_cycle(fam, job.guess, job.p, pole_index=job.pole)
    else:
        hit = SP.solve_misiurewicz(fam, job.guess, job.m, job.n, sv_index=job.sv_index)
    _emit(out, hit.to_dict())
    return EXIT_OK


def do_probe(job: JobConfig, out) -> int:
    fam = get_family(job.family_id)
    radii = list(job.radii)

    def one(r):
        return SP.density_probe(fam, job.at, [r], p_max=job.p_max)[0]

    with ThreadPoolExecutor(max_workers=R.resolve_threads(job.threads)) as pool:
        results = list(pool.map(one, radii))
    for res in results:
        _emit(out, res.to_dict())
    return EXIT_OK


def _seed_at_theta(fam, job: JobConfig) -> complex:
    if job.theta is None:
        return job.seed
    res = iterate_free_av(fam, job.seed, job.budget)
    if res.status != Status.ConvergedFreeCycle:
        raise BadSeed(f"no attracting free cycle at seed {job.seed}: {res.status.name}")
    theta0 = res.cycle.log_multiplier.imag / S.TWO_PI
    turns = (job.theta - theta0) % 1.0
    if turns == 0.0:
        return job.seed
    return S.ray_start_at_angle(fam, job.seed, turns, budget=job.budget)


def _write_csv(path: Path, header: str, rows: np.ndarray):
    try:
        np.savetxt(path, rows, delimiter=",", header=header, comments="", fmt="%.17g")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def do_ray(job: JobConfig, out) -> int:
    fam = get_family(job.family_id)
    sc = S.StepControl() if job.dt_max is None else S.StepControl(dt_max=job.dt_max)
    seed = _seed_at_theta(fam, job)
    ray = S.trace_internal_ray(fam, seed, t_min=job.tmin, step_ctrl=sc, budget=job.budget)
    arg = S._wrap(S.TWO_PI * ray.theta)
    rows = np.array([(s.t, s.lam.real, s.lam.imag, math.exp(s.t), arg, s.residual)
                     for s in ray.samples], dtype=float).reshape(-1, 6)
    _write_csv(Path(job.out), "t,re,im,abs_rho,arg_rho,residual", rows)
    landing = ray.landing
    _emit(out, {"type": "InternalRay", "out": job.out, "theta": ray.theta, "period": ray.period,
                "samples": len(ray.samples), "seed": _cx(seed),
                "landing": landing.to_dict() if landing else None})
    if landing is not None and landing.kind == "Stalled":
        raise Stalled(f"ray stalled: {landing.reason}")
    return EXIT_OK


def do_boundary(job: JobConfig, out) -> int:
    fam = get_family(job.family_id)
    tr = S.trace_boundary_level(fam, job.seed, job.level, budget=job.budget)
    pts = np.asarray(tr.points, dtype=complex)
    phi = tr.phi if tr.phi is not None else np.full(len(pts), np.nan)
    rows = np.column_stack([pts.real, pts.imag, phi]).reshape(-1, 3)
    _write_csv(Path(job.out), "re,im,phi", rows)
    _emit(out, {"type": "BoundaryTrace", "out": job.out, "level": tr.level, "closed": tr.closed,
                "points": len(pts), "stop_reason": tr.stop_reason})
    return EXIT_OK


def do_verify(job: JobConfig, out) -> int:
    checks = run_suite(job.action, threads=job.threads, bless=job.bless)
    for c in checks:
        _emit(out, c.to_dict())
    ok = all(c.passed for c in checks)
    _emit(out, {"type": "VerifySummary", "suite": job.action, "passed": ok,
                "checks": len(checks), "failed": sum(not c.passed for c in checks)})
    return EXIT_OK if ok else EXIT_FAILED


HANDLERS = {"render": do_render, "solve": do_solve, "probe": do_probe, "ray": do_ray,
            "boundary": do_boundary, "verify": do_verify}


def execute(job: JobConfig, out=None) -> int:
    return HANDLERS[job.command](job, out or sys.stdout)


def _error(err, exc: BaseException, code: int) -> int:
    rec = {"type": "Error", "error": type(exc).__name__, "message": str(exc), "exit_code": code}
    hit = getattr(exc, "hit", None)
    if hit is not None and hasattr(hit, "to_dict"):
        rec["hit"] = hit.to_dict()
    err.write(json.dumps(rec, sort_keys=True) + "\n")
    return code


def run(argv=None, out=None, err=None) -> int:
    """Parse ``argv``, run the job and return the exit code."""
    out = out or sys.stdout
    err = err or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        job, dump = parse_job(argv)
        if dump:
            out.write(job.to_json() + "\n")
            return EXIT_OK
        return execute(job, out)
    except (UsageError, UnknownFamily, BadSeed, FamilyHasNoPoles, ParameterSingularity) as exc:
        return _error(err, exc, EXIT_USAGE)
    except NumericalFailure as exc:
        return _error(err, exc, EXIT_NUMERIC)
    except (ValueError, TypeError) as exc:
        return _error(err, exc, EXIT_USAGE)
    except OSError as exc:
        return _error(err, exc, EXIT_FAILED)


def main() -> None:
    sys.exit(run())

