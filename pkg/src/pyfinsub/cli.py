"""Command line front end.

    pyfinsub scenarios
    pyfinsub validate FIG1 --samples 1000
    pyfinsub geodesic FIG2 --t1 1.8 --out geodesic.csv
    pyfinsub jacobi FIG2
    pyfinsub focal FIG2
    pyfinsub wilking SPHERE --window 0 3.5
    pyfinsub submersion FIG1
    pyfinsub verify FIG2 --check all

A scenario is a built-in name or the path of a scenario JSON file. Exit
codes: 0 on success, 1 when a check expected to hold fails or the numerics
break down, 2 on usage and configuration errors.
"""

import argparse
import dataclasses
import logging
import sys
from typing import List, Optional

import numpy as np

from . import errors
from .config import Tolerances
from .core import verifier
from .core.geodesic import integrate_geodesic
from .core.jacobi import detect_focal_points, l_jacobi_basis
from .core.metric import validate_metric
from .core.submersion import check_submersion
from .core.wilking import build_wilking_frame, transversal_conjugate_points, transversal_fundamental_solution
from .model import FORMATS, Table
from .resources import columns

logger = logging.getLogger(__name__)

COMMANDS = ('scenarios', 'validate', 'geodesic', 'jacobi', 'focal', 'wilking', 'submersion', 'verify')

SAMPLES = {'validate': 1000, 'submersion': 50, 'verify': 5}


@dataclasses.dataclass
class RunConfig:
    """Everything a run depends on; embedded in every JSON report.

    Attributes
    ----------
    command : str
        The subcommand.
    scenario : str, optional
        Built-in name or scenario file.
    tolerances : Tolerances
        Numeric constants, positive by construction.
    out : str, optional
        Output file, standard output when absent.
    format : str
        'csv' or 'json'.
    samples : int
        Sample count of the command.
    seed : int
        Seed of every random sample; equal seeds give equal samples.
    options : dict
        Command specific arguments.
    """

    command: str
    scenario: Optional[str]
    tolerances: Tolerances
    out: Optional[str] = None
    format: str = 'csv'
    samples: int = 5
    seed: int = 0
    options: dict = dataclasses.field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            'command': self.command,
            'scenario': self.scenario,
            'tolerances': self.tolerances.to_dict(),
            'out': self.out,
            'format': self.format,
            'samples': self.samples,
            'seed': self.seed,
            'options': self.options,
        }


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rtol", type=float, help="Relative tolerance of the integrator.")
    common.add_argument("--atol", type=float, help="Absolute tolerance of the integrator.")
    common.add_argument("--tolerances", metavar="PATH", help="JSON file of tolerance overrides.")
    common.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                        help="Override one tolerance, repeatable.")
    common.add_argument("--samples", type=int, help="Sample count of the command.")
    common.add_argument("--seed", type=int, default=0, help="Seed of the random samples (default: 0).")
    common.add_argument("--out", metavar="PATH", help="Write the report here instead of standard output.")
    common.add_argument("--format", choices=sorted(FORMATS), help="Report format (default: json for verify, "
                                                                   "csv otherwise).")
    common.add_argument("-v", "--verbose", action="count", default=0, help="More logging, repeatable.")
    common.add_argument("-q", "--quiet", action="store_true", help="Only log errors.")

    parser = argparse.ArgumentParser(prog="pyfinsub", description="Finsler submersion toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("scenarios", parents=[common], help="List the built-in scenarios.")
    sub.add_parser("validate", parents=[common], help="Check the metric axioms on random samples.") \
        .add_argument("scenario")

    p = sub.add_parser("geodesic", parents=[common], help="Sample a geodesic.")
    p.add_argument("scenario")
    p.add_argument("--x0", type=float, nargs="+", help="Start point, the reference fiber point by default.")
    p.add_argument("--v0", type=float, nargs="+", help="Initial velocity, the reference normal by default.")
    p.add_argument("--t1", type=float, help="End parameter, the tube radius by default.")
    p.add_argument("--points", type=int, default=101)

    for name, text in (("jacobi", "Sample the L-Jacobi basis of the reference fiber."),
                       ("focal", "Focal instants of the reference fiber.")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("scenario")
        p.add_argument("--t1", type=float, help="End parameter, the tube radius by default.")
        p.add_argument("--points", type=int, default=101)

    p = sub.add_parser("wilking", parents=[common], help="Wilking distributions and transversal conjugate points.")
    p.add_argument("scenario")
    p.add_argument("--window", type=float, nargs=2, metavar=("A", "B"))
    p.add_argument("--points", type=int, default=101)

    sub.add_parser("submersion", parents=[common], help="Check that pi maps unit balls onto unit balls.") \
        .add_argument("scenario")

    p = sub.add_parser("verify", parents=[common], help="Run the checks of a scenario.")
    p.add_argument("scenario")
    p.add_argument("--check", action="append", choices=verifier.CHECKS + ('all',),
                   help="Check to run, repeatable (default: the scenario's own list).")
    return parser


def _tolerances(args) -> Tolerances:
    tol = Tolerances.load(args.tolerances) if args.tolerances else Tolerances.load()
    overrides = {}
    for item in args.tol:
        name, sep, value = item.partition("=")
        if not sep:
            raise errors.ConfigError(f"--tol expects NAME=VALUE, got '{item}'")
        overrides[name.strip()] = value.strip()
    if args.rtol is not None:
        overrides['rtol'] = args.rtol
    if args.atol is not None:
        overrides['atol'] = args.atol
    return tol.replace(**overrides)


def _configure(args) -> RunConfig:
    options = {k: v for k, v in vars(args).items()
               if k in ('x0', 'v0', 't1', 'points', 'window', 'check') and v is not None}
    fmt = args.format or ('json' if args.command == 'verify' else 'csv')
    samples = args.samples if args.samples is not None else SAMPLES.get(args.command, 5)
    if samples < 1:
        raise errors.ConfigError(f"--samples must be positive, got {samples}")
    return RunConfig(args.command, getattr(args, 'scenario', None), _tolerances(args), args.out, fmt, samples,
                     args.seed, options)


def _reference(sc, tol: Tolerances) -> tuple:
    """(fiber, s0, unit normal field) of the scenario's reference fiber."""
    conf = sc.checks
    if 'fiber' not in conf:
        raise errors.ConfigError(f"scenario {sc.name} has no reference fiber")
    fiber = sc.leaf(conf['fiber'])
    s0 = np.asarray(conf['fiber'].get('s0', fiber.centre()), dtype=float).reshape(fiber.dim)
    field = verifier.normal_field(sc, fiber, s0, conf.get('xi'), conf.get('xi_seed'), tol)
    return fiber, s0, field


def _scenarios(cfg: RunConfig) -> tuple:
    rows = []
    for sc in verifier.builtin_scenarios():
        s = sc.summary()
        rows.append([s['name'], s['dim'], s['base_dim'], s['metric'], s['declared_base'], " ".join(s['checks']),
                     s['provenance']])
    return Table('scenarios', columns.SCENARIOS, rows), 0


def _validate(cfg: RunConfig, sc) -> tuple:
    rng = np.random.default_rng(cfg.seed)
    xs = sc.sample_points(cfg.samples, rng)
    vs = rng.normal(size=xs.shape)
    report = validate_metric(sc.metric, (xs, vs), cfg.tolerances, cfg.seed)
    d = report.to_dict()
    payload = {'validation': d}
    passed = report.passed
    osculating = verifier.scenario_osculating(sc, cfg.tolerances)
    if osculating is not None:
        payload['osculating'] = osculating.to_dict()
        passed = passed and osculating.verdict
    table = Table('validate', columns.VALIDATION, [[d[c] for c in columns.VALIDATION]], payload)
    return table, 0 if passed else 1


def _geodesic(cfg: RunConfig, sc) -> tuple:
    opts = cfg.options
    if 'x0' in opts or 'v0' in opts:
        if 'x0' not in opts or 'v0' not in opts:
            raise errors.ConfigError("--x0 and --v0 go together")
        x0, v0 = np.asarray(opts['x0'], dtype=float), np.asarray(opts['v0'], dtype=float)
    else:
        fiber, s0, field = _reference(sc, cfg.tolerances)
        x0, v0 = fiber(s0), field(s0)
    t1 = opts.get('t1', sc.tube_radius)
    geo = integrate_geodesic(sc.metric, x0, v0, (0.0, t1), cfg.tolerances)
    rows = geo.samples(np.linspace(0.0, t1, opts.get('points', 101))).tolist()
    return Table('geodesic', columns.geodesic(sc.dim), rows, {'speed_drift': geo.speed_drift}), 0


def _basis(cfg: RunConfig, sc, t1: float) -> tuple:
    fiber, s0, field = _reference(sc, cfg.tolerances)
    geo = integrate_geodesic(sc.metric, fiber(s0), field(s0), (0.0, t1), cfg.tolerances)
    return fiber, geo, l_jacobi_basis(sc.metric, fiber, s0, geo, cfg.tolerances)


def _jacobi(cfg: RunConfig, sc) -> tuple:
    t1 = cfg.options.get('t1', sc.tube_radius)
    _, geo, space = _basis(cfg, sc, t1)
    rows = []
    for t in np.linspace(0.0, t1, cfg.options.get('points', 101)):
        m = space.matrix(t)
        det = float(np.linalg.det(np.column_stack([m, geo.velocity(t)])))
        rows.append([float(t)] + m.T.reshape(-1).tolist() + [det])
    payload = {'selfadjoint_defect': space.defect(np.linspace(0.0, t1, 11))}
    return Table('jacobi', columns.jacobi(sc.dim, space.dim), rows, payload), 0


def _focal(cfg: RunConfig, sc) -> tuple:
    t1 = cfg.options.get('t1', sc.tube_radius)
    _, _, space = _basis(cfg, sc, t1)
    report = detect_focal_points(space, (0.0, t1), cfg.tolerances)
    trace = [[float(t), float(d)] for t, d in zip(report.ts, report.det)]
    return Table('focal', columns.FOCAL, [[t, m] for t, m in report.instants],
                 {'focal': report.to_dict(), 'trace': trace}), 0


def _wilking(cfg: RunConfig, sc) -> tuple:
    window = cfg.options.get('window') or sc.checks.get('wilking', {}).get('window') or [0.0, sc.tube_radius]
    a, b = sorted(float(t) for t in window)
    if a < 0:
        raise errors.ConfigError(f"wilking window must start at t >= 0, got {window}")
    fiber, _, space_W = _basis(cfg, sc, b)
    space_V = space_W.subspace(range(fiber.dim), 'V')
    frame = build_wilking_frame(space_W, space_V, (a, b), cfg.tolerances)
    solution = transversal_fundamental_solution(frame, a, cfg.tolerances)
    rows = [list(row) + [solution.determinant(row[0])]
            for row in frame.samples(np.linspace(a, b, cfg.options.get('points', 101)))]
    try:
        conjugate = [[t, m] for t, m in transversal_conjugate_points(frame, (a, b), cfg.tolerances)]
    except errors.WindowDegenerate as e:
        logger.warning("no transversal conjugate points: %s", e)
        conjugate = None
    payload = {
        'dim_V': frame.dim_V,
        'degeneracies': frame.degeneracy_instants,
        'conjugate': conjugate,
        'tangency': max([frame.tangency(sc.spec, t) for t in np.linspace(a, b, 11)
                         if sc.spec.is_regular(frame.along.position(t), cfg.tolerances)], default=None),
    }
    return Table('wilking', columns.WILKING, rows, payload), 0


def _submersion(cfg: RunConfig, sc) -> tuple:
    report = check_submersion(sc.metric, sc.spec, sc.region, cfg.samples, cfg.seed, cfg.tolerances)
    d = report.to_dict()
    failed = not report.passed and sc.expected('submersion') == 'pass'
    return Table('submersion', columns.SUBMERSION, [[d[c] for c in columns.SUBMERSION]],
                 {'submersion': d, 'expected': sc.expected('submersion')}), int(failed)


def _verify(cfg: RunConfig, sc) -> tuple:
    checks = cfg.options.get('check')
    if checks is None or 'all' in checks:
        checks = None
    results = verifier.run_checks(sc, checks, cfg.samples, cfg.seed, cfg.tolerances)
    rows = [[r.scenario, r.check, r.expected, r.status, r.defect] for r in results]
    failed = [r.check for r in results if r.failed]
    payload = {'scenario': sc.summary(), 'results': [r.to_dict() for r in results], 'failed': failed}
    return Table('verify', columns.VERIFY, rows, payload), 1 if failed else 0


HANDLERS = {
    'validate': _validate,
    'geodesic': _geodesic,
    'jacobi': _jacobi,
    'focal': _focal,
    'wilking': _wilking,
    'submersion': _submersion,
    'verify': _verify,
}


def _summary(table: Table, limit: int = 20) -> str:
    """Fixed-width rendering of the first rows."""
    def cell(v):
        return f"{v:.6g}" if isinstance(v, float) else str(v)

    rows = [[cell(v) for v in row] for row in table.rows[:limit]]
    widths = [max([len(c)] + [len(r[i]) for r in rows]) for i, c in enumerate(table.columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(table.columns, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(r, widths)) for r in rows]
    if len(table.rows) > limit:
        lines.append(f"... {len(table.rows) - limit} more rows")
    return "\n".join(lines)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    level = logging.ERROR if args.quiet else (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)

    try:
        cfg = _configure(args)
        if cfg.command == 'scenarios':
            table, code = _scenarios(cfg)
        else:
            try:
                sc = verifier.load_scenario(cfg.scenario)
            except errors.WindTooStrong as e:
                raise errors.ConfigError(f"scenario {cfg.scenario} rejected: {e}") from e
            table, code = HANDLERS[cfg.command](cfg, sc)
    except errors.ConfigError as e:
        print(f"pyfinsub: error: {e}", file=sys.stderr)
        return 2
    except (errors.FinslerError, ValueError) as e:
        logger.error("%s failed: %s", args.command, e)
        return 1

    text = FORMATS[cfg.format]().render(table, cfg.to_dict())
    if cfg.out:
        with open(cfg.out, 'w', newline='') as f:
            f.write(text)
        print(_summary(table))
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
