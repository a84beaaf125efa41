"""Command-line front end.

Coefficients are given in ascending order, ``--coeffs c1,c2,...`` meaning
F(x) = c1*x + c2*x^2 + ...; for the quartic family that is ``d,c,b,a``.
``--abc a,b,c[,d]`` is the descending alias.  CSV goes to stdout (or --out),
everything else to stderr.  Exit codes: 0 ok, 2 invalid parameters,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Sequence

import numpy as np

from .census import (
    CSV_HEADER as CYCLE_HEADER,
    census,
    epsilon_limit_check,
    hopf_probe,
    lemma1_certificate,
    parity_report,
)
from . import conserved, homoclinic, sections, svg
from .errors import InvalidParameters, NumericalFailure
from .ode import OdeConfig, PhaseState, SystemParams
from .poly import Poly, parse_coeffs

log = logging.getLogger("lienard_lab")

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _floats(text: str, name: str) -> list[float]:
    out = []
    for i, part in enumerate(text.split(","), start=1):
        try:
            out.append(float(part.strip()))
        except ValueError:
            raise InvalidParameters(f"{name}: entry {i} ({part!r}) is not a number") from None
    return out


def _poly(args) -> Poly:
    if args.abc is not None:
        vals = _floats(args.abc, "--abc")
        if len(vals) not in (3, 4):
            raise InvalidParameters("--abc takes a,b,c or a,b,c,d")
        a, b, c = vals[:3]
        d = vals[3] if len(vals) == 4 else 0.0
        return Poly.from_abcd(a, b, c, d)
    if args.coeffs is None:
        raise InvalidParameters("give the damping polynomial with --coeffs or --abc")
    return parse_coeffs(args.coeffs)


def _abcd(args) -> tuple[float, float, float, float]:
    f = _poly(args)
    if f.degree != 4:
        raise InvalidParameters(f"this command needs a quartic F, got degree {f.degree}")
    d, c, b, a = f.coeffs
    return a, b, c, d


def _params(args) -> SystemParams:
    return SystemParams(_poly(args), eps=args.eps, e=args.e)


def _config(args, base: OdeConfig) -> OdeConfig:
    return OdeConfig(
        rtol=args.rtol if args.rtol is not None else base.rtol,
        atol=args.atol if args.atol is not None else base.atol,
        t_max=args.tmax if args.tmax is not None else base.t_max,
        blowup_radius=args.blowup_radius if args.blowup_radius is not None else base.blowup_radius,
        max_steps=args.max_steps if args.max_steps is not None else base.max_steps,
        capture_radius=base.capture_radius,
        arc_damping=base.arc_damping,
    )


def _grid(args, default_samples: int) -> list[float]:
    n = args.samples if args.samples is not None else default_samples
    if args.ymin is None or args.ymax is None:
        raise InvalidParameters("give the section range with --ymin and --ymax")
    if n < 1:
        raise InvalidParameters("--samples must be positive")
    return [float(v) for v in np.linspace(args.ymin, args.ymax, n)]


def _g(v: float) -> str:
    return f"{v:.17g}"


# --- subcommands --------------------------------------------------------------

def cmd_return_map(args, out) -> None:
    params = _params(args)
    samples = sections.scan(params, _grid(args, 16), _config(args, sections.RETURN_CONFIG), args.jobs)
    out.append(sections.CSV_HEADER)
    out.extend(s.csv_row() for s in samples)


def cmd_separatrix(args, out) -> None:
    cfg = _config(args, homoclinic.SHOOT_CONFIG)
    if args.dgrid is not None:
        a, b, c, _ = _abcd(args)
        lo, hi, step = _floats(args.dgrid, "--dgrid")
        if not (step > 0 and lo <= hi):
            raise InvalidParameters("--dgrid is start,stop,step with start <= stop and step > 0")
        n = int(round((hi - lo) / step)) + 1
        grid = [lo + i * step for i in range(n)]
        scan = homoclinic.monotonic_scan(a, b, c, grid, args.tol, cfg, args.jobs)
        out.append(homoclinic.SCAN_HEADER)
        out.extend(r.csv_row() for r in scan.rows)
        for v in scan.violations:
            log.warning("monotonicity violation: %s", v)
        return
    params = _params(args)
    u = homoclinic.unstable_intersection(params, args.tol, args.xfar, cfg)
    s = homoclinic.stable_intersection(params, args.tol, args.xfar, cfg)
    out.append("branch,value,x_far,err_est")
    for r in (u, s):
        out.append(f"{r.branch},{_g(r.value)},{_g(r.x_far)},{_g(r.err_est)}")


def cmd_homoclinic(args, out) -> None:
    a, b, c, d = _abcd(args)
    if d != 0.0:
        log.warning("the linear coefficient %g is ignored: d is the unknown being solved for", d)
    res = homoclinic.find_d0(
        a, b, c, args.tol, symmetry_certificate=not args.no_certificate,
        config=_config(args, homoclinic.SHOOT_CONFIG),
    )
    if res.certificate:
        print(f"note: {res.certificate}", file=sys.stderr)
    if args.probe:
        rows = homoclinic.loop_attractivity_probe(res, args.probe)
        out.append("k,y,div_integral,status")
        out.extend(f"{r.k},{_g(r.y)},{_g(r.div_integral)},{r.status}" for r in rows)
        return
    out.append(homoclinic.HOMOCLINIC_HEADER)
    out.append(res.csv_row())


def _emit_cycles(report, out) -> None:
    out.append(CYCLE_HEADER)
    out.extend(c.csv_row() for c in report.cycles)
    log.info("no-return fraction %.3f over %d samples", report.no_return_fraction, report.n_samples)
    if report.center:
        print("note: displacement vanishes on every returned sample (center)", file=sys.stderr)
    for y in report.near_misses:
        log.warning("tangency candidate near y=%.10g did not reach zero displacement", y)


def cmd_census(args, out) -> None:
    params = _params(args)
    if args.ymin is None or args.ymax is None:
        raise InvalidParameters("give the scan range with --ymin and --ymax")
    n = args.samples if args.samples is not None else 64
    report = census(
        params, args.ymin, args.ymax, n, _config(args, sections.RETURN_CONFIG), args.jobs
    )
    _emit_cycles(report, out)


def cmd_parity(args, out) -> None:
    a, b, c, d = _abcd(args)
    n = args.samples if args.samples is not None else 64
    rep = parity_report(a, b, c, d, n, args.jobs)
    out.append("a,b,c,d,d0,count,parity,consistent")
    out.append(
        f"{_g(a)},{_g(b)},{_g(c)},{_g(d)},{_g(rep.d0)},{rep.count},{rep.parity},"
        f"{str(rep.consistent).lower()}"
    )


def cmd_hopf(args, out) -> None:
    a, b, c, d = _abcd(args)
    n = args.samples if args.samples is not None else 64
    rec = hopf_probe(a, b, c, d, n, args.jobs)
    out.append(CYCLE_HEADER)
    if rec is not None:
        out.append(rec.csv_row())


def cmd_eps_limit(args, out) -> None:
    f = _poly(args)
    eps_list = _floats(args.eps_list, "--eps-list")
    rows = epsilon_limit_check(f, eps_list, args.tol, _config(args, homoclinic.SHOOT_CONFIG))
    out.append("eps,U,S,M_plus,M_minus")
    for r in rows:
        if r.error:
            log.warning("eps=%g: %s", r.eps, r.error)
        out.append(f"{_g(r.eps)},{_g(r.u)},{_g(r.s)},{_g(r.m_plus)},{_g(r.m_minus)}")


def cmd_lemma1(args, out) -> None:
    out.append(lemma1_certificate(_poly(args)))


def cmd_conserved(args, out) -> None:
    f = _poly(args)
    start = _floats(args.start, "--start")
    if len(start) != 4:
        raise InvalidParameters("--start takes x,y,z,w")
    t_span = args.tmax if args.tmax is not None else 50.0
    cfg = _config(args, conserved.CONSERVED_CONFIG)
    traj, report = conserved.dirac_flow(
        f, conserved.State4(*start), t_span, args.mode, cfg, stride=args.stride
    )
    extra = conserved.extra_integral(f)
    out.append(conserved.CSV_HEADER)
    for row in traj:
        u = row[1:]
        ex = _g(extra[1](u)) if extra else ""
        out.append(",".join(_g(v) for v in row) + f",{_g(conserved.hamiltonian(f, u))},{ex}")
    print(
        f"H drift: initial={report.initial:.6g} max_abs={report.max_abs_drift:.3e} "
        f"relative={report.relative_drift:.3e} scaled={report.scaled_drift:.3e}",
        file=sys.stderr,
    )


def cmd_spread(args, out) -> None:
    params = _params(args)
    rows = sections.spread_bound_probe(params, _floats(args.ytilde, "--ytilde"))
    out.append("y_tilde,y1,y2,forward_ratio,backward_ratio")
    out.extend(
        f"{_g(r.y_tilde)},{_g(r.y1)},{_g(r.y2)},{_g(r.forward_ratio)},{_g(r.backward_ratio)}"
        for r in rows
    )


def cmd_portrait(args, out) -> None:
    params = _params(args)
    orbits: list[svg.Orbit] = []
    t_span = args.tmax if args.tmax is not None else 50.0
    if args.ymin is not None and args.ymax is not None:
        n = args.samples if args.samples is not None else 3
        orbits = [svg.Orbit(PhaseState(0.0, y), t_span) for y in np.linspace(args.ymin, args.ymax, n)]
    if args.homoclinic:
        a, b, c, _ = _abcd(args)
        res = homoclinic.find_d0(a, b, c)
        params = homoclinic.quartic(a, b, c, res.d0, args.eps, args.e)
        orbits.append(svg.HomoclinicLoop())
        log.info("loop at d0=%.10g through (0, %.10g)", res.d0, res.p0)
    if args.window is not None:
        window = svg.Window(*_window(args.window))
    else:
        r = max([2.0] + [2 * abs(o.start.y) for o in orbits if isinstance(o, svg.Orbit)])
        window = svg.Window(-r, r, -r, r)
    doc = svg.portrait(params, window, orbits, title=f"F(x) = {params.f}")
    if args.svg:
        with open(args.svg, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(doc)
    else:
        out.append(doc.rstrip("\n"))


def _window(text: str) -> list[float]:
    vals = _floats(text, "--window")
    if len(vals) != 4:
        raise InvalidParameters("--window takes x_min,x_max,y_min,y_max")
    return vals


# --- parser ---------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("system")
    g.add_argument("--coeffs", help="ascending coefficients c1,...,cN of F (quartic: d,c,b,a)")
    g.add_argument("--abc", help="quartic alias a,b,c[,d] for F = a x^4 + b x^3 + c x^2 + d x")
    g.add_argument("--eps", type=float, default=1.0, help="scale of the restoring term (default 1)")
    g.add_argument("--e", type=float, default=0.0, help="quadratic perturbation e x^2 in y' (default 0)")
    n = p.add_argument_group("integration")
    n.add_argument("--rtol", type=float)
    n.add_argument("--atol", type=float)
    n.add_argument("--tmax", type=float, help="time horizon")
    n.add_argument("--blowup-radius", type=float)
    n.add_argument("--max-steps", type=int)
    o = p.add_argument_group("output")
    o.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes for scans")
    o.add_argument("--out", help="write CSV here instead of stdout")
    return p


def _range_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ymin", type=float, help="lower end of the section range (y < 0)")
    p.add_argument("--ymax", type=float, help="upper end of the section range (y < 0)")
    p.add_argument("--samples", type=int, help="number of grid points")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="lienard-lab",
        description="Limit cycles, separatrices and homoclinic loops of x' = y - F(x), y' = -eps x + e x^2.",
        epilog="Coefficient order is ascending: --coeffs d,c,b,a is F = a x^4 + b x^3 + c x^2 + d x. "
        "Write --coeffs=-1,0,1 when the list starts with a minus sign.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_, fn):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        p.set_defaults(func=fn)
        return p

    p = add("portrait", "Phase portrait (SVG): graph of F, orbits, the section x=0, y<0 and the equilibrium.", cmd_portrait)
    _range_args(p)
    p.add_argument("--window", help="x_min,x_max,y_min,y_max")
    p.add_argument("--homoclinic", action="store_true", help="also draw the homoclinic loop at d0 (quartic F)")
    p.add_argument("--svg", help="SVG output path (default stdout)")

    p = add("return-map", "Poincare return map P(y), return time T and divergence integral D on the negative y-axis.", cmd_return_map)
    _range_args(p)

    p = add("separatrix", "Separatrix intersections U (unstable) and S (stable) with the negative y-axis.", cmd_separatrix)
    p.add_argument("--tol", type=float, default=1e-8, help="cutoff-doubling tolerance (default 1e-8)")
    p.add_argument("--xfar", type=float, help="initial far-field cutoff X along the graph of F")
    p.add_argument("--dgrid", help="start,stop,step: monotonicity scan of U(d), S(d) over d")

    p = add("homoclinic", "Homoclinic parameter d0 = psi(a,b,c) with U(d0) = S(d0), and loop stability.", cmd_homoclinic)
    p.add_argument("--tol", type=float, default=1e-6, help="bracket width on d (default 1e-6)")
    p.add_argument("--no-certificate", action="store_true", help="bisect even when symmetry forces d0 = 0")
    p.add_argument("--probe", type=int, metavar="K", help="emit the loop attractivity table D(y) for k = 1..K")

    p = add("census", "Limit-cycle census: fixed points of the return map with stability.", cmd_census)
    _range_args(p)

    p = add("parity", "Parity of the limit-cycle count at d against the homoclinic value d0.", cmd_parity)
    p.add_argument("--samples", type=int, help="census grid size (default 64)")

    p = add("hopf", "The small Hopf cycle of the weak focus for slightly negative d.", cmd_hopf)
    p.add_argument("--samples", type=int, help="census grid size (default 64)")

    p = add("eps-limit", "Separatrix values U(eps), S(eps) next to the half-line minima of F as eps -> 0.", cmd_eps_limit)
    p.add_argument("--eps-list", default="0.5,0.1,0.02", help="comma-separated eps values")
    p.add_argument("--tol", type=float, default=1e-8)

    add("lemma1", "Even/odd certificate ruling out closed orbits: F = E + O with O vanishing only at 0.", cmd_lemma1)

    p = add("conserved", "Lifted 4D flow with H = z(y - F) - w x; t,x,y,z,w,H and the extra integral.", cmd_conserved)
    p.add_argument("--start", required=True, help="x,y,z,w")
    p.add_argument("--stride", type=float, default=0.5, help="output time stride (default 0.5)")
    p.add_argument("--mode", choices=("hamiltonian", "variational"), default="hamiltonian")

    p = add("spread", "Spread of graph crossings |y~ - y_i| / sqrt(y~) for quartic F.", cmd_spread)
    p.add_argument("--ytilde", default="100,1000,10000", help="comma-separated heights y~ >= 100")
    return parser


def _setup_logging() -> None:
    level = LOG_LEVELS.get(os.environ.get("LIENARD_LAB_LOG", "warn").lower(), logging.WARNING)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("lienard_lab")
    root.handlers[:] = [handler]
    root.setLevel(level)
    root.propagate = False


def run(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.jobs < 1:
        print("error: --jobs must be positive", file=sys.stderr)
        return 2
    out: list[str] = []
    try:
        args.func(args, out)
    except InvalidParameters as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    text = "\n".join(out) + "\n" if out else ""
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
