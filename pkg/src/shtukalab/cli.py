"""Command-line front end.

Exit codes: 0 success, 1 demo expectation mismatch, 2 usage or input error,
3 precision or budget exhausted (the certificate is printed).
"""
from __future__ import annotations

import os
import sys
from fractions import Fraction

import click

from . import catalog, hodgepink as hp, polygon, shtuka
from .base_arith import (FieldTower, artin_schreier_solve, conway_coeffs, norm_r,
                         qth_root, reexpand_at, to_base)
from .errors import PrecisionError, ShtukaLabError
from .periodspace import classify, make_point
from .sigmamod import SigmaModule, dm_decompose, newton_polygon
from .textio import (ParseError, Report, header, load_yaml, make_base, parse_field, parse_jet,
                     parse_series, parse_weights, read_matrix, sigma_from_data)


class DemoMismatch(Exception):
    pass


_POSITIVE = ("q", "m", "D", "zprec", "P", "jobs")


def _cfg(ctx) -> dict:
    cfg = dict(ctx.find_root().obj)
    cfg.update(ctx.meta.get("overrides", {}))
    return cfg


def _check(cfg: dict):
    for k in _POSITIVE:
        if cfg[k] <= 0:
            raise click.BadParameter(f"must be positive, got {cfg[k]}", param_hint=k)
    try:
        FieldTower.for_q(cfg["q"])
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--q")


def _override(ctx, param, value):
    if value is not None and value is not False:
        ctx.meta.setdefault("overrides", {})[param.name] = value
        cfg = dict(ctx.find_root().obj or {})
        if cfg:
            cfg.update(ctx.meta["overrides"])
            _check(cfg)
    return value


def session_options(f):
    """The session flags, also accepted after the subcommand."""
    opts = [click.option("--q", "q", type=int, default=None, expose_value=False,
                         callback=_override, help="residue field size"),
            click.option("--m", "m", type=int, default=None, expose_value=False,
                         callback=_override, help="working level F_{q^m}"),
            click.option("--ram", "D", type=int, default=None, expose_value=False,
                         callback=_override, help="base uniformizer is zeta^(1/D)"),
            click.option("--zprec", type=int, default=None, expose_value=False,
                         callback=_override, help="z-adic precision"),
            click.option("--zetaprec", "P", type=int, default=None, expose_value=False,
                         callback=_override, help="zeta-adic precision in units of 1/D"),
            click.option("--seed", type=int, default=None, expose_value=False,
                         callback=_override),
            click.option("--jobs", type=int, default=None, expose_value=False,
                         callback=_override),
            click.option("--machine", is_flag=True, default=False, expose_value=False,
                         callback=_override, help="stable key=value output")]
    for o in reversed(opts):
        f = o(f)
    return f


def _emit(ctx, rep: Report):
    cfg = _cfg(ctx)
    text = rep.render()
    click.echo(text, nl=False)
    if cfg.get("out"):
        with open(cfg["out"], "w") as fh:
            fh.write(text)


def _report(ctx) -> Report:
    return Report(_cfg(ctx)["machine"])


def _base_from(ctx, data=None, q_divisible=False):
    h = header(data or {}, _cfg(ctx))
    return make_base(h, q_divisible or bool((data or {}).get("q_divisible")))


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--q", "q", type=int, default=2, show_default=True, help="residue field size")
@click.option("--m", "m", type=int, default=1, show_default=True, help="working level F_{q^m}")
@click.option("--ram", "D", type=int, default=1, show_default=True,
              help="ramification: base uniformizer is zeta^(1/D)")
@click.option("--zprec", type=int, default=40, show_default=True, help="z-adic precision")
@click.option("--zetaprec", "P", type=int, default=40, show_default=True,
              help="zeta-adic precision in units of 1/D")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--machine", is_flag=True, help="stable key=value output")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="also write the report to this file")
@click.pass_context
def cli(ctx, q, m, D, zprec, P, seed, jobs, machine, out):
    """Exact computations with sigma-modules, Hodge-Pink structures and local shtuka."""
    ctx.obj = {"q": q, "m": m, "D": D, "zprec": zprec, "P": P, "seed": seed, "jobs": jobs,
               "machine": machine, "out": out}
    _check(ctx.obj)
    ctx.obj = {"q": q, "m": m, "D": D, "zprec": zprec, "P": P, "seed": seed, "jobs": jobs,
               "machine": machine, "out": out}


# ---------------------------------------------------------------------------
# field

@cli.group()
def field():
    """Finite field tower F_{q^m}."""


@field.command("info")
@session_options
@click.pass_context
def field_info(ctx):
    cfg = _cfg(ctx)
    T = FieldTower.for_q(cfg["q"])
    F = T.level(cfg["m"])
    rep = _report(ctx)
    rep.add("p", T.p)
    rep.add("q", T.q)
    rep.add("level", cfg["m"])
    rep.add("order", F.Q)
    rep.add("degree_over_Fp", F.N)
    rep.add("modulus", list(conway_coeffs(T.p, F.N)))
    _emit(ctx, rep)


@field.command("as-solve")
@click.argument("c")
@session_options
@click.pass_context
def field_as_solve(ctx, c):
    """Solve y^q - y = c."""
    cfg = _cfg(ctx)
    T = FieldTower.for_q(cfg["q"])
    F = T.level(cfg["m"])
    y, m2 = artin_schreier_solve(parse_field(c, F), T, cfg["m"])
    rep = _report(ctx)
    rep.add("c", F.fmt(parse_field(c, F)))
    rep.add("level", m2)
    rep.add("y", T.level(m2).fmt(y))
    _emit(ctx, rep)


@field.command("qth-root")
@click.argument("a")
@session_options
@click.pass_context
def field_qth_root(ctx, a):
    cfg = _cfg(ctx)
    T = FieldTower.for_q(cfg["q"])
    F = T.level(cfg["m"])
    x = parse_field(a, F)
    rep = _report(ctx)
    rep.add("a", F.fmt(x))
    rep.add("root", F.fmt(qth_root(x, T, cfg["m"])))
    _emit(ctx, rep)


# ---------------------------------------------------------------------------
# series

@cli.group()
def series():
    """Laurent series over the base field K."""


@series.command("jet")
@click.argument("f")
@click.option("--jet", "E", type=int, default=4, show_default=True)
@session_options
@click.pass_context
def series_jet(ctx, f, E):
    """Expansion of f at z = zeta up to (z - zeta)^E."""
    T, B = _base_from(ctx)
    s = to_base(parse_series(f, B), B)
    j = reexpand_at(s, B.zeta, E)
    rep = _report(ctx)
    rep.add("E", E)
    for k, c in enumerate(j.c):
        rep.add(f"y^{k}", c)
    rep.add("ord", j.ord())
    _emit(ctx, rep)


@series.command("norm")
@click.argument("f")
@click.option("--r", "r", default="1", show_default=True, help="radius exponent (rational)")
@session_options
@click.pass_context
def series_norm(ctx, f, r):
    """Exponent of ||f||_r = max |f_i| |zeta|^(r i)."""
    T, B = _base_from(ctx)
    s = to_base(parse_series(f, B), B)
    val, exact = norm_r(s, Fraction(r))
    rep = _report(ctx)
    rep.add("r", Fraction(r))
    rep.add("norm_exponent", val)
    rep.add("exact", exact)
    _emit(ctx, rep)


# ---------------------------------------------------------------------------
# polygon

@cli.group("polygon")
def polygon_group():
    """Newton polygons written as "s1^m1 + s2^m2"."""


@polygon_group.command("sum")
@click.argument("first", metavar="P")
@click.argument("second", metavar="Q")
@session_options
@click.pass_context
def polygon_sum(ctx, first, second):
    rep = _report(ctx)
    rep.add("sum", polygon.sum_polygons(polygon.parse_polygon(first),
                                        polygon.parse_polygon(second)))
    _emit(ctx, rep)


@polygon_group.command("above")
@click.argument("first", metavar="P")
@click.argument("second", metavar="Q")
@session_options
@click.pass_context
def polygon_above(ctx, first, second):
    """Whether P lies on or above Q."""
    P, Q = polygon.parse_polygon(first), polygon.parse_polygon(second)
    rep = _report(ctx)
    same = polygon.endpoint(P) == polygon.endpoint(Q)
    rep.add("endpoints_agree", same)
    rep.add("above", polygon.lies_above(P, Q) if same else None)
    _emit(ctx, rep)


# ---------------------------------------------------------------------------
# sigma-modules

@cli.group()
def sigma():
    """sigma-modules over F_{q^m}((z))."""


def _sigma_module(ctx, path) -> SigmaModule:
    return sigma_from_data(load_yaml(path), _cfg(ctx))


def fmt_summands(summands) -> str:
    return " + ".join(f"({d},{n})×{k}" for d, n, k in summands)


@sigma.command("dm-decompose")
@click.option("--matrix", "path", required=True, type=click.Path(exists=True, dir_okay=False))
@session_options
@click.pass_context
def sigma_dm(ctx, path):
    M = _sigma_module(ctx, path)
    cfg = _cfg(ctx)
    dec = dm_decompose(M, target=min(30, cfg["zprec"]), seed=cfg["seed"])
    rep = _report(ctx)
    rep.add("seed", cfg["seed"])
    rep.add("summands", fmt_summands(dec.summands))
    rep.add("slopes", dec.slopes)
    rep.add("level", dec.level)
    rep.add("residual_prec", dec.residual_prec)
    _emit(ctx, rep)


@sigma.command("newton")
@click.option("--matrix", "path", required=True, type=click.Path(exists=True, dir_okay=False))
@session_options
@click.pass_context
def sigma_newton(ctx, path):
    M = _sigma_module(ctx, path)
    rep = _report(ctx)
    NP = newton_polygon(M)
    rep.add("slopes", NP)
    rep.add("breaks", [f"({x},{y})" for x, y in NP.breaks()])
    _emit(ctx, rep)


@sigma.command("decency")
@click.option("--matrix", "path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--s-cap", type=int, default=None)
@session_options
@click.pass_context
def sigma_decency(ctx, path, s_cap):
    M = _sigma_module(ctx, path)
    s, d = hp.find_decency(M.Phi, M.tower, s_cap or hp.default_s_cap(M.n))
    rep = _report(ctx)
    rep.add("decent", s is not None)
    rep.add("s", s)
    rep.add("d", list(d) if d else None)
    _emit(ctx, rep)


# ---------------------------------------------------------------------------
# Hodge-Pink structures

@cli.group("hp")
def hp_group():
    """Hodge-Pink structures (D, q)."""


def _hp_from_file(ctx, path) -> hp.HodgePinkStructure:
    data = load_yaml(path)
    cfg = _cfg(ctx)
    h = header(data, cfg)
    iso = sigma_from_data(data, cfg)
    T, B = make_base(h, bool(data.get("q_divisible")))
    E = int(data.get("E", h.get("E", 6)))
    if "gamma" in data:
        G = read_matrix(data["gamma"], lambda s: parse_jet(s, B, E))
        shift = int(data.get("shift", 0))
        return hp.HodgePinkStructure(iso, G, shift, B, label=data.get("label"))
    if "weights" in data:
        return hp.from_weights(iso, parse_weights(data["weights"]), B, E)
    raise ParseError(f"{path}: needs a gamma block or weights")


def _add_structure(rep, H):
    rep.add("weights", H.weights())
    rep.add("t_H", H.t_H())
    rep.add("t_H_det", H.t_H("det"))
    rep.add("t_N", H.t_N())
    rep.add("pair_degrees", list(H.pair_degrees()))


def _add_wa(rep, wa):
    rep.add("WA", wa.verdict)
    rep.add("WA_rule", wa.rule)
    if wa.witness:
        rep.add("WA_witness", {k: v for k, v in wa.witness.items() if k != "vector"})
        if "vector" in wa.witness:
            rep.add("WA_witness_vector", wa.witness["vector"])


@hp_group.command("weights")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@session_options
@click.pass_context
def hp_weights(ctx, path):
    H = _hp_from_file(ctx, path)
    rep = _report(ctx)
    _add_structure(rep, H)
    _emit(ctx, rep)


@hp_group.command("check-wa")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@session_options
@click.pass_context
def hp_check_wa(ctx, path):
    H = _hp_from_file(ctx, path)
    wa = hp.is_weakly_admissible(H)
    rep = _report(ctx)
    _add_structure(rep, H)
    _add_wa(rep, wa)
    if wa.verdict == "No":
        rep.add("witness_verified", hp.verify_wa_witness(H, wa.witness))
    _emit(ctx, rep)


@hp_group.command("check-adm")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--grid-depth", type=int, default=1, show_default=True)
@session_options
@click.pass_context
def hp_check_adm(ctx, path, grid_depth):
    H = _hp_from_file(ctx, path)
    adm = hp.is_admissible(H, grid_depth=grid_depth)
    rep = _report(ctx)
    _add_structure(rep, H)
    _add_wa(rep, adm.wa)
    rep.add("Adm", adm.verdict)
    rep.add("Adm_rule", adm.rule)
    if adm.rule == "invariant-witness":
        w = adm.witness
        rep.add("Adm_witness", {k: v for k, v in w.items() if k != "vector"})
        rep.add("Adm_witness_check", hp.verify_invariant_witness(H, w))
    _emit(ctx, rep)


# ---------------------------------------------------------------------------
# local shtuka

@cli.group("shtuka")
def shtuka_group():
    """Local shtuka A = (z - zeta)^-d A0 over K[[z]]."""


def _shtuka_from_file(ctx, path) -> shtuka.LocalShtuka:
    data = load_yaml(path)
    T, B = _base_from(ctx, data)
    A0 = read_matrix(data["A0"], lambda s: parse_series(s, B))
    return shtuka.LocalShtuka(A0, int(data.get("d", 0)), B, label=data.get("label"))


@shtuka_group.command("rigidify")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@session_options
@click.pass_context
def shtuka_rigidify(ctx, path):
    M = _shtuka_from_file(ctx, path)
    zprec = _cfg(ctx)["zprec"]
    R = shtuka.rigidify(M, zprec=min(zprec, 24))
    rep = _report(ctx)
    rep.add("det_shape", list(M.det_shape()))
    rep.add("t_power", -R.t_pow)
    rep.add("certified_prec", R.certified_prec)
    rep.add("iterations", R.iterations)
    shtuka.check_rigidification(M, R)
    rep.add("relation_holds", True)
    rep.add("integral_and_identity_mod_m", True)
    rep.add("C0", R.C0)
    _emit(ctx, rep)


@shtuka_group.command("mysterious")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--jet", "E", type=int, default=6, show_default=True)
@session_options
@click.pass_context
def shtuka_mysterious(ctx, path, E):
    """The Hodge-Pink structure attached to a rigidified local shtuka."""
    M = _shtuka_from_file(ctx, path)
    H = shtuka.mysterious_functor(M, E=E, zprec=min(_cfg(ctx)["zprec"], 24))
    rep = _report(ctx)
    _add_structure(rep, H)
    rep.add("shift", H.shift)
    rep.add("gamma", H.gamma)
    _emit(ctx, rep)


@shtuka_group.command("tate")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--zmod", "m", type=int, default=2, show_default=True)
@session_options
@click.pass_context
def shtuka_tate(ctx, path, m):
    """Galois action on the Tate module mod z^m (unramified part)."""
    M = _shtuka_from_file(ctx, path)
    T = shtuka.tate_module(M, m)
    rep = _report(ctx)
    rep.add("zmod", m)
    rep.add("solution_level", T.solution.base.m)
    rep.add("frobenius_power", T.m0)
    rep.add("action", T.action)
    rep.add("verified", shtuka.verify_tate_action(M, T))
    _emit(ctx, rep)


# ---------------------------------------------------------------------------
# period space

@cli.group()
def period():
    """Points of the period space of (b, weights)."""


@period.command("classify")
@click.option("--b", "bpath", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--weights", required=True)
@click.option("--point", "ppath", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--grid-depth", type=int, default=1, show_default=True)
@session_options
@click.pass_context
def period_classify(ctx, bpath, weights, ppath, grid_depth):
    b = _sigma_module(ctx, bpath)
    data = load_yaml(ppath)
    T, B = _base_from(ctx, data)
    w = sorted(parse_weights(weights))
    e = int(data["e"]) if "e" in data else None
    E = 2 * (e or max(max(abs(x) for x in w), 1)) + 1
    rep_m = read_matrix(data["rep"], lambda s: parse_jet(s, B, E))
    P = make_point(w, e, rep_m, B, label=data.get("label", os.path.basename(ppath)))
    r = classify(b, P, grid_depth=grid_depth)
    rep = _report(ctx)
    for k, v in r.summary().items():
        rep.add(k, v)
    rep.add("lattice_key_exponents", list(P.key[0]))
    _emit(ctx, rep)


@period.command("demo")
@click.option("--example", type=click.Choice(["8.1", "8.2", "8.3"]), required=True)
@click.option("--n", type=int, default=2, show_default=True, help="rank (8.1)")
@click.option("--d", type=int, default=2, show_default=True, help="pole order (8.2, 8.3)")
@click.option("--count", type=int, default=50, show_default=True, help="sample size (8.1)")
@click.option("--levels", type=int, default=2, show_default=True,
              help="zeta powers per chart coefficient (8.3)")
@session_options
@click.pass_context
def period_demo(ctx, example, n, d, count, levels):
    """Classify a worked family and compare with its expected verdicts."""
    cfg = _cfg(ctx)
    if example == "8.2" and d not in (2, 3):
        raise click.BadParameter("the antidiagonal family is available for d = 2, 3",
                                 param_hint="--d")
    if example == "8.3" and not 1 <= d <= 4:
        raise click.BadParameter("the diagonal family is available for 1 <= d <= 4",
                                 param_hint="--d")
    res = catalog.run_demo(example, q=cfg["q"], n=n, d=d, count=count, seed=cfg["seed"],
                           levels=levels, jobs=cfg["jobs"])
    rep = _report(ctx)
    rep.add("example", example)
    for k, v in res.params.items():
        rep.add(k, v)
    rep.add("seed", cfg["seed"])
    rep.add("points", len(res.rows))
    for i, r in enumerate(res.rows):
        rep.add(f"row{i}", f"{r.label} | expected {r.expected[0]}/{r.expected[1]} | "
                           f"got {r.got[0]}/{r.got[1]} | {'ok' if r.match else 'MISMATCH'}")
        if r.extra:
            rep.add(f"row{i}_check", r.extra)
    rep.add("mismatches", sum(not r.match for r in res.rows))
    rep.add("status", "PASS" if res.ok else "FAIL")
    _emit(ctx, rep)
    if not res.ok:
        raise DemoMismatch(example)


# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="shtukalab", standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return 2
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code if exc.exit_code != 1 else 2
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        return 2
    except DemoMismatch:
        return 1
    except PrecisionError as exc:
        click.echo(f"precision: {type(exc).__name__}: {exc}", err=True)
        click.echo(f"certificate={type(exc).__name__}: {exc}")
        return 3
    except (ShtukaLabError, ParseError, ValueError, KeyError, OSError) as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        return 2
    return 0


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
