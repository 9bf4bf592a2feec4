"""Command line front end: scenario in, CSV reports out.

Exit status 0 means the verdict is positive, 2 that it is negative, 1 that
the input was rejected.
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import random
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .correspond import CorrespondenceError, generator_bijection
from .curves import CurveError
from .exprlang import ExprError
from .flatgeom import GeometryError
from .floer import FloerError, compare_complexes, conjecture_report, differential
from .jetlab import (
    CUSP, FOLD, FirstType, HamiltonianRotation, JetError, SecondType, THETA_ANG, THETA_LAG,
    analyze, check_transversality, classify_singular_points, cusp_creation_value,
    extract_singular_locus, first_type_hamiltonian, jet_entry, numerical_jacobian, perturb,
    symplectic_defect,
)
from .scenario import ScenarioError, Scenario, load

KINDS = ("floer-compare", "quilt-report", "singular-analyze", "perturb", "selftest")
EXIT_OK, EXIT_INPUT, EXIT_NEGATIVE = 0, 1, 2


def fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (tuple, list)):
        return " ".join(fmt(x) for x in v)
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


# ---------------------------------------------------------------------------
# floer-compare and quilt-report

def _point(p):
    return f"({p[0]},{p[1]})"


def _bigon_rows(case, name, cplx, order):
    """Bigons with endpoints renumbered by triple; order[k] is the generator of triple k."""
    inv = {g: k for k, g in enumerate(order)}
    rows = []
    for b in sorted(cplx.bigons, key=lambda b: (inv[b.source], inv[b.target], b.curve1, b.curve2,
                                                 b.tau1, b.tau2)):
        rows.append((case, name, inv[b.source], inv[b.target], b.curve1, b.curve2, _point(b.deck),
                     b.area, len(b.polygon), min(p[1] for p in b.polygon)))
    return rows


BIGON_HEADER = ["case", "complex", "source", "target", "curve1", "curve2", "deck", "area",
                "polygon_vertices", "min_height"]


def _generator_rows(case, bij):
    rows = []
    for k, t in enumerate(bij.triples):
        rows.append((case, k, t.sheet, _point(t.x), t.x1[0], t.x1[1], t.x2[0], t.x2[1],
                     bij.left[k], bij.right[k], bij.quilted[k] if bij.quilted else ""))
    return rows


GEN_HEADER = ["case", "triple", "sheet", "x", "edge1", "param1", "edge2", "param2",
              "left_index", "right_index", "quilted_index"]


def _matrix_rows(case, rep):
    rows = []
    for e in rep.entries:
        if any(e.values.values()) or any(e.flagged.values()):
            rows.append((case, e.row, e.col) + tuple(e.values[k] for k in sorted(e.values))
                        + (sum(e.flagged.values()),))
    return rows


def run_floer_compare(sc: Scenario, out, seed):
    from .randgen import random_theorem_scenario
    corr = sc.correspondence()
    L1, L2 = sc.curves(corr)
    cases = [("shipped", L1, corr, L2)]
    rnd = sc.doc.get("random")
    if rnd and rnd.get("count", 0):
        rng = random.Random(seed)
        for k in range(rnd["count"]):
            a, c, b = random_theorem_scenario(rng, rnd.get("max_degree", 4), rnd.get("max_vertices", 8))
            cases.append((f"random-{k}", a, c, b))
    summary, gens, bigons, mats = [], [], [], []
    verdict = True
    for case, a, c, b in cases:
        rep = compare_complexes(a, c, b)
        bij = rep.bijection
        ok = rep.verdict == "agree" and bij.validate()
        verdict &= ok
        d2 = all(cx.d_squared_zero() for cx in rep.complexes.values())
        summary.append((case, c.domain.to_json()["basis"], len(bij.left_generators), len(bij.right_generators),
                        len(bij.quilted_generators), bij.validate(),
                        int(rep.matrices["left"].sum()), int(rep.matrices["right"].sum()),
                        int(rep.matrices["quilted"].sum()), d2, rep.verdict))
        gens += _generator_rows(case, bij)
        order = {"left": bij.left, "right": bij.right, "quilted": bij.quilted}
        for name, cx in rep.complexes.items():
            bigons += _bigon_rows(case, name, cx, order[name])
        mats += _matrix_rows(case, rep)
    write_csv(os.path.join(out, "report.csv"),
              ["case", "domain_basis", "left_generators", "right_generators", "quilted_generators",
               "bijection_valid", "left_entries", "right_entries", "quilted_entries", "d_squared_zero",
               "verdict"], summary)
    write_csv(os.path.join(out, "generators.csv"), GEN_HEADER, gens)
    write_csv(os.path.join(out, "bigons.csv"), BIGON_HEADER, bigons)
    write_csv(os.path.join(out, "matrices.csv"), ["case", "row", "col", "left", "quilted", "right", "flagged"],
              mats)
    return verdict


def run_quilt_report(sc: Scenario, out, seed):
    corr = sc.correspondence()
    if corr.is_covering:
        return run_floer_compare(sc, out, seed)
    L1, L2 = sc.curves(corr)
    tol = sc.thresholds.get("tau_fold")
    rep = conjecture_report(L1, corr, L2, Fraction(tol) if tol is not None else None)
    bij = rep.bijection
    rows = []
    for e in rep.entries:
        if not (any(e.values.values()) or any(e.flagged.values())):
            continue
        status = "no-verdict" if not e.restricted else (
            "agree" if e.values["left"] == e.values["right"] else "disagree")
        rows.append((e.row, e.col, e.values["left"], e.values["right"], e.flagged["left"],
                     e.flagged["right"], status))
    write_csv(os.path.join(out, "report.csv"),
              ["row", "col", "left", "right", "flagged_left", "flagged_right", "status"], rows)
    write_csv(os.path.join(out, "summary.csv"), ["key", "value"], [
        ("generators", len(bij)),
        ("bijection_valid", bij.validate()),
        ("left_entries", int(rep.matrices["left"].sum())),
        ("right_entries", int(rep.matrices["right"].sum())),
        ("flagged_bigons", len(rep.flagged)),
        ("disagreements", len(rep.disagreements)),
        ("verdict", rep.verdict),
        ("note", rep.note),
    ])
    write_csv(os.path.join(out, "generators.csv"), GEN_HEADER, _generator_rows("shipped", bij))
    bigons = []
    order = {"left": bij.left, "right": bij.right}
    for name, cx in rep.complexes.items():
        bigons += _bigon_rows("shipped", name, cx, order[name])
    write_csv(os.path.join(out, "bigons.csv"), BIGON_HEADER, bigons)
    return rep.verdict == "agree" and bij.validate()


# ---------------------------------------------------------------------------
# singular-analyze

def _svg(path, field, loci):
    (u0, u1), (v0, v1) = field.window
    W = 480
    sx = W / (u1 - u0)
    sy = W / (v1 - v0)

    def xy(p):
        return (p[0] - u0) * sx, W - (p[1] - v0) * sy

    det = field.det1
    step = max(1, field.n // 60)
    vmax = float(np.max(np.abs(det))) or 1.0
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{W}" viewBox="0 0 {W} {W}">']
    cw = step * (field.xs[1] - field.xs[0]) * sx
    ch = step * (field.ys[1] - field.ys[0]) * sy
    for i in range(0, field.n, step):
        for j in range(0, field.n, step):
            v = det[i, j] / vmax
            a = int(200 * min(1.0, abs(v)))
            fill = f"rgb(255,{255 - a},{255 - a})" if v > 0 else f"rgb({255 - a},{255 - a},255)"
            x, y = xy((field.xs[i], field.ys[j]))
            parts.append(f'<rect x="{x:.2f}" y="{y - ch:.2f}" width="{cw:.2f}" height="{ch:.2f}" fill="{fill}"/>')
    colours = {1: "black", 2: "green"}
    for loc in loci:
        for pts in loc.polylines:
            d = " ".join(f"{x:.2f},{y:.2f}" for x, y in map(xy, pts))
            parts.append(f'<polyline points="{d}" fill="none" stroke="{colours[loc.leg]}" stroke-width="1.5"/>')
        for c in loc.cusps:
            x, y = xy(c)
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="5" fill="none" stroke="red" stroke-width="2"/>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def _analyze_map(gmap, sc, args, legs):
    th = sc.thresholds
    theta_reg = args.theta_reg if args.theta_reg is not None else th.get("theta_reg")
    theta_cusp = args.theta_cusp if args.theta_cusp is not None else th.get("theta_cusp")
    theta_ang = args.theta_ang if args.theta_ang is not None else th.get("theta_ang", THETA_ANG)
    theta_lag = th.get("theta_lag", THETA_LAG)
    n = args.grid if args.grid is not None else sc.grid
    field = analyze(gmap, sc.window, n)
    summary = [("grid", n), ("window", [*sc.window[0], *sc.window[1]]),
               ("max_det_difference", field.max_det_difference), ("max_pullback", field.max_pullback),
               ("lagrangian", field.is_lagrangian(theta_lag))]
    if not field.is_lagrangian(theta_lag):
        summary.append(("flag", "NotLagrangian"))
    rows, loci, ok = [], [], field.is_lagrangian(theta_lag)
    for leg in legs:
        loc = extract_singular_locus(field, leg)
        rep = check_transversality(field, loc, theta_reg)
        summary += [(f"leg{leg}_contour_vertices", len(loc.vertices())), (f"leg{leg}_transverse", rep.transverse),
                    (f"leg{leg}_min_gradient", rep.min_gradient), (f"leg{leg}_theta_reg", rep.theta_reg)]
        if not loc.empty and rep.transverse:
            loc = classify_singular_points(field, loc, theta_ang, theta_cusp, theta_reg)
            summary += [(f"leg{leg}_fold", loc.count(FOLD)), (f"leg{leg}_cusp", loc.count(CUSP)),
                        (f"leg{leg}_theta_cusp", loc.thresholds["theta_cusp"]),
                        (f"leg{leg}_theta_ang", loc.thresholds["theta_ang"])]
            for c in loc.cusps:
                summary.append((f"leg{leg}_cusp_point", c))
        elif not loc.empty:
            ok = False
            summary.append(("flag", f"NotTransverse leg {leg}"))
        rows += [(leg,) + r for r in loc.rows()]
        loci.append(loc)
    return field, loci, summary, rows, ok


LOCUS_HEADER = ["leg", "polyline", "index", "x1", "x2", "det", "grad_norm", "sin_angle", "cusp_score", "tag"]


def run_singular_analyze(sc: Scenario, out, args):
    legs = sc.doc.get("legs", [1])
    field, loci, summary, rows, ok = _analyze_map(sc.smooth_map(), sc, args, legs)
    summary.append(("verdict", "positive" if ok else "negative"))
    write_csv(os.path.join(out, "summary.csv"), ["key", "value"], summary)
    write_csv(os.path.join(out, "locus.csv"), LOCUS_HEADER, rows)
    if sc.doc.get("svg") or args.svg:
        _svg(os.path.join(out, "locus.svg"), field, loci)
    return ok


# ---------------------------------------------------------------------------
# perturb

def _dets_at_origin(g):
    J = g.jacobian(0.0, 0.0)
    return (J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0], J[2, 0] * J[3, 1] - J[2, 1] * J[3, 0])


def run_perturb(sc: Scenario, out, args, seed):
    G = sc.extension()
    spec = sc.perturbation()
    summary = [("type", sc.doc["perturbation"]["type"]), ("t", spec.t)]
    if isinstance(spec, FirstType):
        g = perturb(G, spec)
        _, r, s = first_type_hamiltonian(G)
        c, d = jet_entry(G, 1, 2), jet_entry(G, 1, 3)
        c, d, r, s = (float(v.value) for v in (c, d, r, s))
        h = 1e-5
        plus, minus = _dets_at_origin(perturb(G, FirstType(h))), _dets_at_origin(perturb(G, FirstType(-h)))
        d1 = (plus[0] - minus[0]) / (2 * h)
        d2 = (plus[1] - minus[1]) / (2 * h)
        det1, det2 = _dets_at_origin(g)
        ok = abs(d1 - (c * s - r * d)) < 1e-6 and c * s - r * d != 0 and abs(d2) > 1e-6
        summary += [("c", c), ("d", d), ("r", r), ("s", s),
                    ("det_dg1_at_origin", det1), ("det_dg2_at_origin", det2),
                    ("ddt_det_dg1", d1), ("predicted_ddt_det_dg1", c * s - r * d),
                    ("ddt_det_dg2", d2), ("stated_ddt_det_dg2", r * r + s * s),
                    ("derived_ddt_det_dg2", -(r * r + s * s))]
    elif isinstance(spec, SecondType):
        g = perturb(G, spec)
        val = cusp_creation_value(g)
        ok = abs(val - 2 * float(spec.t)) < 1e-8
        summary += [("cusp_creation_value", val), ("predicted", 2 * float(spec.t)),
                    ("abs_error", abs(val - 2 * float(spec.t)))]
    else:
        phi = perturb(G, spec).flow
        n = int(sc.doc["perturbation"].get("samples", 1000))
        rng = np.random.default_rng(seed)
        h = 1e-6
        y = rng.normal(size=(n, 4))
        y /= np.linalg.norm(y, axis=1)[:, None]
        # stay a finite-difference stencil inside the rotation region
        y *= (math.sqrt(phi.eps) - 4 * h) * rng.uniform(0, 1, (n, 1)) ** 0.25
        inner = float(symplectic_defect(numerical_jacobian(phi, y, h)).max())
        z = rng.normal(size=(n, 4))
        z /= np.linalg.norm(z, axis=1)[:, None]
        z *= math.sqrt(2 * phi.eps) * rng.uniform(1.01, 3.0, (n, 1))
        ident = bool(np.array_equal(phi(z), z))
        ok = inner < 1e-8 and ident
        summary += [("eps", phi.eps), ("step", phi.step), ("samples", n),
                    ("max_symplectic_defect_inside", inner), ("identity_outside", ident)]
        summary.append(("verdict", "positive" if ok else "negative"))
        write_csv(os.path.join(out, "summary.csv"), ["key", "value"], summary)
        return ok
    write_csv(os.path.join(out, "map.csv"), ["component", "expression"],
              [(k + 1, e) for k, e in enumerate(g.strings())])
    if "window" in sc.doc or args.grid is not None:
        _, loci, s2, rows, _ = _analyze_map(g.with_params(), sc, args, sc.doc.get("legs", [1]))
        summary += [("perturbed_" + k, v) for k, v in s2]
        write_csv(os.path.join(out, "locus.csv"), LOCUS_HEADER, rows)
    summary.append(("verdict", "positive" if ok else "negative"))
    write_csv(os.path.join(out, "summary.csv"), ["key", "value"], summary)
    return ok


# ---------------------------------------------------------------------------
# selftest

def run_selftest(out, seed):
    from .exprlang import differentiate, evaluate, parse
    from .jetlab import SmoothMap2to4, singular_analysis
    from .oracle import oracle_matrix
    from .randgen import random_covering_scenario, random_pair, random_sublattice_torus, random_theorem_scenario
    rng = random.Random(seed)
    rows = []

    def check(name, fn):
        try:
            ok, detail = fn()
        except Exception as e:  # a crash is a failed check, reported rather than raised
            ok, detail = False, f"{type(e).__name__}: {e}"
        rows.append((name, ok, detail))

    def bijections():
        for _ in range(5):
            L1, c, L2 = random_covering_scenario(rng)
            if not generator_bijection(L1, c, L2).validate():
                return False, "bijection failed"
        return True, "5 scenarios"

    def theorem():
        for _ in range(5):
            L1, c, L2 = random_theorem_scenario(rng)
            if compare_complexes(L1, c, L2).verdict != "agree":
                return False, "complexes differ"
        return True, "5 comparisons"

    def oracle():
        for _ in range(5):
            T = random_sublattice_torus(rng, rng.randint(1, 3))
            a, b = random_pair(rng, T)
            cx = differential(a, b)
            if not cx.d_squared_zero() or not np.array_equal(cx.matrix, oracle_matrix(a, b)):
                return False, "enumerator and oracle differ"
        return True, "5 pairs"

    def cusp():
        g = SmoothMap2to4(["x1", "x1*x2+x2^3", "x2", "-x1^2/2-3*x1*x2^2"])
        _, loc, _ = singular_analysis(g, n=100)
        return loc.count(CUSP) == 1, f"{loc.count(CUSP)} cusp candidates"

    def gradients():
        nrng = np.random.default_rng(seed)
        for text in ("sin(x1)*x2^3 - exp(x2/3)", "x1/(2+cos(x2))", "sqrt(1+x1^2)*bump(x2)"):
            e = parse(text)
            p = nrng.uniform(-1, 1, 2)
            for k, v in enumerate(("x1", "x2")):
                d = evaluate(differentiate(e, v), {"x1": p[0], "x2": p[1]})
                q1, q2 = p.copy(), p.copy()
                q1[k] += 1e-4
                q2[k] -= 1e-4
                fd = (evaluate(e, {"x1": q1[0], "x2": q1[1]}) - evaluate(e, {"x1": q2[0], "x2": q2[1]})) / 2e-4
                if abs(fd - d) > 1e-5 * max(1.0, abs(d)):
                    return False, text
        return True, "3 expressions"

    for name, fn in (("generator bijection", bijections), ("complex identification", theorem),
                     ("bigon oracle", oracle), ("cusp model", cusp), ("derivatives", gradients)):
        check(name, fn)
    write_csv(os.path.join(out, "selftest.csv"), ["check", "passed", "detail"], rows)
    return all(r[1] for r in rows)


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="lagcorr", description="Floer complexes of curves under Lagrangian "
                                "correspondences and jets of Lagrangian immersions.")
    p.add_argument("--version", action="version", version=f"lagcorr {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        s = sub.add_parser(kind)
        s.add_argument("--scenario", required=kind != "selftest", help="scenario JSON file")
        s.add_argument("--out", default=".", help="output directory")
        s.add_argument("--seed", type=int, default=None, help="seed for randomized parts")
        s.add_argument("--grid", type=int, default=None, help="grid size n for jet fields")
        s.add_argument("--theta-reg", type=float, default=None)
        s.add_argument("--theta-cusp", type=float, default=None)
        s.add_argument("--theta-ang", type=float, default=None)
        s.add_argument("--svg", action="store_true", help="also write an SVG figure")
    return p


INPUT_ERRORS = (ScenarioError, GeometryError, CurveError, CorrespondenceError, ExprError, JetError, FloerError)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load(args.scenario) if args.scenario else None
        if sc is not None and sc.kind != args.command:
            raise ScenarioError("/kind", f"scenario kind {sc.kind!r} does not match command {args.command!r}")
        if args.grid is not None and args.grid < 16:
            raise ScenarioError("/grid", "grid must be at least 16")
        seed = args.seed if args.seed is not None else (sc.seed if sc and sc.seed is not None else 0)
        os.makedirs(args.out, exist_ok=True)
        if args.command == "floer-compare":
            ok = run_floer_compare(sc, args.out, seed)
        elif args.command == "quilt-report":
            ok = run_quilt_report(sc, args.out, seed)
        elif args.command == "singular-analyze":
            ok = run_singular_analyze(sc, args.out, args)
        elif args.command == "perturb":
            ok = run_perturb(sc, args.out, args, seed)
        else:
            ok = run_selftest(args.out, seed)
    except ScenarioError as e:
        print(f"error: {e.pointer or '/'}: {e.message}", file=sys.stderr)
        return EXIT_INPUT
    except INPUT_ERRORS as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INPUT
    print(f"{args.command}: {'positive' if ok else 'negative'} verdict; reports in {args.out}")
    return EXIT_OK if ok else EXIT_NEGATIVE
