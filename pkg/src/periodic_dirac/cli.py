"""Command line entry point: ``periodic-dirac <subcommand> --config FILE``."""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import bands as bands_mod
from . import export
from .clifford import build_clifford, check_relations, matrix_rows, opnorm, projection_pair
from .config import ConfigError, RunConfig
from .errors import IncompleteEnumerationError, PreconditionError
from .fiber import FiberPoint, assemble, theta, theta_lprime, verify_identities, weights
from .gauge import (
    c_star_h,
    frame_from,
    kernel_G,
    kernel_scale,
    phi_fields,
    phi_sup_bound_check,
    relation_residuals,
    verify_gauge_identity,
)
from .lattice import enumerate_box
from .potential import (
    averaged_potential,
    beta_sigma,
    c1_constant,
    c2_constant,
    check_A2,
    coulomb_sampled,
    dirac,
    directional_norm,
    line_average,
    mollify_full,
    mollify_transverse,
    norm_inf,
    norm_inf_loc,
    q_constant,
    random_trig_polynomial,
    synthesize,
    transverse_directions,
    vallee_poussin,
    weak_Ld_norm,
    zygmund_tail,
)
from .thomas import (
    ThomasScanConfig,
    restricted_bound_check,
    smallness_check_V,
    thomas_line,
    thomas_scan,
    weighted_bound_check,
)

OUT_ENV = "PERIODIC_DIRAC_OUT"


def _measure(cfg, section):
    kind = cfg.get(section, "measure", "dirac")
    if kind == "dirac":
        return dirac()
    if kind == "vallee_poussin":
        return vallee_poussin(cfg.getfloat(section, "h", lo=0.0))
    raise ConfigError(f"unknown measure {kind!r}")


def _gamma(cfg, section, lattice):
    g = cfg.getvector(section, "gamma", " ".join(["0"] * (lattice.dim - 1) + ["1"]), dtype=int)
    if len(g) != lattice.dim or not np.any(g):
        raise ConfigError("gamma must be a nonzero integer vector of length d")
    return tuple(int(v) for v in g)


# -- bands --------------------------------------------------------------------

def cmd_bands(cfg, out, args):
    lat, cl = cfg.lattice(), cfg.clifford()
    W = cfg.matrix_potential()
    res = cfg.getint("bands", "grid", default=4, lo=1, hi=64)
    margin = cfg.getfloat("bands", "margin", default=0.3, lo=0.0, hi=0.49)
    tol = cfg.getfloat("bands", "flat_tol", default=1e-3, lo=0.0)
    bs = bands_mod.compute_bands(W, lat, cl, cfg.n_max, res, margin, args.threads)
    lo, _ = bs.window
    rows = []
    for i, k in enumerate(bs.k_points):
        for j, lam in enumerate(bs.bands[i]):
            rows.append([i, *k, lo + j, lam])
    header = ["k_index"] + [f"k{j + 1}" for j in range(lat.dim)] + ["band", "lambda"]
    export.write_csv(os.path.join(out, "bands.csv"), header, rows)
    flat = bands_mod.flat_band_scan(bs, tol)
    union = bands_mod.spectrum_union(bs)
    summary = {
        "n_max": cfg.n_max, "grid": res, "window": list(bs.window), "band_count": bs.band_count,
        "spectrum_intervals": union, "flat_tol": tol, "flat_bands": [lo + i for i in flat.flagged],
        "band_spreads": flat.spreads, "adjacent_min_gaps": flat.min_gaps,
    }
    export.write_json(os.path.join(out, "bands.json"), summary)
    lines = [f"bands: {len(bs.k_points)} k-points, retained bands {bs.window[0]}..{bs.window[1] - 1}",
             f"flat bands (tol {tol:g}): {len(flat.flagged)}"]
    lines += [f"interval [{export.fmt(a)}, {export.fmt(b)}]" for a, b in union]
    export.write_text(os.path.join(out, "bands.txt"), lines)
    return 0


# -- thomas -------------------------------------------------------------------

def _constants(cfg, lat, gamma, A):
    tau = cfg.getfloat("thomas", "tau", default=0.5, lo=1e-12, hi=1 - 1e-12)
    glen = float(np.linalg.norm(lat.lattice_vector(gamma)))
    mu = _measure(cfg, "thomas")
    if A is None:
        line_sq, theta_bar, cstar = 0.0, 0.0, 0.0
    else:
        line_sq = directional_norm(A, gamma) ** 2
        theta_bar = check_A2(A, gamma, mu).theta_estimate
        if theta_bar >= 1:
            raise PreconditionError(f"averaged potential too large: theta estimate {theta_bar:.6g} >= 1")
        frames = [frame_from(et, lat.lattice_vector(gamma) / glen)
                  for et in transverse_directions(lat, gamma, 4)]
        samples = cfg.getint("thomas", "c_star_samples", default=3, lo=1, hi=16)
        cstar = c_star_h(A, frames, kernel_scale(mu, glen), samples=samples)
    Q = q_constant(tau, glen, line_sq)
    c2 = c2_constant(tau, Q, theta_bar, mu.total_variation_bound, cstar, glen)
    return dict(tau=tau, Q=Q, theta_bar=theta_bar, mu_norm=mu.total_variation_bound,
                c_star_h=cstar, gamma_len=glen, C2=c2, C1=c1_constant(c2, glen))


def cmd_thomas(cfg, out, args):
    lat, cl = cfg.lattice(), cfg.clifford()
    gamma = _gamma(cfg, "thomas", lat)
    V, A = cfg.potentials()
    W = cfg.matrix_potential()
    consts = _constants(cfg, lat, gamma, A)
    ks = thomas_line(lat, gamma, cfg.getint("thomas", "k_count", default=5, lo=1, hi=64))
    kappas = tuple(float(x) for x in cfg.getvector("thomas", "kappas", "1 2 4 8 16"))
    if any(k < 0 for k in kappas):
        raise ConfigError("kappas must be non-negative")
    sc = ThomasScanConfig(lat, cl, gamma, ks, kappas, W, cfg.n_max, consts["C1"], args.threads, args.seed)
    rep = thomas_scan(sc)
    d = lat.dim
    header = [f"k{j + 1}" for j in range(d)] + ["kappa", "sigma_min", "min_G_minus", "C1", "pass"]
    export.write_csv(os.path.join(out, "thomas_scan.csv"), header,
                     [[*r.k, r.kappa, r.sigma_min, r.min_g_minus, r.c1, r.passed] for r in rep.rows])
    summary = {"constants": consts, "all_passed": rep.all_passed, "onset_kappa": rep.onset(),
               "min_sigma": min(r.sigma_min for r in rep.rows)}
    checks = cfg.get("thomas", "checks", "scan").split()
    delta = cfg.getfloat("thomas", "delta", default=0.1, lo=1e-12, hi=1 - 1e-12)
    if "restricted" in checks:
        r = restricted_bound_check(sc, delta, consts["C2"])
        export.write_csv(os.path.join(out, "thomas_restricted.csv"),
                         [f"k{j + 1}" for j in range(d)] + ["kappa", "size", "a", "exact_min", "trial_min",
                                                            "trial_mean", "target", "pass"],
                         [[*x.k, x.kappa, x.size, x.extra["a"], x.exact, x.trial_min, x.trial_mean,
                           x.target, x.passed] for x in r.rows])
        summary["restricted"] = {"all_passed": r.all_passed, "skipped": len(r.skipped)}
    if "weighted" in checks:
        r = weighted_bound_check(sc, delta, consts["C2"])
        export.write_csv(os.path.join(out, "thomas_weighted.csv"),
                         [f"k{j + 1}" for j in range(d)] + ["kappa", "exact_min", "trial_min", "trial_mean",
                                                            "target", "pass"],
                         [[*x.k, x.kappa, x.exact, x.trial_min, x.trial_mean, x.target, x.passed]
                          for x in r.rows])
        summary["weighted"] = {"all_passed": r.all_passed}
    if "smallness" in checks:
        if V is None:
            raise ConfigError("the smallness check needs a potential V")
        from .potential import matrix_potential

        eps = cfg.getfloat("thomas", "eps_prime", default=0.5, lo=0.0)
        r = smallness_check_V(sc, matrix_potential(cl, V=V), eps)
        export.write_csv(os.path.join(out, "thomas_smallness.csv"),
                         [f"k{j + 1}" for j in range(d)] + ["kappa", "eps_exact", "eps_trials", "target", "pass"],
                         [[*x.k, x.kappa, x.eps_exact, x.eps_trials, x.target, x.passed] for x in r.rows])
        summary["smallness"] = {"all_passed": r.all_passed}
    export.write_json(os.path.join(out, "thomas.json"), summary)
    lines = [f"C2 = {export.fmt(consts['C2'])}, C1 = {export.fmt(consts['C1'])}",
             f"scan points: {len(rep.rows)}, all above C1: {rep.all_passed}, onset kappa: {rep.onset()}"]
    export.write_text(os.path.join(out, "thomas.txt"), lines)
    return 0


# -- norms --------------------------------------------------------------------

def cmd_norms(cfg, out, args):
    lat = cfg.lattice()
    res = cfg.getint("norms", "grid", default=64, lo=2, hi=512)
    preset = cfg.get("potential", "preset", "free")
    if preset == "coulomb":
        p = cfg.coulomb_params()
        field = coulomb_sampled(lat, (res,) * lat.dim, p["center"], p["charge"], p["r1"], p["r2"])
        series = cfg.coulomb_series()
    else:
        V, _ = cfg.potentials()
        if V is None:
            raise ConfigError("norms needs a potential V")
        field = synthesize(V, (res,) * lat.dim)
        series = V
    d = lat.dim
    t_min = cfg.getfloat("norms", "t_min", default=4.0, lo=0.0)
    min_cells = cfg.getint("norms", "min_cells", default=max(64, res**d // 1000), lo=1)
    radius = cfg.getfloat("norms", "ball_radius", default=0.2, lo=0.0)
    values = {
        "weak_Ld": weak_Ld_norm(field, d),
        "tail": norm_inf(field, d, t_min, min_cells),
        "tail_local": norm_inf_loc(field, radius, d, t_min, min_cells),
    }
    if preset == "coulomb":
        # |x|^-1 has weak-L^d quasi-norm |B_1|^(1/d) per unit charge
        ball = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
        values["coulomb_reference"] = abs(p["charge"]) * ball ** (1.0 / d)
    delta = cfg.getfloat("norms", "zygmund_delta", default=0.5, lo=1e-12)
    a_vals = cfg.getvector("norms", "a_values", "2 4 8 16 32")
    zyg = [(a, zygmund_tail(field, delta, a)) for a in a_vals]
    gamma = _gamma(cfg, "norms", lat)
    gvec = lat.lattice_vector(gamma)
    sigmas = cfg.getvector("norms", "sigma", "1 2")
    R = cfg.getfloat("norms", "R", default=0.0, lo=0.0)
    betas = [(s, beta_sigma(series, gvec, s, R)) for s in sigmas]
    export.write_csv(os.path.join(out, "norms.csv"), ["quantity", "value"],
                     [[k, v] for k, v in values.items()])
    export.write_csv(os.path.join(out, "zygmund.csv"), ["a", "Y"], zyg)
    export.write_csv(os.path.join(out, "beta.csv"), ["sigma", "beta"], betas)
    export.write_json(os.path.join(out, "norms.json"), {
        "grid": res, "t_min": t_min, "min_cells": min_cells, "ball_radius": radius, "values": values,
        "zygmund_delta": delta, "zygmund": zyg, "beta": betas, "R": R})
    lines = [f"{k}: {export.fmt(v)}" for k, v in values.items()]
    export.write_text(os.path.join(out, "norms.txt"), lines)
    return 0


# -- gauge --------------------------------------------------------------------

def _default_et(lat, gamma):
    return transverse_directions(lat, gamma, 4)[0]


def cmd_gauge(cfg, out, args):
    lat, cl = cfg.lattice(), cfg.clifford()
    _, A = cfg.potentials()
    if A is None:
        raise ConfigError("gauge-check needs a vector potential (vector_mode or vector_table)")
    gamma = _gamma(cfg, "gauge", lat)
    gvec = lat.lattice_vector(gamma)
    glen = float(np.linalg.norm(gvec))
    e = gvec / glen
    et = cfg.getvector("gauge", "et") if cfg.has("gauge", "et") else _default_et(lat, gamma)
    frame = frame_from(et, e)
    mu = _measure(cfg, "gauge")
    gf = phi_fields(A, frame, mu, gamma)
    div, curl = relation_residuals(A, gf)
    k = cfg.getvector("gauge", "k", " ".join(["0.1"] * lat.dim))
    kappa = cfg.getfloat("gauge", "kappa", default=1.0, lo=0.0)
    grids = tuple(int(g) for g in cfg.getvector("gauge", "grids", "6 8 12 16", dtype=int))
    fp = FiberPoint(k, kappa, e, gvec)
    ident = verify_gauge_identity(fp, A, gf, cl, grids, rng=np.random.default_rng(args.seed))
    samples = cfg.getint("gauge", "c_star_samples", default=3, lo=1, hi=16)
    cstar = c_star_h(A, [frame], kernel_scale(mu, glen), samples=samples)
    sup = phi_sup_bound_check(gf, mu.total_variation_bound, cstar)
    kr = cfg.getint("gauge", "kernel_grid", default=20, lo=2, hi=200)
    xs = np.geomspace(1e-3, 1e3, kr)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    kbound = float(np.max(np.abs(kernel_G(X, Y)) * np.hypot(X, Y)))
    export.write_csv(os.path.join(out, "gauge_residuals.csv"), ["grid", "residual"],
                     list(zip(grids, ident.residuals)))
    export.write_csv(os.path.join(out, "gauge_phi.csv"),
                     [f"n{j + 1}" for j in range(lat.dim)] + ["field", "re", "im"],
                     [[*n, s, v.real, v.imag] for s, p in ((1, gf.phi1), (2, gf.phi2))
                      for n, v in zip(p.n, p.values)])
    summary = {
        "frame": frame.vectors, "divergence_residual": div, "curl_residual": curl,
        "identity_residuals": ident.residuals, "identity_ratios": ident.ratios,
        "commutation_residual": ident.commutation, "c_star_h": cstar,
        "phi_sup": [sup.sup_phi1, sup.sup_phi2], "phi_sup_bound": sup.bound, "phi_sup_passed": sup.passed,
        "kernel_bound_max": kbound,
    }
    export.write_json(os.path.join(out, "gauge.json"), summary)
    lines = [f"divergence residual {export.fmt(div)}, curl residual {export.fmt(curl)}"]
    lines += [f"grid {g}: residual {export.fmt(r)}" for g, r in zip(grids, ident.residuals)]
    lines += [f"sup |Phi| = {export.fmt(max(sup.sup_phi1, sup.sup_phi2))} vs bound {export.fmt(sup.bound)}",
              f"max |G| rho = {export.fmt(kbound)}"]
    export.write_text(os.path.join(out, "gauge.txt"), lines)
    return 0


# -- verify -------------------------------------------------------------------

def _orthonormal_pair(rng, d):
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return q[:, 0], q[:, 1]


def verification_suite(cfg, seed, trials):
    """Rows ``(name, value, tolerance)``; a row passes when ``value <= tolerance``."""
    lat = cfg.lattice()
    cl = cfg.clifford()
    d = lat.dim
    rng = np.random.default_rng(seed)
    rows = []
    for dd in range(2, 7):
        c = build_clifford(dd)
        rows.append((f"clifford_relations_d{dd}", check_relations(c), 1e-12 * c.size))
    worst = 0.0
    if d >= 3:
        for _ in range(trials):
            q, _ = np.linalg.qr(rng.standard_normal((d, d)))
            e, a, b = q[:, 0], q[:, 1], q[:, 2]
            th = rng.uniform(0, 2 * np.pi)
            b = math.cos(th) * a + math.sin(th) * b
            for s in (1, -1):
                diff = opnorm(projection_pair(e, a, s, cl) - projection_pair(e, b, s, cl))
                worst = max(worst, abs(diff - 0.5 * np.linalg.norm(a - b)))
    rows.append(("projection_distance", worst, 1e-10))
    basis = enumerate_box(cfg.n_max, d)
    gamma = _gamma(cfg, "verify", lat) if cfg.parser.has_section("verify") else tuple([0] * (d - 1) + [1])
    gvec = lat.lattice_vector(gamma)
    worst_id = 0.0
    for _ in range(max(1, trials // 10)):
        fp = FiberPoint.from_gamma(rng.standard_normal(d), float(rng.uniform(0.5, 8.0)), gvec)
        rep = verify_identities(fp, lat, basis, cl, trials=10, rng=rng)
        worst_id = max(worst_id, rep.worst())
    rows.append(("free_fiber_identities", worst_id, 1e-10))
    A = random_trig_polynomial(lat, rng, 2, (d,), density=0.5)
    et, _ = _orthonormal_pair(rng, d)
    e = gvec / np.linalg.norm(gvec)
    et = et - (et @ e) * e
    et /= np.linalg.norm(et)
    avg = averaged_potential(A, gamma, dirac(), et)
    ref = line_average(A, gamma)
    dev = max((float(np.max(np.abs(avg.coeff(n) - ref.coeff(n)))) for n in A.n), default=0.0)
    off = [float(np.max(np.abs(avg.coeff(n)))) for n in A.n if int(np.dot(n, gamma)) != 0]
    rows.append(("averaged_matches_line_average", dev, 0.0))
    rows.append(("averaged_annihilates_off_line", max(off, default=0.0), 0.0))
    R = 2 * np.pi * 1.5
    mt = mollify_transverse(A, R, e)
    perp = np.linalg.norm(mt.points() - np.outer(mt.points() @ e, e), axis=1) if len(mt.n) else np.zeros(0)
    rows.append(("mollifier_transverse_support", float(np.sum(2 * np.pi * perp > R)), 0.0))
    mf = mollify_full(A, R)
    rows.append(("mollifier_full_support",
                 float(np.sum(2 * np.pi * np.linalg.norm(mf.points(), axis=1) >= R)) if len(mf.n) else 0.0, 0.0))
    h, l = 64.0, 2
    tcheck = max(abs(float(theta(h ** (l - 1), h, l)) - 1.0), abs(float(theta(1.5 * h ** (l - 1), h, l)) - 0.5),
                 abs(float(theta(2.5 * h ** (l - 1), h, l))),
                 abs(float(theta_lprime(0.75 * h ** 3, h, 4, 2)) - 0.5))
    rows.append(("theta_cutoffs", tcheck, 1e-15))
    if d >= 2:
        frame = frame_from(et, e)
        gf = phi_fields(A, frame, dirac(), gamma)
        rows.append(("gauge_divergence_curl", max(relation_residuals(A, gf)), 1e-12))
    return rows


def _export_debug(cfg, out):
    """Fiber matrix and spectral weights at the configured debug point."""
    lat, cl = cfg.lattice(), cfg.clifford()
    gvec = lat.lattice_vector(_gamma(cfg, "verify", lat))
    k = cfg.getvector("verify", "debug_k", " ".join(["0.1"] * lat.dim))
    kappa = cfg.getfloat("verify", "debug_kappa", default=1.0, lo=0.0)
    fp = FiberPoint.from_gamma(k, kappa, gvec)
    basis = enumerate_box(cfg.n_max, lat.dim)
    mat = assemble(fp, cfg.matrix_potential(), lat, basis, cl).matrix
    m = mat.shape[1]
    export.write_csv(os.path.join(out, "fiber_matrix.csv"),
                     [f"{p}{j}" for j in range(m) for p in ("re", "im")], matrix_rows(mat))
    w = weights(fp, lat, basis)
    export.write_csv(os.path.join(out, "weights.csv"),
                     [f"n{j + 1}" for j in range(lat.dim)] + ["G_minus", "G_plus"],
                     [[*n, a, b] for n, a, b in zip(basis, w.g_minus, w.g_plus)])


def cmd_verify(cfg, out, args):
    trials = cfg.getint("verify", "trials", default=50, lo=1, hi=10000)
    if cfg.get("verify", "export_matrices", "no").lower() in ("yes", "true", "1"):
        _export_debug(cfg, out)
    rows = verification_suite(cfg, args.seed, trials)
    results = [(name, val, tol, val <= tol) for name, val, tol in rows]
    export.write_csv(os.path.join(out, "verify.csv"), ["check", "value", "tolerance", "pass"],
                     results)
    export.write_json(os.path.join(out, "verify.json"),
                      {"checks": [{"name": n, "value": v, "tolerance": t, "passed": p} for n, v, t, p in results],
                       "all_passed": all(r[3] for r in results)})
    export.write_text(os.path.join(out, "verify.txt"),
                      [f"{'PASS' if p else 'FAIL'} {n}: {export.fmt(v)} (tol {export.fmt(t)})"
                       for n, v, t, p in results])
    return 0 if all(r[3] for r in results) else 2


COMMANDS = {
    "bands": cmd_bands,
    "thomas-scan": cmd_thomas,
    "norms": cmd_norms,
    "gauge-check": cmd_gauge,
    "verify": cmd_verify,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="periodic-dirac", description=__doc__)
    p.add_argument("subcommand", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="INI run configuration")
    p.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./out)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for k sweeps")
    p.add_argument("--seed", type=int, default=None, help="seed for random test vectors (u64)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        if args.seed is None:
            args.seed = cfg.seed
        if not 0 <= args.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if args.threads < 1:
            raise ConfigError("threads must be at least 1")
        out = export.ensure_dir(args.out or os.environ.get(OUT_ENV) or "out")
        return COMMANDS[args.subcommand](cfg, out, args)
    except (ConfigError, PreconditionError, IncompleteEnumerationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
