"""Verification suites: seeded residual checks over every identity the library implements.

Each check draws from its own generator, seeded by (seed, crc32(family/name)),
so results do not depend on which other checks ran.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
import zlib

import numpy as np

from . import btz, double as dbl, quasi_poisson as qp
from .lie_core import (
    DEFAULT_SEED,
    AlgebraVector,
    Covector,
    E2,
    K_flat,
    K_sharp,
    exp_matrix,
    make_context,
)

SUITES = ("all", "core", "double", "bivector", "btz", "su2")
GROUPS = ("sl2r", "sl3r", "su2")
SIGMAS = ("adH", "id")

DEFAULT_TOLERANCES = {
    "structure_constants": 1e-12,
    "jacobi": 1e-12,
    "ad_invariance": 1e-10,
    "involution_square": 1e-12,
    "involution_morphism": 1e-12,
    "involution_orthogonal": 1e-12,
    "exp_inverse": 1e-12,
    "musical_roundtrip": 1e-12,
    "isotropy": 1e-12,
    "direct_sum_rank_deficit": 0.5,
    "resolution_of_identity": 1e-12,
    "j_characterization": 1e-12,
    "F_sigma_zero": 1e-12,
    "phi_closed_vs_defining": 1e-10,
    "r_matrix_two_routes": 1e-12,
    "P_D_two_routes": 1e-10,
    "bivector_antisymmetry": 1e-10,
    "projectability_spread": 1e-9,
    "projection_vs_closed_form": 1e-10,
    "S_vs_S_sigma": 1e-10,
    "schouten_fd_vs_closed": 1e-5,
    "quasi_poisson_identity": 1e-9,
    "invariance": 1e-10,
    "image_containment": 1e-9,
    "image_span_mismatches": 0.5,
    "action_law": 1e-10,
    "chart_det": 1e-12,
    "chart_roundtrip": 1e-10,
    "offdiag_components": 1e-9,
    "derived_coefficient_match": 1e-8,
    "closed_form_calibration_spread": 1e-8,
    "closed_form_match_after_calibration": 1e-8,
    "closed_form_lowered_index_match": 1e-8,
    "jacobi_sl2r": 1e-10,
    "vanishing_locus_mismatches": 0.5,
    "leaf_rho_drift": 1e-8,
    "leaf_theta_symmetry": 1e-8,
    "f_shift_identity": 1e-10,
    "su2_intertwining": 1e-9,
    "fixed_points_conjugation_mismatches": 0.5,
    "fixed_point_witness_twisted": 1e-10,
}


@dataclass
class CheckResult:
    name: str
    family: str
    n_checks: int
    max_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tolerance

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "family": self.family,
            "n_checks": self.n_checks,
            "max_residual": float(self.max_residual),
            "tolerance": float(self.tolerance),
            "pass": self.passed,
        }


@dataclass
class VerificationReport:
    suite: str
    seed: int
    config: dict
    checks: list = field(default_factory=list)

    @property
    def n_checks(self) -> int:
        return sum(c.n_checks for c in self.checks)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "config": self.config,
            "n_checks": self.n_checks,
            "checks": [c.as_dict() for c in self.checks],
            "pass": self.passed,
        }


def _rel(a, b) -> float:
    # relative error, absolute for |b| < 1
    return abs(a - b) / max(1.0, abs(b))


class _Runner:
    def __init__(self, seed, tolerances, override, form_scale):
        self.seed = seed
        self.tolerances = {**DEFAULT_TOLERANCES, **(tolerances or {})}
        self.override = override
        self.form_scale = form_scale
        self.results: list[CheckResult] = []

    def rng(self, family, name):
        return np.random.default_rng([self.seed, zlib.crc32(f"{family}/{name}".encode())])

    def record(self, family, name, residuals):
        residuals = list(residuals)
        tol = self.override if self.override is not None else self.tolerances[name]
        worst = float(max(residuals)) if residuals else 0.0
        self.results.append(CheckResult(name, family, len(residuals), worst, tol))


# -- suites -----------------------------------------------------------------------

def _core(run: _Runner, group: str, sigma_kind: str):
    fam = f"{group}/{sigma_kind}"
    ctx = make_context(group, run.form_scale)
    qt = dbl.QuasiTriple.build(ctx, sigma_kind)
    n, S = ctx.dim, qt.S
    c = ctx.structure_constants

    res = []
    for i, a in enumerate(ctx.basis):
        for j, b in enumerate(ctx.basis):
            res.append(np.abs(a @ b - b @ a - ctx.matrix_of(c[i, j])).max())
    run.record(fam, "structure_constants", res)

    res = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                jac = c[i, j] @ c[:, k] + c[j, k] @ c[:, i] + c[k, i] @ c[:, j]
                res.append(np.abs(jac).max())
    run.record(fam, "jacobi", res)

    rng = run.rng(fam, "ad_invariance")
    res = []
    for _ in range(200):
        g = ctx.random_group(rng)
        x, y = ctx.random_coords(rng), ctx.random_coords(rng)
        ad = ctx.ad_matrix(g)
        res.append(_rel(ctx.form_coords(ad @ x, ad @ y), ctx.form_coords(x, y)))
    run.record(fam, "ad_invariance", res)

    eye = np.eye(n)
    run.record(fam, "involution_square", [np.abs(S @ S - eye).max()])
    res = []
    for i in range(n):
        for j in range(n):
            res.append(np.abs(S @ c[i, j] - ctx.bracket_coords(S[:, i], S[:, j])).max())
    run.record(fam, "involution_morphism", res)
    run.record(fam, "involution_orthogonal", [np.abs(S.T @ ctx.gram @ S - ctx.gram).max()])

    rng = run.rng(fam, "exp_inverse")
    res = []
    for _ in range(100):
        x = ctx.random_coords(rng)
        x *= 2.0 * rng.uniform() / max(1.0, np.linalg.norm(ctx.matrix_of(x)))
        m = ctx.matrix_of(x)
        res.append(np.abs(exp_matrix(m) @ exp_matrix(-m) - ctx.identity()).max())
    run.record(fam, "exp_inverse", res)

    rng = run.rng(fam, "musical_roundtrip")
    res = []
    for _ in range(100):
        xi = Covector(ctx, rng.uniform(-1, 1, n))
        x = K_sharp(xi)
        res.append(np.abs(K_flat(x).coords - xi.coords).max())
    run.record(fam, "musical_roundtrip", res)


def _double(run: _Runner, group: str, sigma_kind: str):
    fam = f"{group}/{sigma_kind}"
    ctx = make_context(group, run.form_scale)
    qt = dbl.QuasiTriple.build(ctx, sigma_kind)
    n = ctx.dim

    run.record(fam, "isotropy", [qt.isotropy_residual()])
    run.record(fam, "direct_sum_rank_deficit", [2 * n - qt.direct_sum_rank()])

    rng = run.rng(fam, "resolution_of_identity")
    res = []
    for _ in range(100):
        u = dbl.DoubleElement.from_coords(ctx, rng.uniform(-1, 1, 2 * n))
        total = dbl.project_plus(u, qt) + dbl.project_minus(u, qt)
        res.append(np.abs(total.coords - u.coords).max())
    run.record(fam, "resolution_of_identity", res)

    rng = run.rng(fam, "j_characterization")
    res = []
    for _ in range(50):
        xi = Covector(ctx, rng.uniform(-1, 1, n))
        w = AlgebraVector(ctx, ctx.random_coords(rng))
        jw = dbl.j_map(xi, qt)
        plus_w = dbl.delta_plus_sigma(w, qt.sigma)
        lhs = dbl.pairing(jw, plus_w)
        rhs = xi(w) + xi.compose(qt.S)(plus_w.right)
        res.append(abs(lhs - rhs))
    run.record(fam, "j_characterization", res)

    rng = run.rng(fam, "F_sigma_zero")
    res = []
    for _ in range(100):
        xi, eta = (Covector(ctx, rng.uniform(-1, 1, n)) for _ in range(2))
        res.append(np.abs(dbl.F_sigma(xi, eta, qt).coords).max())
    run.record(fam, "F_sigma_zero", res)

    rng = run.rng(fam, "phi_closed_vs_defining")
    res = []
    for _ in range(100):
        xi, eta, nu = (Covector(ctx, rng.uniform(-1, 1, n)) for _ in range(3))
        closed = dbl.phi_sigma_closed(xi.coords, eta.coords, nu.coords, ctx)
        res.append(_rel(dbl.phi_sigma_defining(xi, eta, nu, qt), closed))
    run.record(fam, "phi_closed_vs_defining", res)

    rng = run.rng(fam, "r_matrix_two_routes")
    res = []
    for _ in range(100):
        alpha = dbl.DoubleCovector.from_coords(ctx, rng.uniform(-1, 1, 2 * n))
        a = dbl.r_matrix(alpha, qt).coords
        b = dbl.r_matrix_via_decomposition(alpha, qt).coords
        res.append(np.abs(a - b).max())
    run.record(fam, "r_matrix_two_routes", res)

    rng = run.rng(fam, "P_D_two_routes")
    res = []
    for _ in range(50):
        a, b = ctx.random_group(rng), ctx.random_group(rng)
        res.append(np.abs(qp.P_D_sigma(a, b, qt).matrix - qp.P_D_sigma_from_r(a, b, qt).matrix).max())
    run.record(fam, "P_D_two_routes", res)


def _bivector(run: _Runner, group: str, sigma_kind: str):
    fam = f"{group}/{sigma_kind}"
    ctx = make_context(group, run.form_scale)
    qt = dbl.QuasiTriple.build(ctx, sigma_kind)
    qt_id = dbl.QuasiTriple.build(ctx, "id")
    n = ctx.dim

    rng = run.rng(fam, "bivector_antisymmetry")
    res = []
    for _ in range(50):
        a, b = ctx.random_group(rng), ctx.random_group(rng)
        res.append(qp.P_D_sigma(a, b, qt).antisymmetry_residual())
        res.append(qp.P_S_sigma(a, qt).antisymmetry_residual())
        res.append(qp.project_P_D_to_S(a, b, qt).antisymmetry_residual())
    run.record(fam, "bivector_antisymmetry", res)

    rng = run.rng(fam, "projectability_spread")
    spread, vs_closed = [], []
    for _ in range(20):
        a, b = ctx.random_group(rng), ctx.random_group(rng)
        ref = qp.project_P_D_to_S(a, b, qt).matrix
        vs_closed.append(np.abs(ref - qp.P_S_sigma_matrix(a @ np.linalg.inv(b), qt)).max())
        worst = 0.0
        for _ in range(50):
            c = ctx.random_group(rng)
            worst = max(worst, np.abs(qp.project_P_D_to_S(a @ c, b @ c, qt).matrix - ref).max())
        spread.append(worst)
    run.record(fam, "projectability_spread", spread)
    run.record(fam, "projection_vs_closed_form", vs_closed)

    rng = run.rng(fam, "S_vs_S_sigma")
    res = []
    for _ in range(100):
        g, h = ctx.random_group(rng), ctx.random_group(rng)
        via = qp.P_S_via_S_sigma(g, h, qt)
        res.append(np.abs(via.matrix - qp.P_S_sigma_matrix(via.base_point, qt_id)).max())
    run.record(fam, "S_vs_S_sigma", res)

    rng = run.rng(fam, "schouten_fd_vs_closed")
    res = []
    for _ in range(10):
        s = ctx.random_group(rng)
        tensor = qp.schouten_fd_tensor(s, qt, h=1e-4)
        for _ in range(5):
            xi, eta, nu = (rng.uniform(-1, 1, n) for _ in range(3))
            res.append(abs(tensor(xi, eta, nu) - qp.schouten_closed(s, xi, eta, nu, qt)))
    run.record(fam, "schouten_fd_vs_closed", res)

    rng = run.rng(fam, "quasi_poisson_identity")
    res = []
    for _ in range(100):
        s = ctx.random_group(rng)
        xi, eta, nu = (rng.uniform(-1, 1, n) for _ in range(3))
        res.append(_rel(qp.phi_S(s, xi, eta, nu, qt), qp.schouten_closed(s, xi, eta, nu, qt)))
    run.record(fam, "quasi_poisson_identity", res)

    rng = run.rng(fam, "invariance")
    res = [qp.check_invariance(ctx.random_group(rng), ctx.random_group(rng), qt) for _ in range(100)]
    run.record(fam, "invariance", res)

    rng = run.rng(fam, "image_containment")
    contain, mismatches = [], []
    for _ in range(50):
        span = qp.image_basis(ctx.random_group(rng), qt)
        contain.append(span.containment_residual)
        agree = span.rank == span.factored_rank == span.joint_rank and span.rank <= span.orbit_rank
        mismatches.append(0 if agree else 1)
    run.record(fam, "image_containment", contain)
    run.record(fam, "image_span_mismatches", [sum(mismatches)])

    rng = run.rng(fam, "action_law")
    res = []
    for _ in range(100):
        g1, g2, s = (ctx.random_group(rng) for _ in range(3))
        lhs = qp.act(g1, qp.act(g2, s, qt), qt)
        res.append(np.abs(lhs - qp.act(g1 @ g2, s, qt)).max())
    run.record(fam, "action_law", res)


def _random_chart_point(rng, theta_range=math.pi):
    return btz.ChartPoint(float(rng.uniform(0.05, math.pi - 0.05)),
                          float(rng.uniform(-theta_range, theta_range)),
                          float(rng.uniform(-3, 3)))


def _btz(run: _Runner):
    fam = "sl2r/adH"
    c = run.form_scale
    cfg = btz.BtzConfig(form_scale=c)
    grid = cfg.grid()

    res = []
    for t in np.linspace(0.05, math.pi - 0.05, 10):
        for th in np.linspace(-3, 3, 10):
            for r in np.linspace(-3, 3, 10):
                res.append(abs(np.linalg.det(btz.chart(btz.ChartPoint(t, th, r))) - 1))
    run.record(fam, "chart_det", res)

    rng = run.rng(fam, "chart_roundtrip")
    res = []
    for _ in range(500):
        p = _random_chart_point(rng)
        q = btz.inverse_chart(btz.chart(p))
        res.append(np.abs(q.as_array() - p.as_array()).max())
    run.record(fam, "chart_roundtrip", res)

    comps = [btz.coordinate_bivector(p, c) for p in grid]
    run.record(fam, "offdiag_components", [max(abs(m[0, 2]), abs(m[1, 2])) for m in comps])
    run.record(fam, "derived_coefficient_match",
               [abs(m[0, 1] - btz.derived_coeff(p, c)) for p, m in zip(grid, comps)])

    cal = btz.calibrate_scale(grid, form_scale=c)
    run.record(fam, "closed_form_calibration_spread", [cal.spread])
    run.record(fam, "closed_form_match_after_calibration",
               [abs(m[0, 1] / cal.c - btz.closed_form_coeff(p)) for p, m in zip(grid, comps)])
    run.record(fam, "closed_form_lowered_index_match",
               [abs(btz.lowered_bivector(p, c)[1, 0] / c - btz.closed_form_coeff(p)) for p in grid])

    qt = btz.btz_triple(c)
    rng = run.rng(fam, "jacobi_sl2r")
    res = []
    for _ in range(100):
        s = qt.context.random_group(rng)
        xi, eta, nu = (rng.uniform(-1, 1, 3) for _ in range(3))
        res.append(abs(qp.schouten_closed(s, xi, eta, nu, qt)))
    run.record(fam, "jacobi_sl2r", res)

    mismatches = 0
    for p in grid:
        vanishing = abs(btz.closed_form_coeff(p)) < 1e-9
        if (btz.classify_point(p, c) == "rank-0") != vanishing:
            mismatches += 1
    run.record(fam, "vanishing_locus_mismatches", [mismatches])

    trace = btz.trace_leaf(btz.ChartPoint(math.pi / 2, 0.0, 1.0), cfg, 10_000)
    run.record(fam, "leaf_rho_drift", [trace.rho_drift, 0.0 if not trace.truncated else math.inf])

    a = btz.trace_leaf(btz.ChartPoint(math.pi / 2, 0.0, 1.0), cfg, 1000)
    b = btz.trace_leaf(btz.ChartPoint(math.pi / 2, 1.0, 1.0), cfg, 1000)
    run.record(fam, "leaf_theta_symmetry", [theta_shift_residual(a, b, 1.0)])

    rng = run.rng(fam, "f_shift_identity")
    res = []
    for _ in range(100):
        p = _random_chart_point(rng, 3 * math.pi)
        k = btz.quotient_shift(p)
        lhs = btz.chart(btz.wrap_quotient(p))
        rhs = qp.act(btz.f_element(-k), btz.chart(p), qt)
        res.append(np.abs(lhs - rhs).max() / max(1.0, np.abs(rhs).max()))
    run.record(fam, "f_shift_identity", res)


def theta_shift_residual(a: btz.LeafTrace, b: btz.LeafTrace, shift: float) -> float:
    """Largest pointwise gap between trace b and trace a shifted by ``shift`` in theta."""
    if len(a.points) != len(b.points):
        return math.inf
    worst = 0.0
    for pa, pb, ta, tb in zip(a.points, b.points, a.theta_unwrapped, b.theta_unwrapped):
        worst = max(worst, abs(pa.tau - pb.tau), abs(pa.rho - pb.rho), abs(ta + shift - tb))
    return worst


def _su2(run: _Runner):
    ctx = make_context("su2", run.form_scale)
    qt = dbl.QuasiTriple.build(ctx, "adH")
    rng = run.rng("su2/adH", "su2_intertwining")
    res = [qp.su2_isomorphism_check(ctx.identity(), qt, 4, seed=run.seed)]
    for i in range(50):
        res.append(qp.su2_isomorphism_check(ctx.random_group(rng), qt, 4, seed=run.seed + i))
    run.record("su2/adH", "su2_intertwining", res)

    sl2 = make_context("sl2r", run.form_scale)
    conj = dbl.QuasiTriple.build(sl2, "id")
    twisted = dbl.QuasiTriple.build(sl2, "adH")
    eye = np.eye(2)
    rng = run.rng("sl2r/id", "fixed_points_conjugation_mismatches")
    candidates = [(eye, True), (-eye, True)]
    candidates += [(sl2.random_group(rng), False) for _ in range(20)]
    mismatches = sum(bool(qp.check_fixed_point(s, conj)) != expect for s, expect in candidates)
    run.record("sl2r/id", "fixed_points_conjugation_mismatches", [mismatches])

    res = []
    for s in (eye, -eye):
        found = qp.check_fixed_point(s, twisted)
        if found.fixed:
            res.append(math.inf)
            continue
        res.append(np.abs(qp.act(found.witness, s, twisted) - s @ np.array([[1.0, 2.0], [0.0, 1.0]])).max())
        res.append(np.abs(found.witness - exp_matrix(E2)).max())
    run.record("sl2r/adH", "fixed_point_witness_twisted", res)


def families(group: str | None, sigma: str | None):
    groups = GROUPS if group is None else (group,)
    sigmas = SIGMAS if sigma is None else (sigma,)
    return [(g, s) for g in groups for s in sigmas]


def run_suite(suite: str, seed: int = DEFAULT_SEED, group: str | None = None,
              sigma: str | None = None, form_scale: float = 1.0,
              tolerances: dict | None = None, tol: float | None = None) -> VerificationReport:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    run = _Runner(seed, tolerances, tol, form_scale)
    fams = families(group, sigma)
    if suite in ("all", "core"):
        for g, s in fams:
            _core(run, g, s)
    if suite in ("all", "double"):
        for g, s in fams:
            _double(run, g, s)
    if suite in ("all", "bivector"):
        for g, s in fams:
            _bivector(run, g, s)
    if suite in ("all", "btz"):
        _btz(run)
    if suite in ("all", "su2"):
        _su2(run)
    config = {
        "group": group if group is not None else "all",
        "sigma": sigma if sigma is not None else "all",
        "form_scale": form_scale,
        "tol_override": tol,
    }
    return VerificationReport(suite, seed, config, run.results)
