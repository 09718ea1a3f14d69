"""SL(2,R) with sigma = Ad_H: the BTZ domain I, its (tau, theta, rho) chart, and leaves.

A point of I is written [[u + x, y + t], [y - t, u - x]] with
u^2 - x^2 - y^2 + t^2 = 1 and t^2 - y^2 > 0.  The chart is

    z(tau, theta, rho) = [[ sh + ch cos(tau),           e^theta ch sin(tau)],
                          [-e^-theta ch sin(tau),  -sh + ch cos(tau)]]

with sh = sinh(rho/2), ch = cosh(rho/2).  Shifting theta by t is twisted
conjugation by exp(t H / 2), so the discrete group F = {exp(n pi H)} shifts
theta by 2 pi n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np

from .double import QuasiTriple
from .lie_core import H2, exp_matrix, make_context
from .quasi_poisson import P_S_sigma_matrix, image_basis
from . import serialize

TWO_PI = 2.0 * math.pi
BOUNDARY_MARGIN = 1e-9


class DomainError(ValueError):
    """Point outside I, or too close to its boundary for the chart."""


class DegenerateGridError(ValueError):
    pass


class RankZeroError(ValueError):
    pass


@dataclass(frozen=True)
class ChartPoint:
    tau: float
    theta: float
    rho: float

    def as_array(self) -> np.ndarray:
        return np.array([self.tau, self.theta, self.rho])

    @classmethod
    def from_array(cls, a) -> "ChartPoint":
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class BtzConfig:
    form_scale: float = 1.0
    theta_period: float = TWO_PI
    n_tau: int = 20
    n_theta: int = 20
    n_rho: int = 5
    tau_margin: float = 0.1
    rho_max: float = 2.0
    step: float = 1e-3

    def __post_init__(self):
        if self.form_scale <= 0:
            raise ValueError("form_scale must be positive")
        if self.theta_period != TWO_PI:
            raise ValueError("theta_period is fixed at 2 pi")

    def grid(self) -> list[ChartPoint]:
        taus = np.linspace(self.tau_margin, math.pi - self.tau_margin, self.n_tau)
        thetas = np.linspace(0.0, TWO_PI, self.n_theta, endpoint=False)
        rhos = np.linspace(-self.rho_max, self.rho_max, self.n_rho)
        return [ChartPoint(float(t), float(th), float(r))
                for t in taus for th in thetas for r in rhos]

    def as_dict(self) -> dict:
        return {
            "form_scale": self.form_scale,
            "theta_period": self.theta_period,
            "n_tau": self.n_tau,
            "n_theta": self.n_theta,
            "n_rho": self.n_rho,
            "tau_margin": self.tau_margin,
            "rho_max": self.rho_max,
            "step": self.step,
        }


@lru_cache(maxsize=None)
def btz_triple(form_scale: float = 1.0) -> QuasiTriple:
    return QuasiTriple.build(make_context("sl2r", form_scale), "adH")


# -- chart ---------------------------------------------------------------------

def chart(p: ChartPoint) -> np.ndarray:
    sh, ch = math.sinh(p.rho / 2), math.cosh(p.rho / 2)
    st, ct = math.sin(p.tau), math.cos(p.tau)
    e = math.exp(p.theta)
    return np.array([[sh + ch * ct, e * ch * st],
                     [-ch * st / e, -sh + ch * ct]])


def chart_derivatives(p: ChartPoint) -> np.ndarray:
    """Stack of dz/dtau, dz/dtheta, dz/drho."""
    sh, ch = math.sinh(p.rho / 2), math.cosh(p.rho / 2)
    st, ct = math.sin(p.tau), math.cos(p.tau)
    e = math.exp(p.theta)
    d_tau = [[-ch * st, e * ch * ct], [-ch * ct / e, -ch * st]]
    d_theta = [[0.0, e * ch * st], [ch * st / e, 0.0]]
    d_rho = [[0.5 * (ch + sh * ct), 0.5 * e * sh * st],
             [-0.5 * sh * st / e, 0.5 * (-ch + sh * ct)]]
    return np.array([d_tau, d_theta, d_rho])


def right_frame(p: ChartPoint, qt: QuasiTriple | None = None) -> np.ndarray:
    """3 x 3 array whose columns are the coordinates of (dz/dc_i) z^-1."""
    qt = qt or btz_triple()
    z = chart(p)
    z_inv = np.array([[z[1, 1], -z[0, 1]], [-z[1, 0], z[0, 0]]])
    v = chart_derivatives(p) @ z_inv
    return qt.context._coord_solver @ v.reshape(3, -1).T


def _entries(s):
    s = np.asarray(s, dtype=float)
    u = (s[0, 0] + s[1, 1]) / 2
    x = (s[0, 0] - s[1, 1]) / 2
    y = (s[0, 1] + s[1, 0]) / 2
    t = (s[0, 1] - s[1, 0]) / 2
    return u, x, y, t


def in_domain_I(s: np.ndarray, margin: float = 0.0) -> bool:
    if np.iscomplexobj(s) or np.shape(s) != (2, 2):
        return False
    u, x, y, t = _entries(s)
    return abs(u * u - x * x - y * y + t * t - 1.0) < 1e-9 and t * t - y * y > margin


def require_domain(s: np.ndarray) -> None:
    if not in_domain_I(s, BOUNDARY_MARGIN):
        raise DomainError("point is outside I or within 1e-9 of its boundary")


def inverse_chart(s: np.ndarray, branch: str = "upper") -> ChartPoint:
    """Invert the chart.  ``upper`` covers sin(tau) > 0 (t > 0), ``lower`` sin(tau) < 0.

    theta is recovered from log((t + y)/(t - y)), so its absolute error grows
    like eps * exp(2|theta|); wrap theta into [0, 2 pi) first when possible.
    """
    if branch not in ("upper", "lower"):
        raise ValueError(f"unknown branch {branch!r}")
    require_domain(s)
    u, x, y, t = _entries(s)
    if (t > 0) != (branch == "upper"):
        raise DomainError(f"point lies on the other chart branch than {branch!r}")
    rho = 2.0 * math.asinh(x)
    q = math.sqrt(t * t - y * y)
    tau = math.atan2(q if branch == "upper" else -q, u)
    num, den = t + y, t - y
    if num / den <= 0:
        raise DomainError("t - y degenerate")
    return ChartPoint(tau, 0.5 * math.log(num / den), rho)


# -- bivector in coordinates -----------------------------------------------------

def coordinate_bivector(p: ChartPoint, form_scale: float = 1.0) -> np.ndarray:
    """Components P(dc_i, dc_j) of P_S^sigma in the chart, c = (tau, theta, rho)."""
    if math.sin(p.tau) ** 2 * math.cosh(p.rho / 2) ** 2 <= BOUNDARY_MARGIN:
        raise DomainError("chart frame is singular at sin(tau) = 0")
    qt = btz_triple(form_scale)
    j_inv = np.linalg.inv(right_frame(p, qt))
    return j_inv @ P_S_sigma_matrix(chart(p), qt) @ j_inv.T


def lowered_bivector(p: ChartPoint, form_scale: float = 1.0) -> np.ndarray:
    """P_S^sigma evaluated on the K-duals of the coordinate vectors: K(v_i, P(K v_j)).

    Not a coordinate expression of the bivector; at form_scale 1 its
    (theta, tau) entry reproduces the closed-form coefficient (``closed_form_coeff``).
    """
    qt = btz_triple(form_scale)
    j = right_frame(p, qt)
    g = qt.context.gram
    return j.T @ g @ P_S_sigma_matrix(chart(p), qt) @ g @ j


def closed_form_coeff(p: ChartPoint) -> float:
    """2 cosh^2(rho/2) sin(tau) sinh(rho), the reference closed-form coefficient of d_tau ^ d_theta."""
    return 2.0 * math.cosh(p.rho / 2) ** 2 * math.sin(p.tau) * math.sinh(p.rho)


def derived_coeff(p: ChartPoint, form_scale: float = 1.0) -> float:
    """tanh(rho/2) / (c sin(tau)): the (tau, theta) component of the pulled-back bivector."""
    return math.tanh(p.rho / 2) / (form_scale * math.sin(p.tau))


def brs_coeff(p: ChartPoint) -> float:
    """1 / (cosh^2(rho/2) sin(tau)), the coefficient of the standard BTZ comparison bivector."""
    st = math.sin(p.tau)
    if abs(st) < BOUNDARY_MARGIN:
        raise DomainError("sin(tau) = 0 lies on the boundary of I")
    return 1.0 / (math.cosh(p.rho / 2) ** 2 * st)


@dataclass(frozen=True)
class Calibration:
    c: float
    spread: float
    n_points: int

    def ok(self, threshold: float = 1e-8) -> bool:
        return self.spread < threshold


def calibrate_scale(grid, form_scale: float = 1.0, target=closed_form_coeff,
                    min_points: int = 10) -> Calibration:
    """Median of (pulled-back (tau, theta) component) / target over the grid.

    The spread is the largest relative deviation from the median; it is
    small only when target is the pullback up to a constant factor.
    """
    ratios = []
    for p in grid:
        f = target(p)
        if abs(f) < 1e-9:
            continue
        ratios.append(coordinate_bivector(p, form_scale)[0, 1] / f)
    if len(ratios) < min_points:
        raise DegenerateGridError(f"only {len(ratios)} grid points with nonzero target")
    ratios = np.array(ratios)
    c = float(np.median(ratios))
    spread = float(np.max(np.abs(ratios - c)) / abs(c))
    return Calibration(c, spread, len(ratios))


# -- quotient by F -----------------------------------------------------------------

def f_element(n: int) -> np.ndarray:
    return exp_matrix(n * math.pi * H2)


def quotient_shift(p: ChartPoint) -> int:
    """The k with theta - 2 pi k in [0, 2 pi), rounding residue sent to k + 1."""
    k = math.floor(p.theta / TWO_PI)
    if p.theta - TWO_PI * k >= TWO_PI:
        k += 1
    return k


def wrap_quotient(p: ChartPoint) -> ChartPoint:
    theta = p.theta - TWO_PI * quotient_shift(p)
    if not 0.0 <= theta < TWO_PI:
        theta = 0.0  # within rounding of the seam
    return ChartPoint(p.tau, theta, p.rho)


def classify_point(p: ChartPoint, form_scale: float = 1.0) -> str:
    s = chart(p)
    require_domain(s)
    rank = image_basis(s, btz_triple(form_scale)).rank
    return "rank-0" if rank == 0 else "rank-2"


# -- leaves ------------------------------------------------------------------------

# gradients (in tau, theta, rho) of the generating functions whose Hamiltonian
# flows P(dh) trace a leaf
HAMILTONIANS = {
    "cos_tau": (lambda q: -math.cos(q[0]),
                lambda q: np.array([math.sin(q[0]), 0.0, 0.0])),
    "sin_tau_cos_theta": (lambda q: math.sin(q[0]) * math.cos(q[1]),
                          lambda q: np.array([math.cos(q[0]) * math.cos(q[1]),
                                              -math.sin(q[0]) * math.sin(q[1]), 0.0])),
    "theta": (lambda q: q[1], lambda q: np.array([0.0, 1.0, 0.0])),
}


@dataclass
class LeafTrace:
    points: list
    rho_ref: float
    classification: str
    p_tau_theta: list = field(default_factory=list)
    truncated: bool = False
    hamiltonian: str = "cos_tau"
    step: float = 1e-3
    theta_unwrapped: list = field(default_factory=list)

    @property
    def rho_drift(self) -> float:
        return max(abs(p.rho - self.rho_ref) for p in self.points)

    def to_csv(self) -> str:
        rows = [(p.tau, p.theta, p.rho, c) for p, c in zip(self.points, self.p_tau_theta)]
        text = serialize.csv_text(["tau", "theta", "rho", "p_tau_theta"], rows)
        return text + (f"# rho_drift,{serialize.fmt(self.rho_drift)}\n"
                       f"# truncated,{str(self.truncated).lower()}\n")

    def to_document(self, config: dict, seed: int) -> dict:
        return {
            "config": config,
            "seed": seed,
            "points": [{"tau": p.tau, "theta": p.theta, "rho": p.rho, "p_tau_theta": c}
                       for p, c in zip(self.points, self.p_tau_theta)],
            "summary": {
                "classification": self.classification,
                "hamiltonian": self.hamiltonian,
                "rho_ref": self.rho_ref,
                "rho_drift": self.rho_drift,
                "n_points": len(self.points),
                "truncated": self.truncated,
            },
        }


def _in_chart_domain(q) -> bool:
    return 0.0 < q[0] < math.pi and (math.sin(q[0]) * math.cosh(q[2] / 2)) ** 2 > BOUNDARY_MARGIN


def trace_leaf(start: ChartPoint, cfg: BtzConfig | None = None, n_steps: int = 10_000,
               hamiltonian: str = "cos_tau") -> LeafTrace:
    """Follow the Hamiltonian flow of ``hamiltonian`` under P with fixed-step RK4.

    The flow stays in the symplectic leaf through ``start``; rho is a Casimir.
    Stops early, with ``truncated`` set, when the next point would leave the chart.
    """
    cfg = cfg or BtzConfig()
    if hamiltonian not in HAMILTONIANS:
        raise ValueError(f"unknown hamiltonian {hamiltonian!r}")
    if not _in_chart_domain(start.as_array()):
        raise DomainError("start point outside the chart domain")
    if classify_point(start, cfg.form_scale) == "rank-0":
        raise RankZeroError("rank-0 point: the leaf is the point itself")
    _, grad = HAMILTONIANS[hamiltonian]
    c, h = cfg.form_scale, cfg.step

    def field_at(q):
        m = coordinate_bivector(ChartPoint.from_array(q), c)
        return m @ grad(q), m[0, 1]

    q = start.as_array()
    k1, comp = field_at(q)
    trace = LeafTrace([wrap_quotient(start)], start.rho, "rank-2", [comp],
                      hamiltonian=hamiltonian, step=h, theta_unwrapped=[start.theta])
    for _ in range(n_steps):
        try:
            k2, _ = field_at(q + 0.5 * h * k1)
            k3, _ = field_at(q + 0.5 * h * k2)
            k4, _ = field_at(q + h * k3)
        except DomainError:
            trace.truncated = True
            break
        nxt = q + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not _in_chart_domain(nxt):
            trace.truncated = True
            break
        q = nxt
        k1, comp = field_at(q)
        p = ChartPoint.from_array(q)
        trace.points.append(wrap_quotient(p))
        trace.p_tau_theta.append(comp)
        trace.theta_unwrapped.append(p.theta)
    return trace


def grid_document(points, form_scale: float = 1.0) -> tuple[list[str], list[tuple]]:
    """Header and rows for a grid of coordinate-bivector evaluations."""
    header = ["tau", "theta", "rho", "p_tau_theta", "p_tau_rho", "p_theta_rho",
              "closed_form", "derived"]
    rows = []
    for p in points:
        m = coordinate_bivector(p, form_scale)
        rows.append((p.tau, p.theta, p.rho, m[0, 1], m[0, 2], m[1, 2],
                     closed_form_coeff(p), derived_coeff(p, form_scale)))
    return header, rows
