"""Bivector fields on the double and on S = D/G_+, and the twisted conjugation action.

Every tangent space is trivialised by right translations: a tangent vector
at g is written v g with v in the Lie algebra, and covectors accordingly.
A bivector at a point is stored as the array M of the map g* -> g, with the
scalar convention P(xi, eta) = xi(P(eta)) = xi @ M @ eta.

Sign convention for the Schouten bracket: in coordinates,
``1/2 [P, P]^{ijk} = - sum_cyclic P^{il} d_l P^{jk}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .double import DoubleElement, QuasiTriple, phi_sigma_closed
from .lie_core import AlgebraVector, Covector, LieContext, exp_matrix, pivot_rank


@dataclass(frozen=True, eq=False)
class BivectorMap:
    base_point: np.ndarray | DoubleElement
    matrix: np.ndarray

    def __call__(self, xi) -> np.ndarray:
        xi = xi.coords if isinstance(xi, Covector) else xi
        return self.matrix @ xi

    def pair(self, xi, eta) -> float:
        return float(np.asarray(xi) @ self.matrix @ np.asarray(eta))

    def antisymmetry_residual(self) -> float:
        return float(np.abs(self.matrix + self.matrix.T).max())

    @property
    def is_zero(self) -> bool:
        return bool(np.abs(self.matrix).max() == 0.0)


@dataclass(frozen=True, eq=False)
class TrivectorValue:
    base_point: np.ndarray
    components: np.ndarray

    def __call__(self, xi, eta, nu) -> float:
        return float(np.einsum("ijk,i,j,k->", self.components, xi, eta, nu))


@dataclass(frozen=True, eq=False)
class TwistOperator:
    base_point: np.ndarray
    matrix: np.ndarray

    def __call__(self, x) -> np.ndarray:
        return self.matrix @ x


def _inv(g):
    return np.linalg.inv(g)


# -- bivectors -----------------------------------------------------------------

def P_D_sigma(a: np.ndarray, b: np.ndarray, qt: QuasiTriple) -> BivectorMap:
    """P_D^sigma at d = (a, b):

    (xi, eta) -> 1/2 (K^{-1}(eta o sigma o (Ad_{sigma(b) a^-1} - 1)),
                      -K^{-1}(xi o sigma o (Ad_{sigma(a) b^-1} - 1)))
    """
    ctx, S, n = qt.context, qt.S, qt.n
    gi, eye = ctx.gram_inv, np.eye(n)
    sig = qt.sigma.on_group
    A = ctx.ad_matrix(sig(b) @ _inv(a))
    B = ctx.ad_matrix(sig(a) @ _inv(b))
    m = np.zeros((2 * n, 2 * n))
    m[:n, n:] = 0.5 * gi @ (A - eye).T @ S.T
    m[n:, :n] = -0.5 * gi @ (B - eye).T @ S.T
    return BivectorMap(DoubleElement(a, b), m)


def P_D_sigma_from_r(a: np.ndarray, b: np.ndarray, qt: QuasiTriple) -> BivectorMap:
    """Same bivector built from its definition r^lambda - r^rho (Ad_d r Ad_d^* - r)."""
    ctx, n = qt.context, qt.n
    ad_d = np.zeros((2 * n, 2 * n))
    ad_d[:n, :n] = ctx.ad_matrix(a)
    ad_d[n:, n:] = ctx.ad_matrix(b)
    r = qt.r_matrix_array
    return BivectorMap(DoubleElement(a, b), ad_d @ r @ ad_d.T - r)


def project_P_D_to_S(a: np.ndarray, b: np.ndarray, qt: QuasiTriple) -> BivectorMap:
    """Push P_D^sigma(a, b) through p(x, y) = x - Ad_{ab^-1} y; lands at s = ab^-1."""
    s = a @ _inv(b)
    p = np.hstack([np.eye(qt.n), -qt.context.ad_matrix(s)])
    m = P_D_sigma(a, b, qt).matrix
    return BivectorMap(s, p @ m @ p.T)


def P_S_sigma_matrix(s: np.ndarray, qt: QuasiTriple) -> np.ndarray:
    ctx = qt.context
    sig_s_inv = _inv(qt.sigma.on_group(s))
    return 0.5 * (ctx.ad_matrix(sig_s_inv) - ctx.ad_matrix(s)) @ qt.S @ ctx.gram_inv


def P_S_sigma(s: np.ndarray, qt: QuasiTriple) -> BivectorMap:
    """xi -> 1/2 (Ad_{sigma(s)^-1} - Ad_s) sigma K^{-1}(xi)."""
    return BivectorMap(s, P_S_sigma_matrix(s, qt))


def P_S_via_S_sigma(g: np.ndarray, h: np.ndarray, qt: QuasiTriple) -> BivectorMap:
    """Project P_D^sigma(g, h) onto S^sigma = D/G_+^sigma, identified with G by g sigma(h)^-1.

    The tangent map of (g, h) -> g sigma(h)^-1 is (x, y) -> x - Ad_s sigma(y).
    """
    s = g @ _inv(qt.sigma.on_group(h))
    p = np.hstack([np.eye(qt.n), -qt.context.ad_matrix(s) @ qt.S])
    m = P_D_sigma(g, h, qt).matrix
    return BivectorMap(s, p @ m @ p.T)


# -- Schouten bracket -----------------------------------------------------------

def twist_operator(s: np.ndarray, qt: QuasiTriple) -> TwistOperator:
    ctx = qt.context
    tau = ctx.ad_matrix(s) @ qt.S - qt.S @ ctx.ad_matrix(_inv(s))
    return TwistOperator(s, tau)


def schouten_closed(s, xi, eta, nu, qt: QuasiTriple) -> float:
    """1/2 [P, P](xi, eta, nu) = 1/4 K(x, [y, tau z] + [tau y, z] - tau [y, z])."""
    ctx = qt.context
    gi, br = ctx.gram_inv, ctx.bracket_coords
    x, y, z = gi @ _c(xi), gi @ _c(eta), gi @ _c(nu)
    t = twist_operator(s, qt).matrix
    return 0.25 * ctx.form_coords(x, br(y, t @ z) + br(t @ y, z) - t @ br(y, z))


def _c(v):
    return v.coords if isinstance(v, (Covector, AlgebraVector)) else np.asarray(v, dtype=float)


def _dexp_right(ctx: LieContext, x) -> np.ndarray:
    # right-trivialised differential of exp, through order |x|^2
    ad = ctx.ad_algebra(x)
    return np.eye(ctx.dim) + ad / 2 + ad @ ad / 6


def _coordinate_bivector(s, x, qt):
    # P in the chart x -> exp(x) s
    j_inv = np.linalg.inv(_dexp_right(qt.context, x))
    g = exp_matrix(qt.context.matrix_of(x)) @ s
    return j_inv @ P_S_sigma_matrix(g, qt) @ j_inv.T


def schouten_fd_tensor(s: np.ndarray, qt: QuasiTriple, h: float = 1e-4) -> TrivectorValue:
    """1/2 [P_S^sigma, P_S^sigma] at s from central differences of step h."""
    if h < 1e-12:
        raise ValueError("finite-difference step underflow")
    n = qt.n
    p0 = _coordinate_bivector(s, np.zeros(n), qt)
    dp = np.empty((n, n, n))
    for l, e in enumerate(np.eye(n) * h):
        dp[l] = (_coordinate_bivector(s, e, qt) - _coordinate_bivector(s, -e, qt)) / (2 * h)
    a = np.einsum("il,ljk->ijk", p0, dp)
    t = a + a.transpose(1, 2, 0) + a.transpose(2, 0, 1)
    return TrivectorValue(s, -t)


def schouten_fd(s, xi, eta, nu, qt: QuasiTriple, h: float = 1e-4) -> float:
    return schouten_fd_tensor(s, qt, h)(_c(xi), _c(eta), _c(nu))


# -- the twisted action ---------------------------------------------------------

def act(g: np.ndarray, s: np.ndarray, qt: QuasiTriple) -> np.ndarray:
    """Twisted conjugation g . s = g s sigma(g)^-1."""
    return g @ s @ _inv(qt.sigma.on_group(g))


def infinitesimal_action(s: np.ndarray, x, qt: QuasiTriple) -> np.ndarray:
    """x -> x - Ad_s sigma(x), right-trivialised at s (coordinates in, coordinates out)."""
    x = _c(x)
    return x - qt.context.ad_matrix(s) @ (qt.S @ x)


def phi_S(s, xi, eta, nu, qt: QuasiTriple) -> float:
    """Trivector induced on S by phi^sigma through the infinitesimal action.

    The dual action sends xi to the functional xi - xi o Ad_s o sigma on g.
    Transported to (g_+^sigma)* along Delta_+^sigma, a functional lam on g
    is the pair (lam/2, lam/2 o sigma), whose g* parameter is lam/2.
    """
    ctx = qt.context
    dual = np.eye(qt.n) - ctx.ad_matrix(s) @ qt.S
    args = [0.5 * dual.T @ _c(v) for v in (xi, eta, nu)]
    return phi_sigma_closed(*args, ctx)


def check_invariance(g: np.ndarray, s: np.ndarray, qt: QuasiTriple) -> float:
    """max |Ad_g P(s) Ad_g^* - P(g s sigma(g)^-1)|."""
    ad_g = qt.context.ad_matrix(g)
    lhs = ad_g @ P_S_sigma_matrix(s, qt) @ ad_g.T
    return float(np.abs(lhs - P_S_sigma_matrix(act(g, s, qt), qt)).max())


@dataclass(frozen=True)
class ImageSpan:
    vectors: list
    rank: int
    factored_rank: int
    joint_rank: int
    orbit_rank: int
    containment_residual: float


def image_basis(s: np.ndarray, qt: QuasiTriple, threshold: float = 1e-8) -> ImageSpan:
    """Span of Im P_S^sigma(s), computed two ways, against the orbit tangent space.

    direct:   (Ad_{sigma(s)^-1} - Ad_s) sigma(b_i)
    factored: (1 - Ad_s sigma)(1 + Ad_s sigma)(b_i)
    orbit:    b_i - Ad_s sigma(b_i)
    """
    ctx, S, eye = qt.context, qt.S, np.eye(qt.n)
    a = ctx.ad_matrix(s) @ S
    direct = (ctx.ad_matrix(_inv(qt.sigma.on_group(s))) - ctx.ad_matrix(s)) @ S
    factored = (eye - a) @ (eye + a)
    orbit = eye - a
    rank = pivot_rank(direct.T, threshold)
    coeffs, *_ = np.linalg.lstsq(orbit, direct, rcond=None)
    residual = float(np.abs(orbit @ coeffs - direct).max())
    vectors = [AlgebraVector(ctx, col) for col in direct.T]
    return ImageSpan(
        vectors=vectors,
        rank=rank,
        factored_rank=pivot_rank(factored.T, threshold),
        joint_rank=pivot_rank(np.hstack([direct, factored]).T, threshold),
        orbit_rank=pivot_rank(orbit.T, threshold),
        containment_residual=residual,
    )


# -- fixed points and the SU(2) remark ------------------------------------------

def probe_elements(ctx: LieContext, n_samples: int = 64) -> list:
    """exp of scaled basis directions: scales 1, -1, 1/2, -1/2, 2, -2, 1/4, ..."""
    scales = []
    k = 0
    while len(scales) * ctx.dim < n_samples:
        mag = [1.0, 0.5, 2.0][k % 3] * (0.5 ** (k // 3))
        scales += [mag, -mag]
        k += 1
    out = []
    for i in range(n_samples):
        out.append(exp_matrix(scales[i // ctx.dim] * ctx.basis[i % ctx.dim]))
    return out


@dataclass(frozen=True, eq=False)
class FixedPointResult:
    fixed: bool
    witness: np.ndarray | None = None

    def __bool__(self):
        return self.fixed


def check_fixed_point(s: np.ndarray, qt: QuasiTriple, n_samples: int = 64,
                      tol: float = 1e-10) -> FixedPointResult:
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    for g in probe_elements(qt.context, n_samples):
        if np.abs(act(g, s, qt) - s).max() > tol:
            return FixedPointResult(False, g)
    return FixedPointResult(True)


SU2_U = np.array([[1j, 0], [0, -1j]])


def su2_isomorphism_check(s: np.ndarray, qt_sigma: QuasiTriple, n_samples: int = 8,
                          seed: int = 42) -> float:
    """Right multiplication by U = diag(i, -i) against both structures on SU(2).

    R_U is the identity in right trivialisation, so P_S(s) must equal
    P_S^sigma(sU) as arrays, and R_U must intertwine conjugation with
    twisted conjugation.  Returns the largest residual.
    """
    ctx = qt_sigma.context
    if ctx.name != "su2" or qt_sigma.sigma.is_identity:
        raise ValueError("needs su2 with sigma = Ad_H")
    qt_id = QuasiTriple.build(ctx, "id")
    rng = np.random.default_rng(seed)
    res = float(np.abs(P_S_sigma_matrix(s, qt_id) - P_S_sigma_matrix(s @ SU2_U, qt_sigma)).max())
    for _ in range(n_samples):
        g = ctx.random_group(rng)
        lhs = act(g, s, qt_id) @ SU2_U
        rhs = act(g, s @ SU2_U, qt_sigma)
        res = max(res, float(np.abs(lhs - rhs).max()))
    return res


