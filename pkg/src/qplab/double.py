"""The double D = G x G, its split pairing and the quasi-triple (D, G_+^sigma, g_-^sigma).

Elements of the double Lie algebra are pairs (x, y); in coordinates they are
length-2n vectors ``[x, y]``.  Covectors (xi, eta) on the double likewise.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .lie_core import (
    AlgebraVector,
    Covector,
    Involution,
    LieContext,
    _same,
    make_involution,
    pivot_rank,
)


class InternalMismatchError(ArithmeticError):
    """Two routes to the same quantity disagree beyond tolerance."""


@dataclass(frozen=True, eq=False)
class DoubleElement:
    """A pair (left, right): algebra vectors, or group matrices."""

    left: AlgebraVector | np.ndarray
    right: AlgebraVector | np.ndarray

    def __post_init__(self):
        if isinstance(self.left, AlgebraVector) != isinstance(self.right, AlgebraVector):
            raise TypeError("both components must be of the same kind")
        if isinstance(self.left, AlgebraVector):
            _same(self.left.context, self.right.context)

    @property
    def is_algebra(self) -> bool:
        return isinstance(self.left, AlgebraVector)

    @property
    def coords(self) -> np.ndarray:
        return np.concatenate([self.left.coords, self.right.coords])

    @classmethod
    def from_coords(cls, ctx: LieContext, coords) -> "DoubleElement":
        coords = np.asarray(coords, dtype=float)
        n = ctx.dim
        return cls(AlgebraVector(ctx, coords[:n]), AlgebraVector(ctx, coords[n:]))

    def __add__(self, other):
        return DoubleElement(self.left + other.left, self.right + other.right)

    def allclose(self, other, atol=1e-12) -> bool:
        return bool(np.allclose(self.coords, other.coords, rtol=0, atol=atol))


@dataclass(frozen=True, eq=False)
class DoubleCovector:
    left: Covector
    right: Covector

    def __post_init__(self):
        _same(self.left.context, self.right.context)

    @property
    def coords(self) -> np.ndarray:
        return np.concatenate([self.left.coords, self.right.coords])

    @classmethod
    def from_coords(cls, ctx: LieContext, coords) -> "DoubleCovector":
        coords = np.asarray(coords, dtype=float)
        n = ctx.dim
        return cls(Covector(ctx, coords[:n]), Covector(ctx, coords[n:]))

    def __call__(self, u: DoubleElement) -> float:
        return float(self.coords @ u.coords)


@dataclass(frozen=True, eq=False)
class QuasiTriple:
    """(D, G_+^sigma, g_-^sigma); sigma = id gives (D, G_+, g_-).

    Matrices below act on coordinates.  ``delta_plus`` and ``delta_minus``
    are 2n x n; ``pairing`` is the 2n x 2n Gram matrix diag(G, -G).
    """

    context: LieContext
    sigma: Involution

    @classmethod
    def build(cls, ctx: LieContext, sigma: str | Involution = "adH") -> "QuasiTriple":
        if isinstance(sigma, str):
            sigma = make_involution(ctx, sigma)
        return cls(ctx, sigma)

    @property
    def n(self) -> int:
        return self.context.dim

    @cached_property
    def S(self) -> np.ndarray:
        return self.sigma.matrix

    @cached_property
    def delta_plus(self) -> np.ndarray:
        return np.vstack([np.eye(self.n), self.S])

    @cached_property
    def delta_minus(self) -> np.ndarray:
        return np.vstack([np.eye(self.n), -self.S])

    @cached_property
    def pairing(self) -> np.ndarray:
        g = self.context.gram
        z = np.zeros_like(g)
        return np.block([[g, z], [z, -g]])

    @cached_property
    def p_plus(self) -> np.ndarray:
        i, s = np.eye(self.n), self.S
        return 0.5 * np.block([[i, s], [s, s @ s]])

    @cached_property
    def p_minus(self) -> np.ndarray:
        i, s = np.eye(self.n), self.S
        return 0.5 * np.block([[i, -s], [-s, s @ s]])

    def double_bracket(self, u, v) -> np.ndarray:
        n, b = self.n, self.context.bracket_coords
        return np.concatenate([b(u[:n], v[:n]), b(u[n:], v[n:])])

    def direct_sum_rank(self, threshold: float = 1e-8) -> int:
        return pivot_rank(np.hstack([self.delta_plus, self.delta_minus]), threshold)

    def isotropy_residual(self) -> float:
        """Largest |<.,.>| over basis pairs inside g_+^sigma and inside g_-^sigma."""
        plus = self.delta_plus.T @ self.pairing @ self.delta_plus
        minus = self.delta_minus.T @ self.pairing @ self.delta_minus
        return float(max(np.abs(plus).max(), np.abs(minus).max()))

    # -- coordinate-level characteristic elements ----------------------------

    def j_coords(self, xi) -> np.ndarray:
        return self.delta_minus @ (self.context.gram_inv @ xi)

    @cached_property
    def r_matrix_array(self) -> np.ndarray:
        """r(xi, eta) = 1/2 Delta_-^sigma K^{-1}(xi + eta o sigma), as a 2n x 2n array."""
        gi = self.context.gram_inv
        return 0.5 * self.delta_minus @ gi @ np.hstack([np.eye(self.n), self.S.T])


# -- operations --------------------------------------------------------------

def pairing(u: DoubleElement, v: DoubleElement) -> float:
    ctx = u.left.context
    return float(u.left.coords @ ctx.gram @ v.left.coords
                 - u.right.coords @ ctx.gram @ v.right.coords)


def delta_plus(x: AlgebraVector) -> DoubleElement:
    return DoubleElement(x, x)


def delta_minus(x: AlgebraVector) -> DoubleElement:
    return DoubleElement(x, -x)


def delta_plus_sigma(x: AlgebraVector, sigma: Involution) -> DoubleElement:
    return DoubleElement(x, AlgebraVector(x.context, sigma.matrix @ x.coords))


def delta_minus_sigma(x: AlgebraVector, sigma: Involution) -> DoubleElement:
    return DoubleElement(x, AlgebraVector(x.context, -(sigma.matrix @ x.coords)))


def delta_plus_grp(g: np.ndarray) -> DoubleElement:
    return DoubleElement(np.asarray(g), np.asarray(g))


def delta_plus_sigma_grp(g: np.ndarray, sigma: Involution) -> DoubleElement:
    return DoubleElement(np.asarray(g), sigma.on_group(np.asarray(g)))


def project_plus(u: DoubleElement, qt: QuasiTriple) -> DoubleElement:
    return DoubleElement.from_coords(qt.context, qt.p_plus @ u.coords)


def project_minus(u: DoubleElement, qt: QuasiTriple) -> DoubleElement:
    return DoubleElement.from_coords(qt.context, qt.p_minus @ u.coords)


def decompose_covector(alpha: DoubleCovector, qt: QuasiTriple):
    """Split (xi, eta) along d* = (g_+^sigma)* + (g_-^sigma)*.

    plus  = 1/2 (xi + eta o sigma, xi o sigma + eta)
    minus = 1/2 (xi - eta o sigma, -xi o sigma + eta)
    """
    xi, eta = alpha.left, alpha.right
    s = qt.S
    plus = DoubleCovector(0.5 * (xi + eta.compose(s)), 0.5 * (xi.compose(s) + eta))
    minus = DoubleCovector(0.5 * (xi - eta.compose(s)), 0.5 * (eta - xi.compose(s)))
    return plus, minus


def j_map(xi: Covector, qt: QuasiTriple) -> DoubleElement:
    """j(xi, xi o sigma) = Delta_-^sigma(K^{-1} xi); ``xi`` is the g* parameter."""
    return DoubleElement.from_coords(qt.context, qt.j_coords(xi.coords))


def F_sigma(xi: Covector, eta: Covector, qt: QuasiTriple) -> DoubleElement:
    """p_-[j(xi), j(eta)], evaluated literally (vanishes for involutive sigma)."""
    br = qt.double_bracket(qt.j_coords(xi.coords), qt.j_coords(eta.coords))
    return DoubleElement.from_coords(qt.context, qt.p_minus @ br)


def phi_sigma_defining(xi: Covector, eta: Covector, nu: Covector, qt: QuasiTriple) -> float:
    """<j(nu), [j(xi), j(eta)]>."""
    br = qt.double_bracket(qt.j_coords(xi.coords), qt.j_coords(eta.coords))
    return float(qt.j_coords(nu.coords) @ qt.pairing @ br)


def phi_sigma_closed(xi, eta, nu, ctx: LieContext) -> float:
    """2 K(K^{-1} nu, [K^{-1} xi, K^{-1} eta]) on raw g* coordinates."""
    gi = ctx.gram_inv
    return 2.0 * ctx.form_coords(gi @ nu, ctx.bracket_coords(gi @ xi, gi @ eta))


def phi_sigma(xi: Covector, eta: Covector, nu: Covector, qt: QuasiTriple,
              rtol: float = 1e-10, atol: float = 1e-12) -> float:
    closed = phi_sigma_closed(xi.coords, eta.coords, nu.coords, qt.context)
    defining = phi_sigma_defining(xi, eta, nu, qt)
    if abs(closed - defining) > atol + rtol * abs(closed):
        raise InternalMismatchError(f"phi^sigma: closed {closed!r} vs defining {defining!r}")
    return closed


def r_matrix(alpha: DoubleCovector, qt: QuasiTriple) -> DoubleElement:
    return DoubleElement.from_coords(qt.context, qt.r_matrix_array @ alpha.coords)


def r_matrix_via_decomposition(alpha: DoubleCovector, qt: QuasiTriple) -> DoubleElement:
    """(0, j(plus part)): the r-matrix read off the split of d*."""
    plus, _ = decompose_covector(alpha, qt)
    return j_map(plus.left, qt)
