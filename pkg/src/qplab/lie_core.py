"""Matrix Lie groups and algebras with fixed bases.

Algebra elements are stored by their coordinates in the context basis; the
matrix is rebuilt on demand.  Group elements are plain square ndarrays.
Linear maps on the algebra (Ad_g, sigma, ...) are n x n arrays acting on
coordinate columns, and a covector xi acts as ``xi @ coords``, so that the
pullback ``xi o A`` has coordinates ``A.T @ xi``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np
import scipy.linalg

ABS_TOL = 1e-10
REL_TOL = 1e-10
DEFAULT_SEED = 42


class ContextMismatchError(ValueError):
    pass


class DegenerateFormError(ValueError):
    pass


H2 = np.array([[1.0, 0.0], [0.0, -1.0]])
E2 = np.array([[0.0, 1.0], [0.0, 0.0]])
F2 = np.array([[0.0, 0.0], [1.0, 0.0]])


def _sl2r_basis():
    return [H2.copy(), E2.copy(), F2.copy()]


def _slnr_basis(n):
    basis = []
    for i in range(n - 1):
        h = np.zeros((n, n))
        h[i, i] = 1.0
        h[i + 1, i + 1] = -1.0
        basis.append(h)
    for i in range(n):
        for j in range(n):
            if i != j:
                e = np.zeros((n, n))
                e[i, j] = 1.0
                basis.append(e)
    return basis


def _su2_basis():
    # i*sigma_3, i*sigma_1, i*sigma_2
    return [
        np.array([[1j, 0], [0, -1j]]),
        np.array([[0, 1j], [1j, 0]]),
        np.array([[0, 1], [-1, 0]], dtype=complex),
    ]


@dataclass(frozen=True, eq=False)
class LieContext:
    """A matrix Lie algebra with an ordered basis and the form K(x, y) = c tr(xy)."""

    name: str
    basis: tuple
    form_scale: float = 1.0

    def __post_init__(self):
        if self.form_scale <= 0:
            raise ValueError("form_scale must be positive")
        object.__setattr__(self, "basis", tuple(np.asarray(b) for b in self.basis))
        if abs(np.linalg.det(self.gram)) < 1e-14:
            raise DegenerateFormError(f"K is degenerate on the basis of {self.name}")

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def rep_dim(self) -> int:
        return self.basis[0].shape[0]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.basis[0])

    @cached_property
    def basis_stack(self) -> np.ndarray:
        return np.stack(self.basis)

    @cached_property
    def _trace_pairing(self) -> np.ndarray:
        # row i gives tr(b_i @ m) = row_i . m.ravel()
        return np.stack([b.T.ravel() for b in self.basis])

    @cached_property
    def gram(self) -> np.ndarray:
        g = np.array([[self.form_scale * np.trace(a @ b).real for b in self.basis]
                      for a in self.basis])
        return g

    @cached_property
    def gram_inv(self) -> np.ndarray:
        return np.linalg.inv(self.gram)

    @cached_property
    def _coord_solver(self) -> np.ndarray:
        # coords = G^{-1} [K(b_i, m)]
        return self.gram_inv @ (self.form_scale * self._trace_pairing)

    @cached_property
    def structure_constants(self) -> np.ndarray:
        """c[i, j, k] with [b_i, b_j] = sum_k c[i, j, k] b_k."""
        n = self.dim
        c = np.zeros((n, n, n))
        for i, a in enumerate(self.basis):
            for j, b in enumerate(self.basis):
                c[i, j] = self.coords_of(a @ b - b @ a)
        return c

    def with_scale(self, form_scale: float) -> "LieContext":
        return LieContext(self.name, self.basis, form_scale)

    # -- coordinates ---------------------------------------------------------

    def coords_of(self, m: np.ndarray) -> np.ndarray:
        c = self._coord_solver @ np.asarray(m).ravel()
        return np.real(c) if self.is_complex else c

    def matrix_of(self, coords) -> np.ndarray:
        return np.tensordot(np.asarray(coords, dtype=float), self.basis_stack, axes=1)

    def identity(self) -> np.ndarray:
        return np.eye(self.rep_dim, dtype=self.basis[0].dtype)

    # -- linear maps on the algebra -----------------------------------------

    def ad_matrix(self, g: np.ndarray) -> np.ndarray:
        """Matrix of Ad_g in basis coordinates."""
        conj = g @ self.basis_stack @ np.linalg.inv(g)
        cols = self._coord_solver @ conj.reshape(self.dim, -1).T
        return np.real(cols) if self.is_complex else cols

    def ad_algebra(self, x) -> np.ndarray:
        """Matrix of ad_x = [x, .] for coordinates x."""
        return np.tensordot(np.asarray(x, dtype=float), self.structure_constants, axes=1).T

    def bracket_coords(self, x, y) -> np.ndarray:
        return np.einsum("i,j,ijk->k", x, y, self.structure_constants)

    def form_coords(self, x, y) -> float:
        return float(np.asarray(x) @ self.gram @ np.asarray(y))

    # -- validation ----------------------------------------------------------

    def in_algebra(self, m: np.ndarray, tol: float = 1e-12) -> bool:
        m = np.asarray(m)
        if abs(np.trace(m)) > tol:
            return False
        if self.name == "su2" and np.max(np.abs(m + m.conj().T)) > tol:
            return False
        return np.max(np.abs(self.matrix_of(self.coords_of(m)) - m)) <= tol

    def check_group_element(self, g: np.ndarray, tol: float = 1e-10) -> None:
        g = np.asarray(g)
        if g.shape != (self.rep_dim, self.rep_dim):
            raise ValueError(f"expected a {self.rep_dim}x{self.rep_dim} matrix")
        if abs(np.linalg.det(g) - 1) >= tol:
            raise ValueError("determinant differs from 1")
        if self.name == "su2":
            if np.max(np.abs(g @ g.conj().T - np.eye(2))) >= tol:
                raise ValueError("matrix is not unitary")

    # -- sampling ------------------------------------------------------------

    def random_coords(self, rng: np.random.Generator, size=None) -> np.ndarray:
        shape = (self.dim,) if size is None else (size, self.dim)
        return rng.uniform(-1.0, 1.0, shape)

    def random_algebra(self, rng: np.random.Generator) -> "AlgebraVector":
        return AlgebraVector(self, self.random_coords(rng))

    def random_group(self, rng: np.random.Generator) -> np.ndarray:
        return exp_matrix(self.matrix_of(self.random_coords(rng)))

    def vector(self, coords) -> "AlgebraVector":
        return AlgebraVector(self, np.asarray(coords, dtype=float))

    def vector_from_matrix(self, m) -> "AlgebraVector":
        return AlgebraVector(self, self.coords_of(m))

    def __repr__(self):
        return f"LieContext({self.name!r}, dim={self.dim}, form_scale={self.form_scale})"


def make_context(group: str, form_scale: float = 1.0) -> LieContext:
    """Build one of the supported contexts: ``sl2r``, ``slNr`` (e.g. ``sl3r``), ``su2``."""
    g = group.lower()
    if g == "sl2r":
        return LieContext("sl2r", tuple(_sl2r_basis()), form_scale)
    if g == "su2":
        return LieContext("su2", tuple(_su2_basis()), form_scale)
    if g.startswith("sl") and g.endswith("r") and g[2:-1].isdigit():
        n = int(g[2:-1])
        if n < 2:
            raise ValueError("slNr needs N >= 2")
        if n == 2:
            return make_context("sl2r", form_scale)
        return LieContext(g, tuple(_slnr_basis(n)), form_scale)
    raise ValueError(f"unknown group {group!r}")


@dataclass(frozen=True, eq=False)
class AlgebraVector:
    context: LieContext
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))

    @cached_property
    def matrix(self) -> np.ndarray:
        return self.context.matrix_of(self.coords)

    def __add__(self, other):
        _same(self.context, other.context)
        return AlgebraVector(self.context, self.coords + other.coords)

    def __sub__(self, other):
        _same(self.context, other.context)
        return AlgebraVector(self.context, self.coords - other.coords)

    def __neg__(self):
        return AlgebraVector(self.context, -self.coords)

    def __mul__(self, scalar):
        return AlgebraVector(self.context, scalar * self.coords)

    __rmul__ = __mul__

    def allclose(self, other, atol=1e-12) -> bool:
        _same(self.context, other.context)
        return bool(np.allclose(self.coords, other.coords, rtol=0, atol=atol))


@dataclass(frozen=True, eq=False)
class Covector:
    """Element of g*, coordinates in the basis dual to the context basis."""

    context: LieContext
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))

    def __call__(self, x: AlgebraVector) -> float:
        _same(self.context, x.context)
        return float(self.coords @ x.coords)

    def compose(self, linear_map: np.ndarray) -> "Covector":
        """The covector ``self o linear_map``."""
        return Covector(self.context, linear_map.T @ self.coords)

    def __add__(self, other):
        _same(self.context, other.context)
        return Covector(self.context, self.coords + other.coords)

    def __sub__(self, other):
        _same(self.context, other.context)
        return Covector(self.context, self.coords - other.coords)

    def __neg__(self):
        return Covector(self.context, -self.coords)

    def __mul__(self, scalar):
        return Covector(self.context, scalar * self.coords)

    __rmul__ = __mul__


def _same(a: LieContext, b: LieContext) -> None:
    if a is not b and not (a.name == b.name and a.form_scale == b.form_scale):
        raise ContextMismatchError(f"{a!r} vs {b!r}")


@dataclass(frozen=True, eq=False)
class Involution:
    """sigma = Ad_fixture, or the identity when ``fixture`` is None.

    The fixture only needs to normalise the algebra; it may have det -1.
    """

    context: LieContext
    fixture: np.ndarray | None = None

    @property
    def is_identity(self) -> bool:
        return self.fixture is None

    @cached_property
    def matrix(self) -> np.ndarray:
        if self.fixture is None:
            return np.eye(self.context.dim)
        return self.context.ad_matrix(self.fixture)

    def on_group(self, g: np.ndarray) -> np.ndarray:
        if self.fixture is None:
            return g
        return self.fixture @ g @ np.linalg.inv(self.fixture)

    @property
    def label(self) -> str:
        return "id" if self.fixture is None else "adH"


def make_involution(ctx: LieContext, kind: str = "adH") -> Involution:
    """``id`` or ``adH``; for slNr, N > 2, ``adH`` conjugates by diag(1, -1, 1, ...)."""
    if kind == "id":
        return Involution(ctx)
    if kind != "adH":
        raise ValueError(f"unknown involution {kind!r}")
    n = ctx.rep_dim
    h = np.diag([(-1.0) ** i for i in range(n)])
    if ctx.is_complex:
        h = h.astype(complex)
    return Involution(ctx, h)


# -- operations on AlgebraVector ---------------------------------------------

def bracket(x: AlgebraVector, y: AlgebraVector) -> AlgebraVector:
    _same(x.context, y.context)
    m = x.matrix @ y.matrix - y.matrix @ x.matrix
    return AlgebraVector(x.context, x.context.coords_of(m))


def form_K(x: AlgebraVector, y: AlgebraVector) -> float:
    _same(x.context, y.context)
    return float(x.context.form_scale * np.trace(x.matrix @ y.matrix).real)


def K_flat(x: AlgebraVector) -> Covector:
    return Covector(x.context, x.context.gram @ x.coords)


def K_sharp(xi: Covector) -> AlgebraVector:
    return AlgebraVector(xi.context, xi.context.gram_inv @ xi.coords)


def Ad(g: np.ndarray, x: AlgebraVector) -> AlgebraVector:
    g = np.asarray(g)
    if abs(np.linalg.det(g)) < 1e-14:
        raise ValueError("Ad needs an invertible matrix")
    m = g @ x.matrix @ np.linalg.inv(g)
    return AlgebraVector(x.context, x.context.coords_of(m))


def apply_sigma_alg(sigma: Involution, x: AlgebraVector) -> AlgebraVector:
    if sigma.is_identity:
        return x
    return Ad(sigma.fixture, x)


def apply_sigma_grp(sigma: Involution, g: np.ndarray) -> np.ndarray:
    return sigma.on_group(np.asarray(g))


def exp_matrix(x) -> np.ndarray:
    """Matrix exponential.

    Trace-free 2x2 matrices use x^2 = -det(x) I, so
    exp(x) = C(det) I + S(det) x with C, S the cos/cosh branches.
    """
    m = x.matrix if isinstance(x, AlgebraVector) else np.asarray(x)
    if m.shape == (2, 2) and abs(m[0, 0] + m[1, 1]) < 1e-14:
        delta = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if np.iscomplexobj(m) and abs(np.imag(delta)) > 1e-14:
            r = np.sqrt(complex(delta))
            c, s = np.cos(r), np.sin(r) / r if r != 0 else 1.0
        else:
            delta = float(np.real(delta))
            if abs(delta) < 1e-8:
                # two-term series of cos(r), sin(r)/r in delta = r^2
                c = 1.0 - delta / 2 + delta**2 / 24
                s = 1.0 - delta / 6 + delta**2 / 120
            elif delta > 0:
                r = math.sqrt(delta)
                c, s = math.cos(r), math.sin(r) / r
            else:
                r = math.sqrt(-delta)
                c, s = math.cosh(r), math.sinh(r) / r
        return c * np.eye(2, dtype=m.dtype) + s * m
    return scipy.linalg.expm(m)


def sample_rng(seed: int | None = None) -> np.random.Generator:
    return np.random.default_rng(DEFAULT_SEED if seed is None else seed)


def pivot_rank(m: np.ndarray, threshold: float = 1e-8) -> int:
    """Rank by Gaussian elimination with partial pivoting; pivots <= threshold count as zero."""
    a = np.array(m, dtype=float, copy=True)
    rows, cols = a.shape
    rank = 0
    for col in range(cols):
        if rank == rows:
            break
        piv = rank + int(np.argmax(np.abs(a[rank:, col])))
        if abs(a[piv, col]) <= threshold:
            continue
        a[[rank, piv]] = a[[piv, rank]]
        a[rank + 1:] -= np.outer(a[rank + 1:, col] / a[rank, col], a[rank])
        rank += 1
    return rank
