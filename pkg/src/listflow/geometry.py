"""Finite-difference Riemannian tensor calculus on a periodic grid.

Index conventions: a symmetric 2-tensor field ``T`` has shape ``(n, n, *S)``
with ``T[i, j]`` the lower-index coordinate component; Christoffel symbols are
stored as ``gamma[k, i, j] = Gamma^k_{ij}``.  Every tensor built here is
symmetrised explicitly, so symmetries hold bit-exactly rather than up to
roundoff.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .grid import PeriodicGrid, check_finite, gradient, hessian, partial_derivative

__all__ = [
    "MetricDegenerationError",
    "GeometryCache",
    "inverse_metric",
    "min_eigenvalue",
    "metric_derivatives",
    "christoffel",
    "ricci",
    "riemann_norm_sq",
    "scalar_ops",
    "laplace_beltrami",
    "operator_norm",
    "build_cache",
]

DEFAULT_LAMBDA_MIN = 1e-8


class MetricDegenerationError(ArithmeticError):
    """A metric node fell below the positive-definiteness floor."""

    def __init__(self, node, eigenvalue, t=None):
        self.node = tuple(int(i) for i in node)
        self.eigenvalue = float(eigenvalue)
        self.t = t
        where = f" at t={t!r}" if t is not None else ""
        super().__init__(f"metric degenerate at node {self.node}{where}: smallest eigenvalue {self.eigenvalue:.6g}")


def _sym(t):
    return 0.5 * (t + np.swapaxes(t, 0, 1))


def _nodes_last(t):
    """``(n, n, *S)`` -> ``(*S, n, n)`` for batched linear algebra."""
    return np.moveaxis(t, (0, 1), (-2, -1))


def _nodes_first(t):
    return np.moveaxis(t, (-2, -1), (0, 1))


def smallest_eigenvalues(h) -> np.ndarray:
    """Per-node smallest eigenvalue of a symmetric ``(n, n, *S)`` field.

    Closed forms for n = 2 (quadratic) and n = 3 (trigonometric solution of the
    characteristic cubic); LAPACK otherwise.
    """
    n = h.shape[0]
    if n == 2:
        mean = 0.5 * (h[0, 0] + h[1, 1])
        return mean - np.hypot(0.5 * (h[0, 0] - h[1, 1]), h[0, 1])
    if n == 3:
        q = (h[0, 0] + h[1, 1] + h[2, 2]) / 3.0
        off = h[0, 1] ** 2 + h[0, 2] ** 2 + h[1, 2] ** 2
        p = np.sqrt(((h[0, 0] - q) ** 2 + (h[1, 1] - q) ** 2 + (h[2, 2] - q) ** 2 + 2.0 * off) / 6.0)
        safe = np.where(p > 0, p, 1.0)
        b = (h - q * np.eye(3).reshape((3, 3) + (1,) * (h.ndim - 2))) / safe
        det_b = (b[0, 0] * (b[1, 1] * b[2, 2] - b[1, 2] ** 2)
                 - b[0, 1] * (b[0, 1] * b[2, 2] - b[1, 2] * b[0, 2])
                 + b[0, 2] * (b[0, 1] * b[1, 2] - b[1, 1] * b[0, 2]))
        phi = np.arccos(np.clip(0.5 * det_b, -1.0, 1.0)) / 3.0
        return np.where(p > 0, q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0), q)
    return np.linalg.eigvalsh(_nodes_last(h))[..., 0]


def min_eigenvalue(h) -> tuple[float, tuple[int, ...]]:
    """Smallest eigenvalue of the per-node matrices and the node where it occurs."""
    lam = smallest_eigenvalues(h)
    idx = np.unravel_index(np.argmin(lam), lam.shape)
    return float(lam[idx]), tuple(int(i) for i in idx)


def inverse_metric(h, lambda_min: float = DEFAULT_LAMBDA_MIN, check: bool = True) -> np.ndarray:
    """Per-node matrix inverse of a metric field.

    Raises
    ------
    MetricDegenerationError
        If ``check`` and some node has smallest eigenvalue below ``lambda_min``.
    """
    if check:
        h = check_finite(h, "metric")
        lam, node = min_eigenvalue(h)
        if lam < lambda_min:
            raise MetricDegenerationError(node, lam)
    n = h.shape[0]
    if n == 2:
        det = h[0, 0] * h[1, 1] - h[0, 1] * h[0, 1]
        inv = np.empty_like(h)
        inv[0, 0] = h[1, 1] / det
        inv[1, 1] = h[0, 0] / det
        inv[0, 1] = inv[1, 0] = -h[0, 1] / det
        return inv
    if n == 3:
        # adjugate / determinant; cofactors of a symmetric matrix are symmetric
        cof = np.empty_like(h)
        for i, j in ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)):
            a, b = [k for k in range(3) if k != i]
            c, d = [k for k in range(3) if k != j]
            sign = -1.0 if (i + j) % 2 else 1.0
            cof[i, j] = cof[j, i] = sign * (h[a, c] * h[b, d] - h[a, d] * h[b, c])
        det = h[0, 0] * cof[0, 0] + h[0, 1] * cof[0, 1] + h[0, 2] * cof[0, 2]
        return cof / det
    return _sym(_nodes_first(np.linalg.inv(_nodes_last(h))))


def metric_derivatives(h, grid: PeriodicGrid, order: int = 2) -> np.ndarray:
    """``dh[l, i, j] = d_l h_ij``."""
    return gradient(h, grid, order)


def christoffel(h, h_inv, grid: PeriodicGrid, order: int = 2, dh=None) -> np.ndarray:
    """Second-kind Christoffel symbols ``Gamma^k_ij = 1/2 h^kl (d_i h_jl + d_j h_il - d_l h_ij)``."""
    if dh is None:
        dh = metric_derivatives(h, grid, order)
    first_kind = 0.5 * (
        np.einsum("ijl...->lij...", dh) + np.einsum("jil...->lij...", dh) - dh
    )
    gamma = np.einsum("kl...,lij...->kij...", h_inv, first_kind)
    return 0.5 * (gamma + np.swapaxes(gamma, 1, 2))


def ricci(gamma, h_inv, grid: PeriodicGrid, order: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Ricci tensor and scalar curvature from Christoffel symbols.

    ``R_ij = d_k G^k_ij - d_j G^k_ik + G^k_kl G^l_ij - G^k_jl G^l_ik``.
    """
    n = grid.dim
    div = sum(partial_derivative(gamma[k], grid, k, order, check=False) for k in range(n))
    trace = np.einsum("kik...->i...", gamma)
    dtrace = gradient(trace, grid, order)  # dtrace[j, i] = d_j G^k_ik
    quad = np.einsum("kkl...,lij...->ij...", gamma, gamma) - np.einsum("kjl...,lik...->ij...", gamma, gamma)
    ric = _sym(div - dtrace + quad)
    return ric, np.einsum("ij...,ij...->...", h_inv, ric)


def _raise_all(riem, h_inv):
    out = np.einsum("ia...,abcd...->ibcd...", h_inv, riem)
    out = np.einsum("jb...,ibcd...->ijcd...", h_inv, out)
    out = np.einsum("kc...,ijcd...->ijkd...", h_inv, out)
    return np.einsum("ld...,ijkd...->ijkl...", h_inv, out)


def riemann_from_ricci(h, ric, scalar) -> np.ndarray:
    """Lower-index Riemann tensor in dimension 2 or 3, where Ricci determines it."""
    n = h.shape[0]
    hh = np.einsum("ik...,jl...->ijkl...", h, h) - np.einsum("il...,jk...->ijkl...", h, h)
    if n == 2:
        return 0.5 * scalar * hh
    if n == 3:
        hr = (np.einsum("ik...,jl...->ijkl...", h, ric) - np.einsum("il...,jk...->ijkl...", h, ric)
              - np.einsum("jk...,il...->ijkl...", h, ric) + np.einsum("jl...,ik...->ijkl...", h, ric))
        return hr - 0.5 * scalar * hh
    raise ValueError(f"Riemann reconstruction from Ricci needs dimension 2 or 3, got {n}")


def riemann_norm_sq(h, h_inv, ric, scalar) -> np.ndarray:
    """``|Rm|^2 = R_ijkl R^ijkl`` with Riemann rebuilt from Ricci (dim <= 3)."""
    riem = riemann_from_ricci(h, ric, scalar)
    return np.einsum("ijkl...,ijkl...->...", riem, _raise_all(riem, h_inv))


def scalar_ops(u, h_inv, gamma, grid: PeriodicGrid, order: int = 2, du=None):
    """Covariant first/second derivatives of a scalar.

    Returns ``(grad_up, grad_sq, hess, hess_sq, lap)``: the raised gradient
    ``h^ij d_j u``, ``|du|^2``, ``D^2 u``, ``|D^2 u|^2`` and the Laplace-Beltrami
    operator ``h^ij (D^2 u)_ij``.
    """
    if du is None:
        du = gradient(u, grid, order)
    hess = _sym(hessian(u, grid, order) - np.einsum("kij...,k...->ij...", gamma, du))
    grad_up = np.einsum("ij...,j...->i...", h_inv, du)
    grad_sq = np.einsum("ij...,i...,j...->...", h_inv, du, du)
    mixed = np.einsum("ik...,kj...->ij...", h_inv, hess)
    hess_sq = np.einsum("ij...,ji...->...", mixed, mixed)
    lap = np.einsum("ij...,ij...->...", h_inv, hess)
    return grad_up, grad_sq, hess, hess_sq, lap


def laplace_beltrami(f, h_inv, gamma, grid: PeriodicGrid, order: int = 2) -> np.ndarray:
    df = gradient(f, grid, order)
    hess = hessian(f, grid, order) - np.einsum("kij...,k...->ij...", gamma, df)
    return np.einsum("ij...,ij...->...", h_inv, hess)


def operator_norm(t, h_inv) -> np.ndarray:
    """Per-node largest |eigenvalue| of ``h^-1 T``, i.e. the h-operator norm of T."""
    # with h^-1 = L L^T, h^-1 T is similar to the symmetric L^T T L
    L = np.linalg.cholesky(_nodes_last(h_inv))
    sym = np.swapaxes(L, -1, -2) @ _nodes_last(t) @ L
    eig = np.linalg.eigvalsh(0.5 * (sym + np.swapaxes(sym, -1, -2)))
    return np.max(np.abs(eig), axis=-1)


class GeometryCache:
    """All derived geometric quantities of one ``(h, u)`` pair.

    The quantities needed to evaluate the flow (inverse metric, Christoffels,
    Ricci, gradient, Hessian, Laplacian) are computed on construction; the
    norms used only by diagnostics are computed on first access.
    """

    def __init__(self, h, u, grid: PeriodicGrid, order: int = 2,
                 lambda_min: float = DEFAULT_LAMBDA_MIN, check: bool = True):
        self.grid = grid
        self.order = order
        self.h = h
        self.u = u
        if check:
            check_finite(u, "u")
        self.h_inv = inverse_metric(h, lambda_min, check=check)
        self.dh = metric_derivatives(h, grid, order)
        self.christoffel = christoffel(h, self.h_inv, grid, order, dh=self.dh)
        self.ricci, self.scalar_curv = ricci(self.christoffel, self.h_inv, grid, order)
        self.du = gradient(u, grid, order)
        (self.grad_u, self.grad_u_norm_sq, self.hess_u,
         self.hess_u_norm_sq, self.lap_u) = scalar_ops(u, self.h_inv, self.christoffel, grid, order, du=self.du)

    @cached_property
    def riemann_norm_sq(self) -> np.ndarray:
        return riemann_norm_sq(self.h, self.h_inv, self.ricci, self.scalar_curv)

    @cached_property
    def s_tensor(self) -> np.ndarray:
        return self.ricci - np.einsum("i...,j...->ij...", self.du, self.du)

    @cached_property
    def s_scalar(self) -> np.ndarray:
        return self.scalar_curv - self.grad_u_norm_sq

    @cached_property
    def ricci_op_norm(self) -> np.ndarray:
        return operator_norm(self.ricci, self.h_inv)

    def laplacian(self, f) -> np.ndarray:
        return laplace_beltrami(f, self.h_inv, self.christoffel, self.grid, self.order)


def build_cache(h, u, grid: PeriodicGrid, order: int = 2, lambda_min: float = DEFAULT_LAMBDA_MIN,
                check: bool = True) -> GeometryCache:
    return GeometryCache(h, u, grid, order, lambda_min, check)
