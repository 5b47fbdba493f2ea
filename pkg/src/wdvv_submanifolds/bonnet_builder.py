"""Reconstruct the immersion from its fundamental forms by frame integration.

In flat coordinates with zero torsion the moving frame obeys

    dT_i/du^j  = w_{b,ij} mu^{ba} n_a
    dn_a/du^i  = -w_{a,ij} eta^{jk} T_k
    dr/du^i    = T_i

The frame at the base point is the identity basis of an ambient space with
scalar product ``G = blockdiag(eta, mu)`` (covariant), which fixes the motion
freedom. Nodes of the problem grid are reached by axis-aligned sweeps; the
result is path independent exactly when the Gauss and Ricci equations hold.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import block_diag

from .lax_integrator import rk4_linear_segment
from .potential_field import (
    CompiledPolynomials,
    DimensionError,
    MetricMatrix,
    Polynomial,
    ProblemSpec,
    hessian_polynomials,
    invert_metric,
)

DEFAULT_CELL_SUBSTEPS = 32
DEFAULT_STENCIL = 5


class GridTooCoarseError(ValueError):
    pass


@dataclass(frozen=True)
class AmbientForm:
    matrix: np.ndarray

    def __post_init__(self):
        if not np.allclose(self.matrix, self.matrix.T, rtol=0, atol=0):
            raise ValueError("ambient form must be symmetric")

    def dot(self, x, y) -> np.ndarray:
        """Pairing of the last axes of ``x`` and ``y`` (batched)."""
        return np.einsum("...i,ij,...j->...", x, self.matrix, y)

    def signature(self) -> tuple[int, int]:
        w = np.linalg.eigvalsh(self.matrix)
        return int((w > 0).sum()), int((w < 0).sum())


@dataclass(frozen=True)
class Frame:
    """Position and frame vectors stacked as rows ``[r, T_1..T_N, n_1..n_L]``."""

    rows: np.ndarray
    n: int

    @property
    def position(self) -> np.ndarray:
        return self.rows[0]

    @property
    def tangents(self) -> np.ndarray:
        return self.rows[1:1 + self.n]

    @property
    def normals(self) -> np.ndarray:
        return self.rows[1 + self.n:]

    def gram(self, form: AmbientForm) -> np.ndarray:
        f = self.rows[1:]
        return f @ form.matrix @ f.T


@dataclass(frozen=True)
class ImmersionGrid:
    axes: tuple  # per-axis float node coordinates
    frames: np.ndarray  # shape (k_1, ..., k_N, 1 + N + L, N + L)
    n: int
    l: int

    def frame(self, index: tuple) -> Frame:
        return Frame(self.frames[index], self.n)

    @property
    def positions(self) -> np.ndarray:
        return self.frames[..., 0, :]

    @property
    def tangents(self) -> np.ndarray:
        return self.frames[..., 1:1 + self.n, :]

    @property
    def normals(self) -> np.ndarray:
        return self.frames[..., 1 + self.n:, :]

    def nodes(self):
        """Yield ``(index, coordinates)`` for every node in C order."""
        for idx in np.ndindex(*[len(a) for a in self.axes]):
            yield idx, np.array([self.axes[d][i] for d, i in enumerate(idx)])


def initial_frame(eta: MetricMatrix, mu: MetricMatrix) -> tuple[Frame, AmbientForm]:
    """Identity frame at the origin for the ambient form ``blockdiag(eta, mu)``.

    Both metrics are covariant here.
    """
    g = block_diag(eta.array(exact=False).astype(float), mu.array(exact=False).astype(float))
    n, l = eta.n, mu.n
    rows = np.vstack([np.zeros((1, n + l)), np.eye(n + l)])
    return Frame(rows, n), AmbientForm(g)


class FrameEquations:
    """Float generator of the linear frame system for given potentials."""

    def __init__(self, psi: Sequence[Polynomial], eta_inv: MetricMatrix, mu_inv: MetricMatrix):
        self.n = psi[0].dim
        self.l = len(psi)
        if eta_inv.n != self.n or mu_inv.n != self.l:
            raise DimensionError("metric sizes do not match (N, L)")
        self.eta_inv = eta_inv.array(exact=False).astype(float)
        self.mu_inv = mu_inv.array(exact=False).astype(float)
        self.hessians = CompiledPolynomials(np.stack([hessian_polynomials(p) for p in psi]))

    def __call__(self, u, d) -> np.ndarray:
        n, l = self.n, self.l
        w = np.einsum("aij,j->ai", self.hessians(u), d)
        k = np.zeros((1 + n + l, 1 + n + l))
        k[0, 1:1 + n] = d
        k[1:1 + n, 1 + n:] = w.T @ self.mu_inv
        k[1 + n:, 1:1 + n] = -w @ self.eta_inv
        return k


def _sweep_line(frames_along, start_value, values, axis, eqs, step):
    """Integrate outward from ``start_value`` to every entry of ``values`` on one axis."""
    start_rows, base_point = frames_along
    out = [None] * len(values)
    order_up = [m for m in range(len(values)) if values[m] >= start_value]
    order_down = [m for m in reversed(range(len(values))) if values[m] < start_value]
    for chain in (order_up, order_down):
        x, pos = start_rows, base_point.copy()
        for m in chain:
            target = pos.copy()
            target[axis] = values[m]
            x = rk4_linear_segment(x, pos, target, eqs, step)
            pos = target
            out[m] = x
    return out


def integrate_frame(spec: ProblemSpec, order: Sequence[int] | None = None,
                    substeps: int = DEFAULT_CELL_SUBSTEPS,
                    initial_rows: np.ndarray | None = None) -> ImmersionGrid:
    """Frames and positions at every grid node of ``spec.domain``.

    Axes are swept in ``order`` (default ``0, 1, ..., N-1``): first along the
    first axis through the base point, then along the second axis from each
    of those nodes, and so on. ``substeps`` RK4 steps are taken per grid cell.
    ``initial_rows`` replaces the identity frame at the base point.
    """
    n, l = spec.n, spec.l
    order = list(range(n)) if order is None else list(order)
    if sorted(order) != list(range(n)):
        raise ValueError(f"order must be a permutation of 0..{n - 1}")
    eqs = FrameEquations(spec.potentials, spec.eta_inv, spec.mu_inv)
    axes = tuple(tuple(float(v) for v in spec.domain.axis_values(a)) for a in range(n))
    base = np.array([float(b) for b in spec.domain.base])
    step = float(spec.domain.spacing()) / substeps
    if initial_rows is None:
        initial_rows = initial_frame(spec.eta, spec.mu)[0].rows
    rows0 = np.asarray(initial_rows, dtype=float)
    if rows0.shape != (1 + n + l, n + l):
        raise DimensionError(f"initial frame must have shape {(1 + n + l, n + l)}")

    # partial results: {index tuple over processed axes: (rows, coordinates)}
    partial = {(): (rows0, base)}
    for depth, axis in enumerate(order):
        nxt = {}
        for key, (rows, point) in partial.items():
            line = _sweep_line((rows, point), base[axis], axes[axis], axis, eqs, step)
            for m, x in enumerate(line):
                p = point.copy()
                p[axis] = axes[axis][m]
                nxt[key + ((axis, m),)] = (x, p)
        partial = nxt

    frames = np.empty([len(a) for a in axes] + [1 + n + l, n + l])
    for key, (rows, _) in partial.items():
        idx = [0] * n
        for axis, m in key:
            idx[axis] = m
        frames[tuple(idx)] = rows
    return ImmersionGrid(axes, frames, n, l)


def _require(grid: ImmersionGrid, minimum: int = 3) -> None:
    if any(len(a) < minimum for a in grid.axes):
        raise GridTooCoarseError(f"need at least {minimum} nodes per axis")


def fd_weights(offsets: Sequence[float]) -> np.ndarray:
    """Weights ``w`` with ``sum_m w_m f(x + s_m) ~ f'(x)``, exact for polynomials of degree < len(offsets)."""
    s = np.asarray(offsets, dtype=float)
    k = len(s)
    vander = np.vander(s, k, increasing=True).T  # row p: s**p
    rhs = np.zeros(k)
    rhs[1] = 1.0
    return np.linalg.solve(vander, rhs)


def _axis_derivative(values: np.ndarray, coords: Sequence[float], axis: int,
                     stencil: int) -> np.ndarray:
    """First derivative of ``values`` along grid ``axis`` from a sliding stencil."""
    k = len(coords)
    width = min(stencil, k)
    out = np.empty_like(values)
    moved = np.moveaxis(values, axis, 0)
    res = np.moveaxis(out, axis, 0)
    for m in range(k):
        lo = min(max(m - width // 2, 0), k - width)
        idx = list(range(lo, lo + width))
        w = fd_weights([coords[q] - coords[m] for q in idx])
        res[m] = np.tensordot(w, moved[idx], axes=(0, 0))
    return out


def induced_metric_deviation(grid: ImmersionGrid, form: AmbientForm, eta: MetricMatrix) -> np.ndarray:
    """Per-node max ``|(T_i, T_j) - eta_ij|``."""
    t = grid.tangents
    gram = np.einsum("...ia,ab,...jb->...ij", t, form.matrix, t)
    target = eta.array(exact=False).astype(float)
    return np.max(np.abs(gram - target), axis=(-2, -1))


def verify_induced_metric(grid: ImmersionGrid, form: AmbientForm, eta: MetricMatrix | None = None) -> float:
    """Largest deviation of the induced first fundamental form from ``eta``.

    ``eta`` defaults to the tangent block of the ambient form.
    """
    if eta is None:
        eta = MetricMatrix(form.matrix[:grid.n, :grid.n].copy(), exact=False)
    return float(np.max(induced_metric_deviation(grid, form, eta)))


def gram_drift(grid: ImmersionGrid, form: AmbientForm) -> np.ndarray:
    """Per-node max ``|Gram(T, n) - G|``."""
    f = grid.frames[..., 1:, :]
    gram = np.einsum("...ia,ab,...jb->...ij", f, form.matrix, f)
    return np.max(np.abs(gram - form.matrix), axis=(-2, -1))


def second_form_values(grid: ImmersionGrid, form: AmbientForm,
                       stencil: int = DEFAULT_STENCIL) -> np.ndarray:
    """``(n_a, r_ij)`` from finite differences of the tangents; shape ``(..., L, N, N)``."""
    _require(grid)
    t = grid.tangents
    d = np.stack([_axis_derivative(t, grid.axes[j], j, stencil) for j in range(grid.n)], axis=-2)
    # d[..., i, j, :] = dT_i/du^j
    return np.einsum("...aq,qp,...ijp->...aij", grid.normals, form.matrix, d)


def verify_second_forms(grid: ImmersionGrid, form: AmbientForm, psi: Sequence[Polynomial],
                        stencil: int = DEFAULT_STENCIL) -> float:
    """Largest deviation of the reconstructed second forms from ``Hess(psi_a)``.

    Derivatives of the tangents come from ``stencil``-point finite differences
    on the integration grid (order ``stencil - 1`` where the grid allows).
    """
    measured = second_form_values(grid, form, stencil)
    hess = CompiledPolynomials(np.stack([hessian_polynomials(p) for p in psi]))
    worst = 0.0
    for idx, u in grid.nodes():
        worst = max(worst, float(np.max(np.abs(measured[idx] - hess(u)))))
    return worst


def torsion_values(grid: ImmersionGrid, form: AmbientForm,
                   stencil: int = DEFAULT_STENCIL) -> np.ndarray:
    """``kappa[..., a, b, i] = (dn_a/du^i, n_b)``."""
    _require(grid)
    nrm = grid.normals
    d = np.stack([_axis_derivative(nrm, grid.axes[i], i, stencil) for i in range(grid.n)], axis=-2)
    # d[..., a, i, :] = dn_a/du^i
    return np.einsum("...aip,pq,...bq->...abi", d, form.matrix, nrm)


def verify_torsion(grid: ImmersionGrid, form: AmbientForm, stencil: int = DEFAULT_STENCIL) -> float:
    """Largest off-diagonal torsion coefficient ``|(dn_a/du^i, n_b)|``, ``a != b``."""
    kappa = torsion_values(grid, form, stencil)
    if grid.l < 2:
        return 0.0
    mask = ~np.eye(grid.l, dtype=bool)
    return float(np.max(np.abs(kappa[..., mask, :])))


def path_dependence(spec: ProblemSpec, orders: Sequence[Sequence[int]] | None = None,
                    substeps: int = DEFAULT_CELL_SUBSTEPS) -> np.ndarray:
    """Per-node max difference between frames reached by different sweep orders."""
    n = spec.n
    if orders is None:
        orders = [list(range(n)), list(reversed(range(n)))]
    grids = [integrate_frame(spec, o, substeps).frames for o in orders]
    diff = np.zeros(grids[0].shape[:n])
    for g in grids[1:]:
        diff = np.maximum(diff, np.max(np.abs(g - grids[0]), axis=(-2, -1)))
    return diff


def reconstruct(spec: ProblemSpec, substeps: int = DEFAULT_CELL_SUBSTEPS):
    """Integrated grid and ambient form for ``spec`` in the default sweep order."""
    eta = invert_metric(spec.eta_inv)
    mu = invert_metric(spec.mu_inv)
    _, form = initial_frame(eta, mu)
    return integrate_frame(spec, substeps=substeps), form
