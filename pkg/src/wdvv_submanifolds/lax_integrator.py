"""Transport for the linear problem whose compatibility is the Gauss-Ricci system.

The unknowns are the gradient ``p_k = da/du^k`` and the normal amplitudes
``b_a``. Along coordinate direction ``i`` they obey

    dp_j/du^i = lam * mu^{ab} w_{a,ij} b_b
    db_a/du^i = rho * eta^{kj} w_{a,ij} p_k

so transport is a linear connection on R^(N+L). Its loop holonomy is the
identity for every ``(lam, rho)`` exactly when the Gauss and Ricci equations
hold, which is what ``holonomy_defect`` measures.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .frobenius_algebra import metric_array
from .potential_field import (
    CompiledPolynomials,
    DimensionError,
    MetricMatrix,
    Polynomial,
    hessian_polynomials,
)
from .residuals import max_abs
from .submanifold_equations import second_forms

DEFAULT_PARAM_VALUES = (-1.0, -0.5, 0.5, 1.0, 2.0)
DEFAULT_SUBSTEPS = 64


@dataclass(frozen=True)
class SpectralParams:
    lam: float
    rho: float


@dataclass(frozen=True)
class LaxState:
    p: np.ndarray
    b: np.ndarray

    def vector(self) -> np.ndarray:
        return np.concatenate([self.p, self.b])

    @classmethod
    def from_vector(cls, x: np.ndarray, n: int) -> "LaxState":
        x = np.asarray(x, dtype=float)
        return cls(x[:n].copy(), x[n:].copy())


class LaxSystem:
    """Float coefficient fields of the linear problem for fixed ``psi``, ``eta``, ``mu``."""

    def __init__(self, psi: Sequence[Polynomial], eta_inv: MetricMatrix, mu_inv: MetricMatrix):
        if not psi:
            raise DimensionError("need at least one potential")
        self.n = psi[0].dim
        self.l = len(psi)
        if eta_inv.n != self.n or mu_inv.n != self.l:
            raise DimensionError("metric sizes do not match (N, L)")
        self.psi = tuple(psi)
        self.eta_inv = eta_inv.array(exact=False).astype(float)
        self.mu_inv = mu_inv.array(exact=False).astype(float)
        self._hess = CompiledPolynomials(np.stack([hessian_polynomials(p) for p in psi]))

    @classmethod
    def from_spec(cls, spec) -> "LaxSystem":
        return cls(spec.potentials, spec.eta_inv, spec.mu_inv)

    def forms(self, u) -> np.ndarray:
        return self._hess(u)

    def generator(self, u, direction, params: SpectralParams) -> np.ndarray:
        """Matrix ``sum_i direction_i M_i(u)`` acting on ``(p, b)``."""
        n = self.n
        w = np.einsum("aij,i->aj", self._hess(u), np.asarray(direction, dtype=float))
        m = np.zeros((n + self.l, n + self.l))
        m[:n, n:] = params.lam * w.T @ self.mu_inv
        m[n:, :n] = params.rho * w @ self.eta_inv
        return m


def rk4_linear_segment(x: np.ndarray, a: np.ndarray, b: np.ndarray, generator,
                       step: float) -> np.ndarray:
    """Integrate ``dx/dt = generator(u(t), b - a) @ x`` along ``u(t) = a + t (b - a)``.

    ``step`` bounds the max-norm coordinate length of each RK4 step; when it
    does not divide the segment the last step is shorter.
    """
    d = b - a
    length = float(np.max(np.abs(d)))
    if length == 0.0:
        return x
    full = int(np.floor(length / step + 1e-12))
    ts = [k * step / length for k in range(full + 1)]
    if ts[-1] < 1.0 - 1e-15:
        ts.append(1.0)
    else:
        ts[-1] = 1.0
    for t0, t1 in zip(ts[:-1], ts[1:]):
        dt = t1 - t0
        k1 = generator(a + t0 * d, d) @ x
        mid = generator(a + (t0 + dt / 2) * d, d)
        k2 = mid @ (x + dt / 2 * k1)
        k3 = mid @ (x + dt / 2 * k2)
        k4 = generator(a + t1 * d, d) @ (x + dt * k3)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def transport(state, path: Iterable, params: SpectralParams, system: LaxSystem,
              step: float) -> LaxState | np.ndarray:
    """Carry ``state`` along the polyline ``path`` with classical RK4.

    ``step`` is the largest coordinate (max-norm) length of one RK4 step;
    segments whose length is not a multiple of it end with a shorter step.
    ``state`` may be a ``LaxState``, a vector of length ``N+L``, or a matrix
    whose columns are transported together; the return type matches.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    pts = [np.asarray(p, dtype=float) for p in path]
    if any(p.shape != (system.n,) for p in pts):
        raise DimensionError(f"path points must have length {system.n}")
    as_state = isinstance(state, LaxState)
    x = state.vector() if as_state else np.array(state, dtype=float)
    if x.shape[0] != system.n + system.l:
        raise DimensionError(f"state must have {system.n + system.l} rows")
    def gen(u, d):
        return system.generator(u, d, params)

    for a, b in zip(pts[:-1], pts[1:]):
        x = rk4_linear_segment(x, a, b, gen, step)
    return LaxState.from_vector(x, system.n) if as_state else x


def rectangle_loop(base, h_loop: float, axes: tuple[int, int]) -> list[np.ndarray]:
    i, j = axes
    b = np.asarray(base, dtype=float)
    ei = np.zeros_like(b)
    ej = np.zeros_like(b)
    ei[i] = h_loop
    ej[j] = h_loop
    return [b, b + ei, b + ei + ej, b + ej, b]


def holonomy_defect(base, h_loop: float, axes: tuple[int, int], params: SpectralParams,
                    system: LaxSystem, substeps: int = DEFAULT_SUBSTEPS) -> float:
    """Max deviation from the identity of the holonomy around an axis rectangle."""
    i, j = axes
    if i == j:
        raise ValueError("loop axes must differ")
    if h_loop == 0:
        return 0.0
    eye = np.eye(system.n + system.l)
    hol = transport(eye, rectangle_loop(base, h_loop, axes), params, system,
                    abs(h_loop) / substeps)
    return float(np.max(np.abs(hol - eye)))


def holonomy_table(base, h_loops: Sequence[float], system: LaxSystem,
                   param_values: Sequence[float] = DEFAULT_PARAM_VALUES,
                   substeps: int = DEFAULT_SUBSTEPS) -> list[dict]:
    """Worst defect over all axis pairs for every ``(lam, rho, h_loop)``."""
    rows = []
    pairs = list(itertools.combinations(range(system.n), 2))
    for lam, rho in itertools.product(param_values, repeat=2):
        params = SpectralParams(lam, rho)
        for h in h_loops:
            defect = max((holonomy_defect(base, h, ax, params, system, substeps) for ax in pairs),
                         default=0.0)
            rows.append({"lambda": lam, "rho": rho, "h_loop": h, "defect": defect})
    return rows


def scaling_exponent(h_loops: Sequence[float], defects: Sequence[float]) -> float:
    """Least-squares slope of ``log(defect)`` against ``log(h_loop)``."""
    slope, _ = np.polyfit(np.log(np.asarray(h_loops)), np.log(np.asarray(defects)), 1)
    return float(slope)


def consistency_tensors(psi: Sequence[Polynomial], eta_inv: MetricMatrix,
                        mu_inv: MetricMatrix, point):
    """Defects of the two algebraic compatibility identities.

    ``B1[i, j, k, s] = mu^ab (w_a,ij w_b,ks - w_a,ik w_b,js)`` and
    ``B2[a, c, i, l] = eta^kj (w_a,ij w_c,kl - w_a,lj w_c,ki)``.
    In terms of the Gauss and Ricci tensors, ``B1[i, j, k, s] == G[i, s, j, k]``
    and ``B2 == R``.
    """
    forms = second_forms(psi, point)
    w = forms.forms
    if eta_inv.n != forms.n or mu_inv.n != forms.l:
        raise DimensionError("metric sizes do not match (N, L)")
    mu = metric_array(mu_inv, point)
    eta = metric_array(eta_inv, point)
    if w.dtype != object:
        mu, eta = mu.astype(float), eta.astype(float)
    b1 = np.einsum("ab,aij,bks->ijks", mu, w, w) - np.einsum("ab,aik,bjs->ijks", mu, w, w)
    b2 = np.einsum("kj,aij,ckl->acil", eta, w, w) - np.einsum("kj,alj,cki->acil", eta, w, w)
    return b1, b2


def consistency_residual(psi, eta_inv, mu_inv, point) -> tuple:
    b1, b2 = consistency_tensors(psi, eta_inv, mu_inv, point)
    return max_abs(b1)[0], max_abs(b2)[0]
