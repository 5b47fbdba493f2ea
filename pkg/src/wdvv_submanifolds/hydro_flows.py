"""Hydrodynamic-type flows ``u_t = V_a(u) u_x`` with ``V_a = eta^{-1} Hess(psi_a)``.

Fields live on a periodic grid of ``M`` points on ``[0, 1)``. Space uses
fourth-order central differences, time uses classical RK4. These are
desk-scale experiments: small smooth data, short horizons.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .potential_field import (
    CompiledPolynomials,
    DimensionError,
    MetricMatrix,
    Polynomial,
    hessian_polynomials,
)

MIN_POINTS = 16


class CFLWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class GridState:
    values: np.ndarray  # shape (M, N)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("values must have shape (M, N)")
        if v.shape[0] < MIN_POINTS:
            raise ValueError(f"need at least {MIN_POINTS} grid points")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.m) / self.m

    @property
    def dx(self) -> float:
        return 1.0 / self.m

    @classmethod
    def single_mode(cls, base: Sequence[float], m: int, amplitude: float,
                    mode: int = 1, phases: Sequence[float] | None = None) -> "GridState":
        """``u^i(x) = base_i + amplitude * sin(2 pi mode x + phase_i)``."""
        base = np.asarray(base, dtype=float)
        if phases is None:
            phases = np.arange(len(base)) * (2 * math.pi / (len(base) + 1))
        x = np.arange(m) / m
        vals = base[None, :] + amplitude * np.sin(2 * math.pi * mode * x[:, None] + np.asarray(phases)[None, :])
        return cls(vals)


def ddx(values: np.ndarray, dx: float) -> np.ndarray:
    """Fourth-order periodic central difference along axis 0."""
    return (8.0 * (np.roll(values, -1, 0) - np.roll(values, 1, 0))
            - (np.roll(values, -2, 0) - np.roll(values, 2, 0))) / (12.0 * dx)


def spectral_filter(values: np.ndarray) -> np.ndarray:
    """Zero the top third of the Fourier modes along axis 0."""
    m = values.shape[0]
    spec = np.fft.rfft(values, axis=0)
    k = np.arange(spec.shape[0])
    spec[k > m // 3] = 0.0
    return np.fft.irfft(spec, n=m, axis=0)


class FlowSystem:
    """Velocity matrices of all flows for fixed potentials and metric."""

    def __init__(self, psi: Sequence[Polynomial], eta_inv: MetricMatrix):
        self.n = psi[0].dim
        if eta_inv.n != self.n:
            raise DimensionError("eta does not match the potentials")
        self.eta_inv = eta_inv.array(exact=False).astype(float)
        self._hess = CompiledPolynomials(np.stack([hessian_polynomials(p) for p in psi]))
        self.l = len(psi)

    @classmethod
    def from_spec(cls, spec) -> "FlowSystem":
        return cls(spec.potentials, spec.eta_inv)

    def velocity(self, alpha: int, u) -> np.ndarray:
        """``V_alpha`` at one point or at each row of ``u``."""
        u = np.asarray(u, dtype=float)
        if u.ndim == 1:
            return self.eta_inv @ self._hess(u)[alpha]
        return np.einsum("ik,mkj->mij", self.eta_inv, self._hess.evaluate_many(u)[:, alpha])

    def rhs(self, alpha: int, values: np.ndarray, dx: float) -> np.ndarray:
        return np.einsum("mij,mj->mi", self.velocity(alpha, values), ddx(values, dx))


def _cfl_number(system: FlowSystem, alpha: int, values: np.ndarray, dt: float, dx: float) -> float:
    v = system.velocity(alpha, values)
    speed = max(float(np.max(np.abs(np.linalg.eigvals(vm)))) for vm in v)
    return dt * speed / dx


def evolve(state: GridState, alpha: int, dt: float, steps: int, system: FlowSystem,
           filtered: bool = False, strict_cfl: bool = False) -> GridState:
    """Advance flow ``alpha`` by ``steps`` RK4 steps of size ``dt``.

    A CFL number above 0.5 triggers a ``CFLWarning`` (or ``ValueError`` with
    ``strict_cfl``). Non-finite values abort with ``FloatingPointError``.
    """
    if not 0 <= alpha < system.l:
        raise IndexError(f"flow index {alpha} out of range")
    if state.values.shape[1] != system.n:
        raise DimensionError("state has the wrong number of components")
    u = state.values.copy()
    dx = state.dx
    cfl = _cfl_number(system, alpha, u, dt, dx)
    if cfl > 0.5:
        msg = f"CFL number {cfl:.3g} exceeds 0.5"
        if strict_cfl:
            raise ValueError(msg)
        warnings.warn(msg, CFLWarning, stacklevel=2)
    f = lambda v: system.rhs(alpha, v, dx)  # noqa: E731
    for step in range(steps):
        k1 = f(u)
        k2 = f(u + dt / 2 * k1)
        k3 = f(u + dt / 2 * k2)
        k4 = f(u + dt * k3)
        u = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if filtered:
            u = spectral_filter(u)
        if not np.all(np.isfinite(u)):
            raise FloatingPointError(f"non-finite values after step {step + 1}")
    return GridState(u)


def commutator_defect(state0: GridState, alpha: int, beta: int, dt: float, steps: int,
                      system: FlowSystem, filtered: bool = False) -> float:
    """Max-norm gap between evolving ``alpha`` then ``beta`` and the reverse."""
    if alpha == beta:
        return 0.0
    ab = evolve(evolve(state0, alpha, dt, steps, system, filtered), beta, dt, steps, system, filtered)
    ba = evolve(evolve(state0, beta, dt, steps, system, filtered), alpha, dt, steps, system, filtered)
    return float(np.max(np.abs(ab.values - ba.values)))


def norm_series(state: GridState, alpha: int, dt: float, steps: int, system: FlowSystem,
                filtered: bool = False) -> list[dict]:
    """Per-step ``t``, max-norm and L2-norm of the deviation from the mean state."""
    rows = []
    mean = state.values.mean(axis=0)
    cur = state
    for k in range(steps + 1):
        dev = cur.values - mean
        rows.append({"step": k, "t": k * dt, "max_norm": float(np.max(np.abs(dev))),
                     "l2_norm": float(np.sqrt(np.mean(dev**2)))})
        if k < steps:
            cur = evolve(cur, alpha, dt, 1, system, filtered)
    return rows
