"""Gauss, Ricci and Codazzi residuals of flat torsionless submanifolds.

All quantities live in flat coordinates, where the second fundamental forms
are the Hessians of potentials ``psi_a``. Residual tensors are returned so that
identities between them can be compared entry by entry; the ``*_residual``
wrappers reduce to max-norm reports.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .frobenius_algebra import metric_array, wdvv_tensor
from .potential_field import (
    DimensionError,
    MetricMatrix,
    Polynomial,
    gradient_potentials,
    hessian,
    hessian_polynomials,
    is_exact,
)
from .residuals import ResidualReport, max_abs, report


@dataclass(frozen=True)
class SecondFormSet:
    point: tuple
    forms: np.ndarray  # forms[a, i, j]

    def __post_init__(self):
        if not np.array_equal(self.forms, self.forms.transpose(0, 2, 1)):
            raise ValueError("second fundamental forms must be symmetric")

    @property
    def n(self) -> int:
        return self.forms.shape[1]

    @property
    def l(self) -> int:
        return self.forms.shape[0]


def second_forms(psi: Sequence[Polynomial], point) -> SecondFormSet:
    """Hessians of every ``psi_a`` at ``point``, stacked as ``[a, i, j]``."""
    if not psi:
        raise DimensionError("need at least one potential")
    dims = {p.dim for p in psi}
    if len(dims) != 1:
        raise DimensionError(f"potentials have mixed dimensions {sorted(dims)}")
    forms = np.stack([hessian(p, point) for p in psi])
    return SecondFormSet(tuple(point), forms)


def _metric_for(forms: SecondFormSet, m: MetricMatrix) -> np.ndarray:
    g = metric_array(m, forms.point)
    if forms.forms.dtype != object:
        g = g.astype(float)
    return g


def gauss_tensor(forms: SecondFormSet, mu_inv: MetricMatrix) -> np.ndarray:
    """``G[i, j, k, l] = mu^ab (w_a,ik w_b,jl - w_a,il w_b,jk)``."""
    if mu_inv.n != forms.l:
        raise DimensionError(f"mu is {mu_inv.n}x{mu_inv.n} but there are {forms.l} forms")
    w, g = forms.forms, _metric_for(forms, mu_inv)
    return np.einsum("ab,aik,bjl->ijkl", g, w, w) - np.einsum("ab,ail,bjk->ijkl", g, w, w)


def ricci_tensor(forms: SecondFormSet, eta_inv: MetricMatrix) -> np.ndarray:
    """``R[a, b, k, l] = eta^ij (w_a,ik w_b,jl - w_a,il w_b,jk)``."""
    if eta_inv.n != forms.n:
        raise DimensionError(f"eta is {eta_inv.n}x{eta_inv.n} but forms are {forms.n}x{forms.n}")
    w, g = forms.forms, _metric_for(forms, eta_inv)
    return np.einsum("ij,aik,bjl->abkl", g, w, w) - np.einsum("ij,ail,bjk->abkl", g, w, w)


def gauss_residual(forms: SecondFormSet, mu_inv: MetricMatrix) -> ResidualReport:
    return report("gauss", gauss_tensor(forms, mu_inv), forms.point)


def ricci_residual(forms: SecondFormSet, eta_inv: MetricMatrix) -> ResidualReport:
    return report("ricci", ricci_tensor(forms, eta_inv), forms.point)


FormField = Callable[[tuple], np.ndarray]


def _form_derivatives(forms, point, h):
    """``d[a, i, j, k] = d w_a,ij / du^k`` at ``point``."""
    first = forms[0]
    if isinstance(first, Polynomial):
        # potentials: third partials, exact
        n = first.dim
        out = []
        for p in forms:
            hp = hessian_polynomials(p)
            out.append([[[hp[i, j].diff(k).evaluate(point) for k in range(n)]
                         for j in range(n)] for i in range(n)])
        return np.array(out, dtype=object if is_exact(point) else float)
    if isinstance(first, np.ndarray) and first.dtype == object:
        # per-form matrices of polynomials
        n = first.shape[0]
        out = []
        for m in forms:
            out.append([[[m[i, j].diff(k).evaluate(point) for k in range(n)]
                         for j in range(n)] for i in range(n)])
        return np.array(out, dtype=object if is_exact(point) else float)
    # callables u -> array[a, i, j]: central differences with step h
    if h <= 0:
        raise ValueError("step must be positive")
    field = forms[0] if len(forms) == 1 else None
    if field is None:
        raise TypeError("pass a single callable returning all forms")
    x = np.asarray(point, dtype=float)
    derivs = []
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = h
        derivs.append((np.asarray(field(x + e)) - np.asarray(field(x - e))) / (2 * h))
    return np.stack(derivs, axis=-1)


def codazzi_tensor(forms, point, h: float = 1e-4) -> np.ndarray:
    """``C[a, i, j, k] = d_k w_a,ij - d_j w_a,ik``.

    ``forms`` is either a list of potentials (Hessian forms, differentiated
    exactly), a list of ``N x N`` object arrays of polynomials (arbitrary
    form fields, differentiated exactly), or a one-element list holding a
    callable ``u -> forms[a, i, j]`` (central differences with step ``h``).
    """
    d = _form_derivatives(list(forms), point, h)
    return d - d.transpose(0, 1, 3, 2)


def codazzi_residual(forms, point, h: float = 1e-4) -> object:
    return max_abs(codazzi_tensor(forms, point, h))[0]


@dataclass(frozen=True)
class ReductionResult:
    holds: bool
    deviation: object
    worst_point: tuple


def reduction_tensors(phi: Polynomial, eta_inv: MetricMatrix, c, point):
    """Gauss, Ricci and re-indexed WDVV tensors for ``psi = grad phi``, ``mu^-1 = c eta^-1``.

    Substituting ``psi_a = Phi_a`` gives, entry by entry,
    ``G[a, b, k, l] == c * R[a, b, k, l]`` and ``R[m, n, k, l] == W[m, k, l, n]``
    where ``W`` is ``wdvv_tensor``. The third returned tensor is ``W`` already
    permuted into the ``[m, n, k, l]`` layout.
    """
    psi = gradient_potentials(phi)
    forms = second_forms(psi, point)
    mu_inv = eta_inv.scaled(c)
    g = gauss_tensor(forms, mu_inv)
    r = ricci_tensor(forms, eta_inv)
    w = wdvv_tensor(phi, eta_inv, point).transpose(0, 3, 1, 2)
    return g, r, w


def reduction_check(phi: Polynomial, eta_inv: MetricMatrix, c, points, tol: float = 0.0) -> ReductionResult:
    """Check that Gauss, Ricci and WDVV tensors coincide under the potential reduction.

    Holds for every ``phi``, solution or not. Returns the largest entry-wise
    deviation of ``G - c R`` and ``R - W`` over ``points``.
    """
    if eta_inv.exact and not isinstance(c, float):
        c = Fraction(c)
    if c == 0:
        raise ValueError("scale c must be nonzero")
    if eta_inv.n != phi.dim:
        raise DimensionError("eta and phi disagree on the dimension")
    worst, worst_point = None, ()
    for p in points:
        g, r, w = reduction_tensors(phi, eta_inv, c, p)
        dev = max(max_abs(g - c * r)[0], max_abs(r - w)[0])
        if worst is None or dev > worst:
            worst, worst_point = dev, tuple(p)
    if worst is None:
        worst = Fraction(0)
    return ReductionResult(worst <= tol, worst, worst_point)


def ambient_signature(eta_inv: MetricMatrix, mu_inv: MetricMatrix) -> tuple[int, int]:
    """Signature of the ambient space: sum of the tangent and normal signatures."""
    p1, n1 = eta_inv.signature()
    p2, n2 = mu_inv.signature()
    return p1 + p2, n1 + n2
