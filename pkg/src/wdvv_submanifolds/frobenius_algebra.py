"""Pointwise Frobenius algebras of a potential and their defect measures.

Structure constants are stored as ``c[k, i, j]`` meaning the coefficient of
``e_k`` in ``e_i * e_j``. Every function accepts exact (``Fraction``) or float
points; the arithmetic of the point decides the arithmetic of the result.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .potential_field import (
    DimensionError,
    MetricMatrix,
    Polynomial,
    hessian,
    is_exact,
    third_tensor,
)
from .residuals import ResidualReport, max_abs, report


def metric_array(m: MetricMatrix, point) -> np.ndarray:
    """Metric entries in the arithmetic dictated by ``point``."""
    return m.array(exact=is_exact(point) and m.exact)


def _check_dims(n: int, *metrics: MetricMatrix) -> None:
    for m in metrics:
        if m.n != n:
            raise DimensionError(f"metric is {m.n}x{m.n}, expected {n}x{n}")


@dataclass(frozen=True)
class StructureConstants:
    point: tuple
    c: np.ndarray  # c[k, i, j]

    def __post_init__(self):
        if not np.array_equal(self.c, self.c.transpose(0, 2, 1)):
            raise ValueError("structure constants must be symmetric in the lower indices")

    @property
    def n(self) -> int:
        return self.c.shape[0]

    def multiply(self, x: Sequence, y: Sequence) -> np.ndarray:
        """Product of two vectors given in the basis ``e_1..e_N``."""
        return np.einsum("kij,i,j->k", self.c, np.asarray(x), np.asarray(y))


@dataclass(frozen=True)
class WeingartenSet:
    point: tuple
    operators: tuple  # one N x N array per normal; operators[a][i, j] = (A_a)^i_j


def structure_constants(phi: Polynomial, eta_inv: MetricMatrix, point) -> StructureConstants:
    """``c^k_ij = eta^{ks} Phi_{sij}`` at ``point``."""
    _check_dims(phi.dim, eta_inv)
    t = third_tensor(phi, point)
    c = np.einsum("ks,sij->kij", metric_array(eta_inv, point), t)
    return StructureConstants(tuple(point), c)


def associativity_tensor(c: StructureConstants) -> np.ndarray:
    """``D[m, i, j, k]``: the ``e_m`` component of ``(e_i e_j) e_k - e_i (e_j e_k)``."""
    cc = c.c
    return np.einsum("sij,msk->mijk", cc, cc) - np.einsum("sjk,mis->mijk", cc, cc)


def associativity_residual(c: StructureConstants) -> object:
    """Max-norm of the associator; zero iff the algebra is associative."""
    return max_abs(associativity_tensor(c))[0]


def invariance_tensor(c: StructureConstants, eta: MetricMatrix) -> np.ndarray:
    """``<e_i e_j, e_k> - <e_i, e_j e_k>`` indexed ``[i, j, k]``; ``eta`` covariant."""
    _check_dims(c.n, eta)
    g = metric_array(eta, c.point)
    return np.einsum("sij,sk->ijk", c.c, g) - np.einsum("sjk,is->ijk", c.c, g)


def invariance_residual(c: StructureConstants, eta: MetricMatrix) -> object:
    return max_abs(invariance_tensor(c, eta))[0]


def wdvv_tensor(phi: Polynomial, eta_inv: MetricMatrix, point) -> np.ndarray:
    """``W[i, j, m, n] = Phi_ijk eta^kl Phi_lmn - Phi_imk eta^kl Phi_ljn``."""
    _check_dims(phi.dim, eta_inv)
    t = third_tensor(phi, point)
    g = metric_array(eta_inv, point)
    return np.einsum("ijk,kl,lmn->ijmn", t, g, t) - np.einsum("imk,kl,ljn->ijmn", t, g, t)


def wdvv_residual(phi: Polynomial, eta_inv: MetricMatrix, point) -> ResidualReport:
    return report("wdvv", wdvv_tensor(phi, eta_inv, point), point)


def lowered_associativity_tensor(c: StructureConstants, eta: MetricMatrix) -> np.ndarray:
    """Associator with its output index lowered: ``[i, j, k, n]``.

    For ``c`` built from a potential this equals ``wdvv_tensor`` with its last
    two indices swapped: ``D_low[i, j, k, n] == W[i, j, n, k]``.
    """
    d = associativity_tensor(c)
    g = metric_array(eta, c.point)
    return np.einsum("mijk,mn->ijkn", d, g)


def weingarten_operators(psi: Sequence[Polynomial], eta_inv: MetricMatrix, point) -> WeingartenSet:
    """Shape operators ``A_a = -eta^{-1} Hess(psi_a)`` at ``point``.

    In the potential case ``psi = grad Phi`` one has ``-A_a[k, j] == c[k, a, j]``,
    i.e. the shape operators are minus the multiplication operators.
    """
    for p in psi:
        _check_dims(p.dim, eta_inv)
    g = metric_array(eta_inv, point)
    ops = tuple(-(g @ hessian(p, point)) for p in psi)
    return WeingartenSet(tuple(point), ops)


def weingarten_commutator_defect(w: WeingartenSet) -> object:
    """Largest entry of any commutator ``[A_a, A_b]`` with ``a < b``."""
    ops = w.operators
    best = Fraction(0) if ops and ops[0].dtype == object else 0.0
    for a in range(len(ops)):
        for b in range(a + 1, len(ops)):
            value = max_abs(ops[a] @ ops[b] - ops[b] @ ops[a])[0]
            if value > best:
                best = value
    return best
