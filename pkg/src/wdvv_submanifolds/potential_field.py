"""Exact sparse polynomials, constant metrics and the problem container.

Polynomials carry exact rational coefficients. Evaluating at a point made of
``Fraction`` values gives an exact result; evaluating at floats gives a float.
Every tensor-valued helper returns a numpy array, of ``object`` dtype in the
exact case and ``float64`` otherwise, so the same contraction code serves both.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


class DimensionError(ValueError):
    """Operands disagree about the problem dimension."""


class NondegeneracyError(ValueError):
    """A metric that must be invertible is (numerically) singular."""


class ProblemFormatError(ValueError):
    """A problem file does not parse or violates an invariant."""


def to_fraction(value) -> Fraction:
    """Parse an exact scalar: int, Fraction, or a ``"p/q"`` / integer string.

    Floats are rejected on purpose; exact inputs must be written exactly.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rational numbers")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, str):
        text = value.strip()
        try:
            if "." in text or "e" in text.lower():
                raise ValueError(text)
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational string: {value!r}") from exc
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def is_exact(point) -> bool:
    return all(isinstance(x, (int, Fraction)) for x in point)


def _zeros(shape, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape, dtype=float)


# --------------------------------------------------------------------------
# polynomials


class Polynomial:
    """Sparse multivariate polynomial in ``u^1..u^n`` with rational coefficients.

    ``terms`` maps exponent tuples to nonzero ``Fraction`` coefficients.
    Instances are immutable and hashable.

    >>> p = Polynomial(2, {(1, 1): 1})
    >>> p.partial((1, 1))
    Polynomial(2, {(0, 0): Fraction(1, 1)})
    """

    __slots__ = ("dim", "terms", "_hash")

    def __init__(self, dim: int, terms: Mapping[Sequence[int], object] | None = None):
        if dim < 0:
            raise ValueError("dimension must be nonnegative")
        clean: dict[tuple[int, ...], Fraction] = {}
        for exps, coeff in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != dim:
                raise DimensionError(f"exponent {exps} has length {len(exps)}, expected {dim}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = clean.get(exps, Fraction(0)) + to_fraction(coeff)
            if c:
                clean[exps] = c
            else:
                clean.pop(exps, None)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "terms", dict(sorted(clean.items())))
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    # construction helpers
    @classmethod
    def zero(cls, dim: int) -> "Polynomial":
        return cls(dim)

    @classmethod
    def constant(cls, dim: int, value) -> "Polynomial":
        return cls(dim, {(0,) * dim: value})

    @classmethod
    def monomial(cls, exps: Sequence[int], coeff=1) -> "Polynomial":
        return cls(len(exps), {tuple(exps): coeff})

    @classmethod
    def variable(cls, i: int, dim: int) -> "Polynomial":
        """The coordinate ``u^(i+1)`` (zero-based ``i``)."""
        exps = [0] * dim
        exps[i] = 1
        return cls(dim, {tuple(exps): 1})

    # algebra
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.dim != self.dim:
                raise DimensionError(f"dimension {other.dim} != {self.dim}")
            return other
        return Polynomial.constant(self.dim, other)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, Fraction(0)) + c
        return Polynomial(self.dim, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.dim, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            k = to_fraction(other)
            return Polynomial(self.dim, {e: k * c for e, c in self.terms.items()})
        other = self._coerce(other)
        terms: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, Fraction(0)) + c1 * c2
        return Polynomial(self.dim, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(self.dim, 1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.dim == other.dim and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == Polynomial.constant(self.dim, other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(self, "_hash", hash((self.dim, tuple(self.terms.items()))))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        return f"Polynomial({self.dim}, {self.terms!r})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.terms.items():
            mono = "*".join(f"u{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
            parts.append(f"({c})" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    # calculus
    def diff(self, i: int, times: int = 1) -> "Polynomial":
        """Partial derivative ``times`` times in the zero-based variable ``i``."""
        if not 0 <= i < self.dim:
            raise DimensionError(f"variable index {i} out of range for dimension {self.dim}")
        terms = {}
        for e, c in self.terms.items():
            k = e[i]
            if k < times:
                continue
            e2 = list(e)
            e2[i] = k - times
            terms[tuple(e2)] = c * math.perm(k, times)
        return Polynomial(self.dim, terms)

    def partial(self, order: Sequence[int]) -> "Polynomial":
        """Mixed partial derivative with multi-index ``order``."""
        if len(order) != self.dim:
            raise DimensionError(f"order {tuple(order)} has length {len(order)}, expected {self.dim}")
        terms = {}
        for e, c in self.terms.items():
            if any(k < o for k, o in zip(e, order)):
                continue
            factor = 1
            for k, o in zip(e, order):
                factor *= math.perm(k, o)
            terms[tuple(k - o for k, o in zip(e, order))] = c * factor
        return Polynomial(self.dim, terms)

    def __call__(self, point):
        return self.evaluate(point)

    def evaluate(self, point):
        """Evaluate at ``point``; exact when every coordinate is int/Fraction."""
        if len(point) != self.dim:
            raise DimensionError(f"point has length {len(point)}, expected {self.dim}")
        if is_exact(point):
            xs = [Fraction(x) for x in point]
            total = Fraction(0)
        else:
            xs = [float(x) for x in point]
            total = 0.0
        for e, c in self.terms.items():
            term = c if isinstance(total, Fraction) else float(c)
            for x, k in zip(xs, e):
                if k:
                    term *= x**k
            total += term
        return total

    # serialization
    def to_json(self) -> dict:
        return {
            "terms": [
                {"exps": list(e), "coeff": _fraction_str(c)} for e, c in self.terms.items()
            ]
        }

    @classmethod
    def from_json(cls, obj, dim: int) -> "Polynomial":
        try:
            items = obj["terms"]
        except (TypeError, KeyError) as exc:
            raise ProblemFormatError("polynomial must be an object with a 'terms' list") from exc
        terms: dict[tuple[int, ...], Fraction] = {}
        for item in items:
            exps = tuple(item["exps"])
            if len(exps) != dim:
                raise ProblemFormatError(f"exponent list {list(exps)} does not have length {dim}")
            try:
                coeff = to_fraction(item["coeff"])
            except (TypeError, ValueError) as exc:
                raise ProblemFormatError(str(exc)) from exc
            terms[exps] = terms.get(exps, Fraction(0)) + coeff
        return cls(dim, terms)


def _fraction_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


class CompiledPolynomials:
    """Fast float evaluation of an array of polynomials sharing one dimension.

    Monomials are evaluated once per point and combined with a dense
    coefficient tensor, which keeps ODE right-hand sides cheap.
    """

    def __init__(self, polys: np.ndarray):
        polys = np.asarray(polys, dtype=object)
        self.shape = polys.shape
        flat = polys.ravel()
        self.dim = flat[0].dim if flat.size else 0
        monos = sorted({e for p in flat for e in p.terms})
        if not monos:
            monos = [(0,) * self.dim]
        index = {e: m for m, e in enumerate(monos)}
        self.exponents = np.array(monos, dtype=int).reshape(len(monos), self.dim)
        coeffs = np.zeros((flat.size, len(monos)))
        for r, p in enumerate(flat):
            for e, c in p.terms.items():
                coeffs[r, index[e]] = float(c)
        self.coeffs = coeffs

    def __call__(self, point) -> np.ndarray:
        x = np.asarray(point, dtype=float)
        monos = np.prod(x[None, :] ** self.exponents, axis=1)
        return (self.coeffs @ monos).reshape(self.shape)

    def evaluate_many(self, points) -> np.ndarray:
        """Values at each row of ``points``; shape ``(len(points),) + self.shape``."""
        x = np.asarray(points, dtype=float)
        monos = np.prod(x[:, None, :] ** self.exponents[None, :, :], axis=2)
        return (monos @ self.coeffs.T).reshape((len(x),) + self.shape)


# --------------------------------------------------------------------------
# derivatives at points


def _check_point(p: Polynomial, point) -> None:
    if len(point) != p.dim:
        raise DimensionError(f"point has length {len(point)}, expected {p.dim}")


def eval_partial(p: Polynomial, order: Sequence[int], point):
    """Value of the mixed partial ``d^|order| p / du^order`` at ``point``."""
    _check_point(p, point)
    return p.partial(order).evaluate(point)


def hessian_polynomials(p: Polynomial) -> np.ndarray:
    n = p.dim
    out = np.empty((n, n), dtype=object)
    first = [p.diff(i) for i in range(n)]
    for i in range(n):
        for j in range(i, n):
            out[i, j] = out[j, i] = first[i].diff(j)
    return out


def hessian(p: Polynomial, point) -> np.ndarray:
    """Hessian matrix of ``p`` at ``point``, symmetric by construction."""
    _check_point(p, point)
    n = p.dim
    exact = is_exact(point)
    out = _zeros((n, n), exact)
    for i in range(n):
        di = p.diff(i)
        for j in range(i, n):
            out[i, j] = out[j, i] = di.diff(j).evaluate(point)
    return out


def third_tensor(phi: Polynomial, point) -> np.ndarray:
    """All third partials ``T[i, j, k]`` of ``phi`` at ``point``.

    Each distinct sorted index triple is computed once and copied to its
    permutations, so full symmetry is exact.
    """
    _check_point(phi, point)
    n = phi.dim
    out = _zeros((n, n, n), is_exact(point))
    for i, j, k in itertools.combinations_with_replacement(range(n), 3):
        value = phi.diff(i).diff(j).diff(k).evaluate(point)
        for perm in set(itertools.permutations((i, j, k))):
            out[perm] = value
    return out


def gradient_potentials(phi: Polynomial) -> list[Polynomial]:
    """The potentials ``psi_a = d phi / du^a`` for a = 1..N."""
    return [phi.diff(a) for a in range(phi.dim)]


# --------------------------------------------------------------------------
# metrics


FLOAT_DET_RTOL = 1e-12


@dataclass(frozen=True)
class MetricMatrix:
    """Constant symmetric nondegenerate matrix, exact or float.

    ``entries`` is an object array of ``Fraction`` when ``exact`` and a float
    array otherwise. Construction validates symmetry and nondegeneracy.
    """

    entries: np.ndarray
    exact: bool = True

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=object if self.exact else float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"metric must be square, got shape {a.shape}")
        if self.exact:
            a = np.vectorize(to_fraction, otypes=[object])(a) if a.size else a
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        if not np.array_equal(a, a.T):
            raise ValueError("metric is not symmetric")
        _check_nondegenerate(a, self.exact)

    @classmethod
    def identity(cls, n: int, exact: bool = True) -> "MetricMatrix":
        if exact:
            e = _zeros((n, n), True)
            for i in range(n):
                e[i, i] = Fraction(1)
            return cls(e, True)
        return cls(np.eye(n), False)

    @classmethod
    def antidiagonal(cls, n: int, exact: bool = True) -> "MetricMatrix":
        e = _zeros((n, n), exact)
        for i in range(n):
            e[i, n - 1 - i] = Fraction(1) if exact else 1.0
        return cls(e, exact)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def as_float(self) -> "MetricMatrix":
        return MetricMatrix(self.entries.astype(float), exact=False)

    def scaled(self, c) -> "MetricMatrix":
        if self.exact:
            c = to_fraction(c)
        return MetricMatrix(self.entries * c, self.exact)

    def array(self, exact: bool | None = None) -> np.ndarray:
        """Entries in the requested arithmetic (defaults to the stored one)."""
        if exact is None or exact == self.exact:
            return self.entries
        if exact:
            raise ValueError("cannot promote a float metric to exact arithmetic")
        return self.entries.astype(float)

    def signature(self) -> tuple[int, int]:
        """(positive, negative) inertia indices."""
        w = np.linalg.eigvalsh(self.entries.astype(float))
        return int((w > 0).sum()), int((w < 0).sum())


def _exact_det(a: np.ndarray) -> Fraction:
    m = [list(row) for row in a]
    n = len(m)
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        for r in range(col + 1, n):
            f = m[r][col] / m[col][col]
            if f:
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return det


def _check_nondegenerate(a: np.ndarray, exact: bool) -> None:
    n = a.shape[0]
    if n == 0:
        return
    if exact:
        if _exact_det(a) == 0:
            raise NondegeneracyError("metric is singular")
        return
    scale = float(np.max(np.abs(a)))
    det = float(np.linalg.det(a))
    if scale == 0.0 or abs(det) <= FLOAT_DET_RTOL * scale**n:
        raise NondegeneracyError(f"metric is numerically singular (det={det:.3g})")


def _exact_inverse(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    m = [list(a[r]) + [Fraction(int(r == c)) for c in range(n)] for r in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            raise NondegeneracyError("metric is singular")
        m[col], m[pivot] = m[pivot], m[col]
        p = m[col][col]
        m[col] = [x / p for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    out = np.empty((n, n), dtype=object)
    for r in range(n):
        out[r, :] = m[r][n:]
    return out


def invert_metric(m: MetricMatrix) -> MetricMatrix:
    """Inverse metric; exact Gauss-Jordan for rational entries."""
    if m.exact:
        return MetricMatrix(_exact_inverse(m.entries), True)
    inv = np.linalg.solve(m.entries, np.eye(m.n))
    # symmetrize away round-off so the result passes the symmetry invariant
    return MetricMatrix(0.5 * (inv + inv.T), False)


# --------------------------------------------------------------------------
# problem container


DEFAULT_TOLERANCES = {
    "exact": 0.0,
    "algebra": 1e-10,
    "ode": 1e-8,
    "fd": 1e-4,
}


@dataclass(frozen=True)
class Domain:
    base: tuple
    half_width: object = Fraction(1, 2)
    grid: int = 5

    def axis_values(self, axis: int) -> list:
        b, r, k = self.base[axis], self.half_width, self.grid
        if k == 1:
            return [b]
        if isinstance(b, Fraction) and isinstance(r, Fraction):
            return [b + r * (Fraction(2 * m, k - 1) - 1) for m in range(k)]
        return [float(b) + float(r) * (2.0 * m / (k - 1) - 1.0) for m in range(k)]

    def spacing(self) -> object:
        return 2 * self.half_width / (self.grid - 1) if self.grid > 1 else self.half_width

    def points(self) -> list[tuple]:
        """All grid nodes in row-major (last axis fastest) order."""
        axes = [self.axis_values(a) for a in range(len(self.base))]
        return [tuple(p) for p in itertools.product(*axes)]


@dataclass(frozen=True)
class ProblemSpec:
    """Flat-coordinate problem data.

    ``eta_inv`` is the contravariant metric (the file convention); ``mu_inv``
    is the contravariant normal metric. When the file gives ``mu`` as a scale
    of ``eta``, ``mu_scale`` holds the exact factor ``c`` with
    ``mu_inv == c * eta_inv``.
    """

    n: int
    l: int
    eta_inv: MetricMatrix
    mu_inv: MetricMatrix
    domain: Domain
    psi: tuple[Polynomial, ...] | None = None
    phi: Polynomial | None = None
    mu_scale: Fraction | None = None
    exact: bool = True
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def __post_init__(self):
        if (self.psi is None) == (self.phi is None):
            raise ProblemFormatError("exactly one of 'phi' and 'psi' must be given")
        if self.eta_inv.n != self.n:
            raise ProblemFormatError(f"eta is {self.eta_inv.n}x{self.eta_inv.n}, expected n={self.n}")
        if self.mu_inv.n != self.l:
            raise ProblemFormatError(f"mu is {self.mu_inv.n}x{self.mu_inv.n}, expected l={self.l}")
        if self.phi is not None:
            if self.l != self.n:
                raise ProblemFormatError("a potential 'phi' requires l == n")
            if self.phi.dim != self.n:
                raise ProblemFormatError("phi has the wrong number of variables")
        else:
            if len(self.psi) != self.l:
                raise ProblemFormatError(f"expected {self.l} psi polynomials, got {len(self.psi)}")
            if any(p.dim != self.n for p in self.psi):
                raise ProblemFormatError("a psi polynomial has the wrong number of variables")
        if len(self.domain.base) != self.n:
            raise ProblemFormatError("domain base point has the wrong length")
        if self.domain.grid < 1:
            raise ProblemFormatError("grid must be a positive integer")

    @property
    def potentials(self) -> list[Polynomial]:
        """The second-form potentials; gradients of phi in the potential case."""
        if self.psi is not None:
            return list(self.psi)
        return gradient_potentials(self.phi)

    @property
    def eta(self) -> MetricMatrix:
        return invert_metric(self.eta_inv)

    @property
    def mu(self) -> MetricMatrix:
        return invert_metric(self.mu_inv)

    def grid_points(self) -> list[tuple]:
        return self.domain.points()


def _parse_matrix(rows, exact: bool, what: str) -> MetricMatrix:
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ProblemFormatError(f"'{what}' must be an array of arrays")
    try:
        if exact:
            data = [[to_fraction(x) for x in r] for r in rows]
            return MetricMatrix(np.array(data, dtype=object).reshape(len(rows), -1), True)
        return MetricMatrix(np.array([[_to_float(x) for x in r] for r in rows], dtype=float), False)
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"'{what}': {exc}") from exc


def _to_float(x) -> float:
    if isinstance(x, str):
        return float(Fraction(x))
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise TypeError(f"not a number: {x!r}")
    return float(x)


def parse_problem(obj: Mapping, exact: bool | None = None) -> ProblemSpec:
    """Build a ``ProblemSpec`` from the decoded JSON problem format.

    ``exact`` overrides the file's ``"arithmetic"`` key (``"rational"`` by
    default). In rational mode every number must be an integer or a
    ``"p/q"`` string.
    """
    if not isinstance(obj, Mapping):
        raise ProblemFormatError("problem must be a JSON object")
    if exact is None:
        mode = obj.get("arithmetic", "rational")
        if mode not in ("rational", "float"):
            raise ProblemFormatError(f"unknown arithmetic {mode!r}")
        exact = mode == "rational"
    try:
        n, l = int(obj["n"]), int(obj["l"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemFormatError("'n' and 'l' are required integers") from exc
    convention = obj.get("convention", "contravariant")
    if convention not in ("contravariant", "covariant"):
        raise ProblemFormatError(f"unknown metric convention {convention!r}")
    if "eta" not in obj:
        raise ProblemFormatError("'eta' is required")
    try:
        eta = _parse_matrix(obj["eta"], exact, "eta")
        eta_inv = eta if convention == "contravariant" else invert_metric(eta)
    except NondegeneracyError as exc:
        raise ProblemFormatError(f"'eta': {exc}") from exc

    mu_raw = obj.get("mu")
    mu_scale = None
    try:
        if mu_raw is None:
            raise ProblemFormatError("'mu' is required")
        if isinstance(mu_raw, Mapping):
            if "scale_of_eta" not in mu_raw:
                raise ProblemFormatError("'mu' object must carry 'scale_of_eta'")
            if l != n:
                raise ProblemFormatError("'scale_of_eta' requires l == n")
            mu_scale = to_fraction(mu_raw["scale_of_eta"]) if exact else Fraction(mu_raw["scale_of_eta"])
            if mu_scale == 0:
                raise ProblemFormatError("'scale_of_eta' must be nonzero")
            mu_inv = eta_inv.scaled(mu_scale if exact else float(mu_scale))
        else:
            mu = _parse_matrix(mu_raw, exact, "mu")
            mu_inv = mu if convention == "contravariant" else invert_metric(mu)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ProblemFormatError):
            raise
        raise ProblemFormatError(f"'mu': {exc}") from exc

    phi = psi = None
    if "phi" in obj:
        phi = Polynomial.from_json(obj["phi"], n)
    if "psi" in obj:
        if not isinstance(obj["psi"], list):
            raise ProblemFormatError("'psi' must be a list of polynomials")
        psi = tuple(Polynomial.from_json(p, n) for p in obj["psi"])

    dom = obj.get("domain", {})
    try:
        base_raw = dom.get("base", [0] * n)
        hw_raw = dom.get("half_width", "1/2")
        if exact:
            base = tuple(to_fraction(x) for x in base_raw)
            hw = to_fraction(hw_raw)
        else:
            base = tuple(_to_float(x) for x in base_raw)
            hw = _to_float(hw_raw)
        grid = int(dom.get("grid", 5))
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"'domain': {exc}") from exc
    if hw <= 0:
        raise ProblemFormatError("'half_width' must be positive")

    tolerances = dict(DEFAULT_TOLERANCES)
    for key, value in obj.get("tolerances", {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise ProblemFormatError(f"unknown tolerance {key!r}")
        tolerances[key] = float(Fraction(value)) if isinstance(value, str) else float(value)

    return ProblemSpec(
        n=n, l=l, eta_inv=eta_inv, mu_inv=mu_inv,
        domain=Domain(base, hw, grid), psi=psi, phi=phi,
        mu_scale=mu_scale, exact=exact, tolerances=tolerances,
    )


def load_problem(path: str | Path, exact: bool | None = None) -> ProblemSpec:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"invalid JSON: {exc}") from exc
    return parse_problem(obj, exact)


def problem_to_json(spec: ProblemSpec) -> dict:
    """Inverse of ``parse_problem`` (contravariant convention)."""

    def num(x):
        return _fraction_str(x) if isinstance(x, Fraction) else float(x)

    out = {
        "n": spec.n,
        "l": spec.l,
        "arithmetic": "rational" if spec.exact else "float",
        "convention": "contravariant",
        "eta": [[num(x) for x in row] for row in spec.eta_inv.entries],
    }
    if spec.mu_scale is not None:
        out["mu"] = {"scale_of_eta": _fraction_str(spec.mu_scale)}
    else:
        out["mu"] = [[num(x) for x in row] for row in spec.mu_inv.entries]
    if spec.phi is not None:
        out["phi"] = spec.phi.to_json()
    else:
        out["psi"] = [p.to_json() for p in spec.psi]
    out["domain"] = {
        "base": [num(x) for x in spec.domain.base],
        "half_width": num(spec.domain.half_width),
        "grid": spec.domain.grid,
    }
    return out


def as_points(points: Iterable) -> list[tuple]:
    return [tuple(p) for p in points]
