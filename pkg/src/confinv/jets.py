"""Truncated multivariate Taylor expansions (jets) for exact differentiation.

A :class:`Jet` stores the Taylor coefficients ``c_alpha = d^alpha f / alpha!``
for every multi-index with ``|alpha| <= order``. The coefficient array has
shape ``(ncoef, *batch)`` so that a whole grid of evaluation points is carried
through one computation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_ORDER = 3


@dataclass(frozen=True)
class JetSpace:
    nvars: int
    order: int
    multi_indices: tuple[tuple[int, ...], ...]
    index: dict
    degrees: np.ndarray
    # product table: coefficient I of a times J of b lands in K
    pair_i: np.ndarray
    pair_j: np.ndarray
    scatter: np.ndarray  # (ncoef, npairs) 0/1 matrix

    @property
    def ncoef(self) -> int:
        return len(self.multi_indices)

    def unit(self, var: int) -> int:
        e = [0] * self.nvars
        e[var] = 1
        return self.index[tuple(e)]


@lru_cache(maxsize=None)
def jet_space(nvars: int, order: int) -> JetSpace:
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"jet order must be in [0, {MAX_ORDER}], got {order}")
    if nvars < 1:
        raise ValueError("a jet needs at least one variable")
    alphas = []
    for deg in range(order + 1):
        # lexicographically descending within a degree: x1^2, x1 x2, ...
        for combo in itertools.combinations_with_replacement(range(nvars), deg):
            a = [0] * nvars
            for v in combo:
                a[v] += 1
            alphas.append(tuple(a))
    index = {a: k for k, a in enumerate(alphas)}
    pi, pj, pk = [], [], []
    for i, a in enumerate(alphas):
        for j, b in enumerate(alphas):
            c = tuple(x + y for x, y in zip(a, b))
            if sum(c) <= order:
                pi.append(i)
                pj.append(j)
                pk.append(index[c])
    scatter = np.zeros((len(alphas), len(pk)))
    scatter[pk, np.arange(len(pk))] = 1.0
    return JetSpace(
        nvars=nvars,
        order=order,
        multi_indices=tuple(alphas),
        index=index,
        degrees=np.array([sum(a) for a in alphas]),
        pair_i=np.array(pi, dtype=int),
        pair_j=np.array(pj, dtype=int),
        scatter=scatter,
    )


class Jet:
    """Taylor jet of a scalar function of ``nvars`` variables.

    Supports ``+ - * /``, integer and real powers, and the elementary
    functions used by the expression language.
    """

    __slots__ = ("space", "coeffs")
    __array_priority__ = 1000  # keep numpy scalars from swallowing the jet

    def __init__(self, space: JetSpace, coeffs: np.ndarray):
        self.space = space
        self.coeffs = coeffs

    # -- construction -------------------------------------------------------
    @classmethod
    def constant(cls, value, nvars: int, order: int) -> "Jet":
        space = jet_space(nvars, order)
        value = np.asarray(value, dtype=float)
        coeffs = np.zeros((space.ncoef,) + value.shape)
        coeffs[0] = value
        return cls(space, coeffs)

    @classmethod
    def variable(cls, value, var: int, nvars: int, order: int) -> "Jet":
        jet = cls.constant(value, nvars, order)
        if order >= 1:
            jet.coeffs[jet.space.unit(var)] = 1.0
        return jet

    def lift(self, value) -> "Jet":
        """A constant jet in this jet's space with broadcast batch shape."""
        value = np.broadcast_to(np.asarray(value, dtype=float), self.batch_shape)
        return Jet.constant(value, self.space.nvars, self.space.order)

    # -- accessors ----------------------------------------------------------
    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[1:]

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    @property
    def order(self) -> int:
        return self.space.order

    def coefficient(self, alpha) -> np.ndarray:
        return self.coeffs[self.space.index[tuple(alpha)]]

    def partial(self, alpha) -> np.ndarray:
        """The mixed partial derivative d^alpha f (not divided by alpha!)."""
        fact = math.prod(math.factorial(a) for a in alpha)
        return fact * self.coefficient(alpha)

    def gradient(self) -> np.ndarray:
        """Shape ``(nvars, *batch)``."""
        sp = self.space
        return np.stack([self.coeffs[sp.unit(v)] for v in range(sp.nvars)])

    def hessian(self) -> np.ndarray:
        """Shape ``(nvars, nvars, *batch)``."""
        sp = self.space
        if sp.order < 2:
            raise ValueError("hessian needs a jet of order >= 2")
        n = sp.nvars
        out = np.empty((n, n) + self.batch_shape)
        for a in range(n):
            for b in range(a, n):
                e = [0] * n
                e[a] += 1
                e[b] += 1
                out[a, b] = out[b, a] = self.partial(e)
        return out

    def derivative(self, var: int) -> "Jet":
        """The jet of d f / d x_var, one order lower."""
        sp = self.space
        if sp.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        low = jet_space(sp.nvars, sp.order - 1)
        coeffs = np.empty((low.ncoef,) + self.batch_shape)
        for k, a in enumerate(low.multi_indices):
            up = list(a)
            up[var] += 1
            coeffs[k] = (a[var] + 1) * self.coeffs[sp.index[tuple(up)]]
        return Jet(low, coeffs)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError("cannot raise the order of a jet")
        low = jet_space(self.space.nvars, order)
        return Jet(low, self.coeffs[: low.ncoef].copy())

    # -- arithmetic ---------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise ValueError("jets live in different spaces")
            return other
        return None

    def __neg__(self):
        return Jet(self.space, -self.coeffs)

    def __pos__(self):
        return self

    def __add__(self, other):
        o = self._coerce(other)
        if o is not None:
            return Jet(self.space, self.coeffs + o.coeffs)
        other = np.asarray(other, dtype=float)
        batch = np.broadcast_shapes(self.batch_shape, other.shape)
        coeffs = np.broadcast_to(self.coeffs, (self.space.ncoef,) + batch).copy()
        coeffs[0] += other
        return Jet(self.space, coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return Jet(self.space, self.coeffs * np.asarray(other, dtype=float))
        sp = self.space
        a, b = self.coeffs, o.coeffs
        batch = np.broadcast_shapes(a.shape[1:], b.shape[1:])
        prod = a[sp.pair_i] * b[sp.pair_j]
        flat = prod.reshape(prod.shape[0], -1)
        out = (sp.scatter @ flat).reshape((sp.ncoef,) + batch)
        return Jet(sp, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return Jet(self.space, self.coeffs / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return (p * self.log()).exp()
        p_arr = np.asarray(p, dtype=float)
        if p_arr.ndim == 0 and float(p_arr).is_integer() and abs(p_arr) <= 16:
            k = int(p_arr)
            if k < 0:
                return self.reciprocal() ** (-k)
            result = self.lift(1.0)
            base = self
            while k:
                if k & 1:
                    result = result * base
                k >>= 1
                if k:
                    base = base * base
            return result
        return self.power(p_arr)

    def __rpow__(self, base):
        return (self * np.log(np.asarray(base, dtype=float))).exp()

    # -- elementary functions ----------------------------------------------
    def compose(self, taylor) -> "Jet":
        """Compose a scalar function with this jet.

        ``taylor[k]`` must hold ``f^(k)(x0) / k!`` evaluated at the jet's
        value, for ``k = 0..order``.
        """
        delta = Jet(self.space, self.coeffs.copy())
        delta.coeffs[0] = 0.0
        out = np.zeros_like(self.coeffs)
        out[0] = taylor[0]
        power = delta
        for k in range(1, self.order + 1):
            out = out + power.coeffs * taylor[k]
            if k < self.order:
                power = power * delta
        return Jet(self.space, out)

    def sin(self):
        s, c = np.sin(self.value), np.cos(self.value)
        return self.compose((s, c, -s / 2.0, -c / 6.0))

    def cos(self):
        s, c = np.sin(self.value), np.cos(self.value)
        return self.compose((c, -s, -c / 2.0, s / 6.0))

    def exp(self):
        e = np.exp(self.value)
        return self.compose((e, e, e / 2.0, e / 6.0))

    def log(self):
        a = self.value
        return self.compose((np.log(a), 1.0 / a, -1.0 / (2.0 * a**2), 1.0 / (3.0 * a**3)))

    def sqrt(self):
        s = np.sqrt(self.value)
        return self.compose((s, 0.5 / s, -1.0 / (8.0 * s**3), 1.0 / (16.0 * s**5)))

    def reciprocal(self):
        a = self.value
        return self.compose((1.0 / a, -1.0 / a**2, 1.0 / a**3, -1.0 / a**4))

    def power(self, p):
        a = self.value
        return self.compose((
            a**p,
            p * a ** (p - 1),
            p * (p - 1) / 2.0 * a ** (p - 2),
            p * (p - 1) * (p - 2) / 6.0 * a ** (p - 3),
        ))

    def __repr__(self):
        return f"Jet(nvars={self.space.nvars}, order={self.order}, batch={self.batch_shape})"


def seed_variables(point, order: int) -> list[Jet]:
    """Independent-variable jets at ``point`` (shape ``(nvars,)`` or ``(N, nvars)``)."""
    point = np.asarray(point, dtype=float)
    nvars = point.shape[-1]
    return [Jet.variable(point[..., v], v, nvars, order) for v in range(nvars)]


# Dispatch helpers so the expression evaluator treats floats, arrays and jets alike.
def _unary(name, npfunc):
    def f(x):
        if isinstance(x, Jet):
            return getattr(x, name)()
        return npfunc(x)

    f.__name__ = name
    return f


sin = _unary("sin", np.sin)
cos = _unary("cos", np.cos)
exp = _unary("exp", np.exp)
log = _unary("log", np.log)
sqrt = _unary("sqrt", np.sqrt)


def power(x, p):
    if isinstance(x, Jet):
        return x**p
    if isinstance(p, Jet):
        return p.__rpow__(x)
    return np.power(np.asarray(x, dtype=float), p)
