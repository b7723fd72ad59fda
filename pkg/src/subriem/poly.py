"""Exact sparse multivariate polynomial arithmetic over the rationals.

A polynomial is a map from exponent vectors (one nonnegative integer per
variable) to Fraction coefficients.  Zero coefficients are never stored, so
structural equality is polynomial identity.  All rank, order and coordinate
computations downstream rely on this exactness; floating point enters only
when trajectories are integrated.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence, Union

Exponent = tuple[int, ...]
Rational = Union[int, Fraction]


def _as_fraction(value: Rational) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


class Poly:
    """Immutable polynomial with exact rational coefficients."""

    __slots__ = ("nvars", "_terms")

    def __init__(self, nvars: int, terms: Mapping[Exponent, Rational] | None = None):
        if nvars < 0:
            raise ValueError("nvars must be nonnegative")
        clean: dict[Exponent, Fraction] = {}
        if terms:
            for exps, coeff in terms.items():
                if len(exps) != nvars:
                    raise ValueError(
                        f"exponent vector {exps} has length {len(exps)}, expected {nvars}"
                    )
                if any(e < 0 for e in exps):
                    raise ValueError(f"negative exponent in {exps}")
                c = _as_fraction(coeff)
                if c != 0:
                    key = tuple(exps)
                    acc = clean.get(key)
                    clean[key] = c if acc is None else acc + c
                    if clean[key] == 0:
                        del clean[key]
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "_terms", clean)

    def __setattr__(self, name, value):  # pragma: no cover - guard rail
        raise AttributeError("Poly is immutable")

    # -- constructors -----------------------------------------------------

    @staticmethod
    def zero(nvars: int) -> "Poly":
        return Poly(nvars)

    @staticmethod
    def const(nvars: int, value: Rational) -> "Poly":
        return Poly(nvars, {(0,) * nvars: _as_fraction(value)})

    @staticmethod
    def variable(nvars: int, index: int) -> "Poly":
        if not 0 <= index < nvars:
            raise IndexError(f"variable index {index} out of range for {nvars} variables")
        exps = [0] * nvars
        exps[index] = 1
        return Poly(nvars, {tuple(exps): Fraction(1)})

    @staticmethod
    def monomial(exps: Sequence[int], coeff: Rational) -> "Poly":
        return Poly(len(exps), {tuple(exps): _as_fraction(coeff)})

    # -- inspection --------------------------------------------------------

    def terms(self) -> Iterator[tuple[Exponent, Fraction]]:
        return iter(self._terms.items())

    def sorted_terms(self) -> list[tuple[Exponent, Fraction]]:
        return sorted(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    def num_terms(self) -> int:
        return len(self._terms)

    def total_degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self._terms:
            return -1
        return max(sum(e) for e in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self.nvars, Fraction(0))

    def coefficient(self, exps: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(exps), Fraction(0))

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Poly.const(self.nvars, other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.nvars, frozenset(self._terms.items())))

    # -- ring operations ---------------------------------------------------

    def _coerce(self, other) -> "Poly | None":
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise ValueError(
                    f"variable count mismatch: {self.nvars} vs {other.nvars}"
                )
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.const(self.nvars, other)
        return None

    def __add__(self, other) -> "Poly":
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        out = dict(self._terms)
        for exps, coeff in rhs._terms.items():
            acc = out.get(exps)
            s = coeff if acc is None else acc + coeff
            if s == 0:
                out.pop(exps, None)
            else:
                out[exps] = s
        return _raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return _raw(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> "Poly":
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return self + (-rhs)

    def __rsub__(self, other) -> "Poly":
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return rhs + (-self)

    def __mul__(self, other) -> "Poly":
        if isinstance(other, (int, Fraction)):
            c = _as_fraction(other)
            if c == 0:
                return Poly.zero(self.nvars)
            return _raw(self.nvars, {e: k * c for e, k in self._terms.items()})
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        out: dict[Exponent, Fraction] = {}
        for ea, ca in self._terms.items():
            for eb, cb in rhs._terms.items():
                key = tuple(x + y for x, y in zip(ea, eb))
                acc = out.get(key)
                s = ca * cb if acc is None else acc + ca * cb
                if s == 0:
                    out.pop(key, None)
                else:
                    out[key] = s
        return _raw(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial power must be a nonnegative integer")
        result = Poly.const(self.nvars, 1)
        base = self
        k = n
        while k:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    # -- calculus and evaluation --------------------------------------------

    def evaluate(self, point: Sequence[Rational]) -> Fraction:
        """Exact value at a rational point."""
        if len(point) != self.nvars:
            raise ValueError(
                f"point has {len(point)} coordinates, expected {self.nvars}"
            )
        pt = [_as_fraction(x) for x in point]
        total = Fraction(0)
        for exps, coeff in self._terms.items():
            value = coeff
            for x, e in zip(pt, exps):
                if e:
                    value *= x**e
            total += value
        return total

    def evaluate_float(self, point: Sequence[float]) -> float:
        if len(point) != self.nvars:
            raise ValueError(
                f"point has {len(point)} coordinates, expected {self.nvars}"
            )
        total = 0.0
        for exps, coeff in self._terms.items():
            value = float(coeff)
            for x, e in zip(point, exps):
                if e:
                    value *= x**e
            total += value
        return total

    def partial_derivative(self, var_index: int) -> "Poly":
        """Exact formal partial derivative with respect to one variable."""
        if not 0 <= var_index < self.nvars:
            raise IndexError(
                f"variable index {var_index} out of range for {self.nvars} variables"
            )
        out: dict[Exponent, Fraction] = {}
        for exps, coeff in self._terms.items():
            e = exps[var_index]
            if e == 0:
                continue
            key = exps[:var_index] + (e - 1,) + exps[var_index + 1 :]
            out[key] = out.get(key, Fraction(0)) + coeff * e
        return _raw(self.nvars, {k: v for k, v in out.items() if v != 0})

    def truncate(self, max_total_degree: int) -> "Poly":
        """Drop every monomial of total degree above the bound."""
        return _raw(
            self.nvars,
            {e: c for e, c in self._terms.items() if sum(e) <= max_total_degree},
        )

    def compose(self, subs: Sequence["Poly"], max_degree: int | None = None) -> "Poly":
        """Substitute subs[i] for variable i; all subs share one variable set.

        Truncates intermediate products at max_degree when given, which keeps
        repeated chart compositions from blowing up in size.
        """
        if len(subs) != self.nvars:
            raise ValueError(f"need {self.nvars} substitutions, got {len(subs)}")
        if self.nvars == 0:
            target_nvars = 0
        else:
            target_nvars = subs[0].nvars
            for s in subs:
                if s.nvars != target_nvars:
                    raise ValueError("substitution polynomials disagree on nvars")

        # Cache powers of each substitution polynomial.
        powers: list[dict[int, Poly]] = [
            {0: Poly.const(target_nvars, 1), 1: s} for s in subs
        ]

        def get_power(i: int, e: int) -> Poly:
            cache = powers[i]
            if e in cache:
                return cache[e]
            half = get_power(i, e // 2)
            p = half * half
            if e % 2:
                p = p * cache[1]
            if max_degree is not None:
                p = p.truncate(max_degree)
            cache[e] = p
            return p

        total = Poly.zero(target_nvars)
        for exps, coeff in self._terms.items():
            term = Poly.const(target_nvars, coeff)
            for i, e in enumerate(exps):
                if e:
                    term = term * get_power(i, e)
                    if max_degree is not None:
                        term = term.truncate(max_degree)
            total = total + term
        return total

    def weighted_min_degree(self, weights: Sequence[int]) -> int | float:
        """Least weighted degree over the monomials; +inf for the zero poly."""
        if len(weights) != self.nvars:
            raise ValueError("weights length must equal nvars")
        if not self._terms:
            return math.inf
        return min(sum(w * e for w, e in zip(weights, exps)) for exps in self._terms)

    def weighted_part(self, weights: Sequence[int], degree: int) -> "Poly":
        """Sum of the monomials whose weighted degree equals the given one."""
        return _raw(
            self.nvars,
            {
                e: c
                for e, c in self._terms.items()
                if sum(w * k for w, k in zip(weights, e)) == degree
            },
        )

    # -- formatting ----------------------------------------------------------

    def format(self, var_names: Sequence[str] | None = None) -> str:
        if self.is_zero():
            return "0"
        names = var_names or [f"x{i + 1}" for i in range(self.nvars)]
        pieces: list[str] = []
        for exps, coeff in sorted(
            self._terms.items(), key=lambda t: (sum(t[0]), t[0])
        ):
            factors = [
                names[i] if e == 1 else f"{names[i]}^{e}"
                for i, e in enumerate(exps)
                if e
            ]
            if not factors:
                body = str(coeff)
            elif coeff == 1:
                body = "*".join(factors)
            elif coeff == -1:
                body = "-" + "*".join(factors)
            else:
                body = str(coeff) + "*" + "*".join(factors)
            pieces.append(body)
        out = pieces[0]
        for piece in pieces[1:]:
            out += " - " + piece[1:] if piece.startswith("-") else " + " + piece
        return out

    def __repr__(self) -> str:
        return f"Poly({self.format()})"


def _raw(nvars: int, terms: dict[Exponent, Fraction]) -> Poly:
    """Build a Poly from an already-normalized term dict (internal)."""
    p = object.__new__(Poly)
    object.__setattr__(p, "nvars", nvars)
    object.__setattr__(p, "_terms", terms)
    return p


def weighted_degree(exps: Sequence[int], weights: Sequence[int]) -> int:
    return sum(w * e for w, e in zip(weights, exps))


def iter_multi_indices(
    nvars: int, weights: Sequence[int], max_wdeg: int
) -> Iterator[Exponent]:
    """All exponent vectors with weighted degree at most max_wdeg, ascending."""
    if max_wdeg < 0:
        return
    out: list[tuple[int, Exponent]] = []

    def walk(prefix: list[int], pos: int, used: int):
        if pos == nvars:
            out.append((used, tuple(prefix)))
            return
        w = weights[pos]
        e = 0
        while used + e * w <= max_wdeg:
            prefix.append(e)
            walk(prefix, pos + 1, used + e * w)
            prefix.pop()
            e += 1

    walk([], 0, 0)
    for _, exps in sorted(out):
        yield exps
