"""Exact differential polynomials in the jets of one unknown field.

A jet variable is the field or one of its partial derivatives, identified by a
derivative multi-index (kx, kz, kt).  Monomials are products of jet variables
with integer exponents; only the underived base field may carry negative
exponents (the equations need 1/w^k but never 1/w_x).  Coefficients live in
the exact sigma-rational ring, so equality of normal forms certifies
identities exactly.
"""
from __future__ import annotations

from typing import Iterable, Mapping

from .scalars import SigmaRational

JetKey = tuple[int, int, int]          # (kx, kz, kt)
Monomial = tuple[tuple[JetKey, int], ...]  # sorted ((jet, exponent), ...)

BASE: JetKey = (0, 0, 0)
_AXES = {"x": 0, "z": 1, "t": 2}


def _mono(items: Iterable[tuple[JetKey, int]]) -> Monomial:
    acc: dict[JetKey, int] = {}
    for key, e in items:
        if e == 0:
            continue
        acc[key] = acc.get(key, 0) + e
    out = []
    for key, e in acc.items():
        if e == 0:
            continue
        if e < 0 and key != BASE:
            raise ValueError(f"negative exponent on derived jet {key}")
        out.append((key, e))
    out.sort()
    return tuple(out)


def _mono_order(m: Monomial) -> tuple:
    # graded ordering: total derivative weight, then structure
    weight = sum(abs(e) * sum(k) for k, e in m)
    return (weight, m)


class JetPolynomial:
    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, SigmaRational] | None = None):
        clean: dict[Monomial, SigmaRational] = {}
        for m, c in (terms or {}).items():
            c = SigmaRational.coerce(c)
            if not c.is_zero():
                clean[m] = c
        self.terms = clean

    # -- constructors ---------------------------------------------------
    @staticmethod
    def const(c) -> "JetPolynomial":
        return JetPolynomial({(): SigmaRational.coerce(c)})

    @staticmethod
    def jet(key: JetKey, exponent: int = 1) -> "JetPolynomial":
        return JetPolynomial({_mono([(key, exponent)]): SigmaRational(1)})

    @staticmethod
    def field(exponent: int = 1) -> "JetPolynomial":
        return JetPolynomial.jet(BASE, exponent)

    @staticmethod
    def coerce(v) -> "JetPolynomial":
        if isinstance(v, JetPolynomial):
            return v
        return JetPolynomial.const(v)

    # -- ring operations --------------------------------------------------
    def __add__(self, other):
        o = JetPolynomial.coerce(other)
        out = dict(self.terms)
        for m, c in o.terms.items():
            s = out.get(m, SigmaRational(0)) + c
            if s.is_zero():
                out.pop(m, None)
            else:
                out[m] = s
        return JetPolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return JetPolynomial({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-JetPolynomial.coerce(other))

    def __rsub__(self, other):
        return JetPolynomial.coerce(other) + (-self)

    def __mul__(self, other):
        o = JetPolynomial.coerce(other)
        out: dict[Monomial, SigmaRational] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in o.terms.items():
                m = _mono(list(m1) + list(m2))
                c = c1 * c2
                s = out.get(m, SigmaRational(0)) + c
                if s.is_zero():
                    out.pop(m, None)
                else:
                    out[m] = s
        return JetPolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            if len(self.terms) == 1:
                ((m, c),) = self.terms.items()
                inv_m = _mono([(k, -e) for k, e in m])
                return JetPolynomial({inv_m: c.inverse()}) ** (-n)
            raise ValueError("cannot invert a multi-term jet polynomial")
        out = JetPolynomial.const(1)
        for _ in range(n):
            out = out * self
        return out

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, JetPolynomial):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for m in sorted(self.terms, key=_mono_order):
            c = self.terms[m]
            factors = [f"w{list(k)}^{e}" if e != 1 else f"w{list(k)}" for k, e in m] or ["1"]
            parts.append(f"({c!r})*" + "*".join(factors))
        return " + ".join(parts)

    # -- calculus ----------------------------------------------------------
    def total_derivative(self, axis: str) -> "JetPolynomial":
        """Leibniz total derivative; jets shift their multi-index, the base
        field (any integer power) follows the power rule."""
        ax = _AXES[axis]
        out = JetPolynomial()
        for m, c in self.terms.items():
            for i, (key, e) in enumerate(m):
                lifted = tuple(key[a] + (1 if a == ax else 0) for a in range(3))
                rest = list(m[:i]) + [(key, e - 1)] + list(m[i + 1:]) + [(lifted, 1)]
                out = out + JetPolynomial({_mono(rest): c * e})
        return out

    def max_x_order(self) -> int:
        out = 0
        for m in self.terms:
            for key, _ in m:
                out = max(out, key[0])
        return out

    def time_jets(self) -> set[JetKey]:
        out = set()
        for m in self.terms:
            for key, _ in m:
                if key[2] > 0:
                    out.add(key)
        return out

    def substitute_time_jets(self, evolution_rhs: "JetPolynomial") -> "JetPolynomial":
        """Replace every jet with a t-derivative by the matching total
        derivative of the evolution right-hand side (which must be t-free)."""
        if evolution_rhs.time_jets():
            raise ValueError("evolution right-hand side must not contain time jets")
        cache: dict[JetKey, JetPolynomial] = {}

        def replacement(key: JetKey) -> JetPolynomial:
            got = cache.get(key)
            if got is None:
                if key[2] != 1:
                    raise ValueError(f"cannot substitute jet with t-order {key[2]}")
                got = evolution_rhs
                for _ in range(key[0]):
                    got = got.total_derivative("x")
                for _ in range(key[1]):
                    got = got.total_derivative("z")
                cache[key] = got
            return got

        out = JetPolynomial()
        for m, c in self.terms.items():
            local = [(k, e) for k, e in m if k[2] == 0]
            tpart = [(k, e) for k, e in m if k[2] > 0]
            piece = JetPolynomial({_mono(local): c})
            for key, e in tpart:
                piece = piece * (replacement(key) ** e)
            out = out + piece
        return out

    def substitute_jets(self, mapping: Mapping[JetKey, "JetPolynomial"]) -> "JetPolynomial":
        """Full jet substitution (every jet key must be covered)."""
        out = JetPolynomial()
        for m, c in self.terms.items():
            piece = JetPolynomial.const(c)
            for key, e in m:
                piece = piece * (mapping[key] ** e)
            out = out + piece
        return out

    def evaluate(self, jet_values: Mapping[JetKey, complex], sigma_sign: int = 1) -> complex:
        out = 0j
        for m, c in self.terms.items():
            v = c.to_complex(sigma_sign)
            for key, e in m:
                v *= jet_values[key] ** e
            out += v
        return out

    def monomials(self) -> list[tuple[Monomial, SigmaRational]]:
        return sorted(self.terms.items(), key=lambda kv: _mono_order(kv[0]))


def inverse_field_jets(max_key: Iterable[JetKey]) -> dict[JetKey, JetPolynomial]:
    """Jets of 1/w expressed in jets of w, for substitution checks.

    Returns a map covering each requested key (kx,kz,kt): the (kx,kz,kt)
    total derivative of w^-1.
    """
    out: dict[JetKey, JetPolynomial] = {}
    for key in max_key:
        p = JetPolynomial.field(-1)
        for _ in range(key[0]):
            p = p.total_derivative("x")
        for _ in range(key[1]):
            p = p.total_derivative("z")
        for _ in range(key[2]):
            p = p.total_derivative("t")
        out[key] = p
    return out
