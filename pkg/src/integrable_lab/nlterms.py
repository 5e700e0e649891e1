"""Algebra of closed-form expressions extended by antiderivative atoms.

An atom is d_x^{-1}(body) or d_y^{-1}(body): the decay-normalized
antiderivative of a body that is itself a member of the algebra (usually a
plain expression; nesting is allowed and used by the y-extended reduction
check).  The algebra is closed under +, *, integer powers of single terms, and
partial derivatives: d/dx of an x-atom is its body, any other derivative
commutes into the body (justified by the decay normalization).

Numeric evaluation realizes atoms by adaptive quadrature from the decay proxy,
lifting the path into the complex plane to pass real poles (all integrands
handled here are residue-free at real poles, so the lift is exact).
"""
from __future__ import annotations

from typing import Mapping, Sequence

from . import expr as ex
from .expr import Expression
from .quadrature import (QuadConfig, cumulative_antiderivative, detour_points,
                         integrate_path)

_DIRECTIONS = ("x", "y")


class Atom:
    """Antiderivative of `body` in `direction`, normalized to vanish at the
    decay end (-infinity proxy)."""
    __slots__ = ("direction", "body", "_key")

    def __init__(self, direction: str, body: "NLSum"):
        if direction not in _DIRECTIONS:
            raise ValueError(f"no antiderivative slot for direction {direction!r}")
        self.direction = direction
        self.body = body
        self._key = ("atom", direction, body.key())

    def key(self):
        return self._key

    def __eq__(self, other):
        return isinstance(other, Atom) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"Dinv_{self.direction}[{self.body!r}]"


Factors = tuple  # tuple[(Atom, int), ...] sorted by atom key


class NLSum:
    """Sum of terms coeff * prod(atom^exponent); coeff is an Expression."""
    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Factors, Expression] | None = None):
        clean: dict[Factors, Expression] = {}
        for fac, coeff in (terms or {}).items():
            if not ex._is_zero_const(coeff):
                clean[fac] = coeff
        self.terms = clean

    # -- constructors ------------------------------------------------------
    @staticmethod
    def from_expr(e) -> "NLSum":
        e = ex.as_expr(e)
        if ex._is_zero_const(e):
            return NLSum()
        return NLSum({(): e})

    @staticmethod
    def coerce(v) -> "NLSum":
        if isinstance(v, NLSum):
            return v
        return NLSum.from_expr(v)

    @staticmethod
    def atom(direction: str, body) -> "NLSum":
        return NLSum({((Atom(direction, NLSum.coerce(body)), 1),): ex.ONE})

    def key(self):
        return tuple(sorted((tuple((a.key(), e) for a, e in fac), hash(coeff))
                            for fac, coeff in self.terms.items()))

    # -- algebra -------------------------------------------------------------
    def __add__(self, other):
        o = NLSum.coerce(other)
        out = dict(self.terms)
        for fac, coeff in o.terms.items():
            prev = out.get(fac)
            s = ex.add(prev, coeff) if prev is not None else coeff
            if ex._is_zero_const(s):
                out.pop(fac, None)
            else:
                out[fac] = s
        return NLSum(out)

    __radd__ = __add__

    def __neg__(self):
        return NLSum({fac: ex.mul(ex.MINUS_ONE, c) for fac, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-NLSum.coerce(other))

    def __rsub__(self, other):
        return NLSum.coerce(other) + (-self)

    def __mul__(self, other):
        o = NLSum.coerce(other)
        out: dict[Factors, Expression] = {}
        for f1, c1 in self.terms.items():
            for f2, c2 in o.terms.items():
                merged: dict[Atom, int] = {}
                for a, e in list(f1) + list(f2):
                    merged[a] = merged.get(a, 0) + e
                fac = tuple(sorted(((a, e) for a, e in merged.items() if e != 0),
                                   key=lambda ae: ae[0].key()))
                c = ex.mul(c1, c2)
                prev = out.get(fac)
                s = ex.add(prev, c) if prev is not None else c
                if ex._is_zero_const(s):
                    out.pop(fac, None)
                else:
                    out[fac] = s
        return NLSum(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n >= 0:
            out = NLSum.from_expr(ex.ONE)
            for _ in range(n):
                out = out * self
            return out
        if len(self.terms) != 1:
            raise ValueError("can only invert single-term nonlocal products")
        ((fac, coeff),) = self.terms.items()
        inv_fac = tuple(sorted(((a, -e) for a, e in fac), key=lambda ae: ae[0].key()))
        return NLSum({inv_fac: ex.pow_(coeff, -1)}) ** (-n)

    def derivative(self, direction: str) -> "NLSum":
        out = NLSum()
        for fac, coeff in self.terms.items():
            dc = ex.differentiate(coeff, ex.Var(direction))
            if not ex._is_zero_const(dc):
                out = out + NLSum({fac: dc})
            for i, (a, e) in enumerate(fac):
                rest = fac[:i] + ((a, e - 1),) + fac[i + 1:]
                rest = tuple((aa, ee) for aa, ee in rest if ee != 0)
                base = NLSum({rest: ex.mul(ex.Const(e), coeff)})
                if direction == a.direction:
                    da: NLSum = a.body
                else:
                    da = NLSum({((Atom(a.direction, a.body.derivative(direction)), 1),): ex.ONE})
                out = out + base * da
        return out

    def as_expression(self) -> Expression | None:
        """Collapse to a plain expression when no atoms are present."""
        if any(fac for fac in self.terms):
            return None
        if not self.terms:
            return ex.ZERO
        return self.terms.get((), ex.ZERO)

    def atoms(self) -> list[Atom]:
        seen = {}
        for fac in self.terms:
            for a, _ in fac:
                seen[a.key()] = a
        return [seen[k] for k in sorted(seen)]

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({c!r})*{list(f)!r}" if f else f"({c!r})"
                          for f, c in self.terms.items())


class NLEvaluator:
    """Quadrature-backed evaluator with atom caching.

    Atom values are cached per (atom, frozen transverse point); row sweeps can
    prefill the cache along a sorted x line in one cumulative pass.
    """

    def __init__(self, cfg: QuadConfig = QuadConfig(), sigma_sign: int = 1):
        self.cfg = cfg
        self.sigma_sign = sigma_sign
        self._fns: dict[Expression, tuple] = {}
        self._atom_vals: dict[tuple, dict[float, complex]] = {}

    # -- compiled closed forms ------------------------------------------------
    def _fn(self, e: Expression):
        got = self._fns.get(e)
        if got is None:
            names = sorted(ex.free_variables(e))
            got = (ex.compile_fn(e, names, self.sigma_sign), names)
            self._fns[e] = got
        return got

    def eval_expr(self, e: Expression, point: Mapping[str, float]) -> complex:
        fn, names = self._fn(e)
        return fn(*[complex(point[n]) for n in names])

    # -- atoms -----------------------------------------------------------------
    def _frozen_key(self, atom: Atom, point: Mapping[str, float]):
        others = tuple(sorted((k, complex(v)) for k, v in point.items()
                              if k != atom.direction))
        return (atom.key(), others)

    def _integrand(self, atom: Atom, point: Mapping[str, float]):
        body_expr = atom.body.as_expression()
        var = atom.direction
        if body_expr is not None:
            fn, names = self._fn(body_expr)
            others = {n: complex(point[n]) for n in names if n != var}

            def f(v):
                return fn(*[v if n == var else others[n] for n in names])
            return f

        def f_nested(v):
            inner = dict(point)
            inner[var] = v
            return self.eval_nl(atom.body, inner)
        return f_nested

    def atom_value(self, atom: Atom, point: Mapping[str, float]) -> complex:
        key = self._frozen_key(atom, point)
        per = self._atom_vals.setdefault(key, {})
        upper = float(complex(point[atom.direction]).real)
        if upper in per:
            return per[upper]
        f = self._integrand(atom, point)
        val = integrate_path(f, detour_points(self.cfg.lower, upper, self.cfg.detour),
                             self.cfg)
        per[upper] = val
        return val

    def prefill_row(self, nl: NLSum, xs: Sequence[float],
                    frozen: Mapping[str, float], direction: str = "x") -> None:
        """Cumulative sweep filling the atom cache along sorted xs."""
        for atom in nl.atoms():
            if atom.direction != direction:
                continue
            point = dict(frozen)
            point[direction] = xs[0]
            key = self._frozen_key(atom, point)
            f = self._integrand(atom, point)
            vals = cumulative_antiderivative(f, self.cfg.lower, list(xs), self.cfg)
            self._atom_vals.setdefault(key, {}).update(
                {float(x): v for x, v in zip(xs, vals)})

    # -- full sums ---------------------------------------------------------------
    def eval_nl(self, nl: NLSum, point: Mapping[str, float]) -> complex:
        out = 0j
        for fac, coeff in nl.terms.items():
            v = self.eval_expr(coeff, point)
            for a, e in fac:
                v *= self.atom_value(a, point) ** e
            out += v
        return out

    def eval_terms(self, nl: NLSum, point: Mapping[str, float]) -> list[complex]:
        """Per-term values (for residual normalization)."""
        out = []
        for fac, coeff in nl.terms.items():
            v = self.eval_expr(coeff, point)
            for a, e in fac:
                v *= self.atom_value(a, point) ** e
            out.append(v)
        return out
