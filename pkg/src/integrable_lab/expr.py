"""Minimal exact symbolic engine: immutable expression trees over x, z, t (and
friends) with exact differentiation, numeric evaluation, and randomized
equivalence testing.

The grammar is deliberately closed-form only (variables, exact constants, sums,
products, integer powers, exponentials): every expression stays inside the
grammar under differentiation, so no unevaluated derivative nodes can appear.
Unknown fields live in the jet ring (see jetring), not here.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .scalars import SIGMA, SigmaRational


class PoleError(ArithmeticError):
    """Raised when a negative integer power is taken of an exact zero base."""


class Expression:
    __slots__ = ("_hash",)

    # -- operator sugar -------------------------------------------------
    @staticmethod
    def _as_operand(v):
        try:
            return as_expr(v)
        except TypeError:
            return None

    def __add__(self, other):
        o = Expression._as_operand(other)
        return add(self, o) if o is not None else NotImplemented

    def __radd__(self, other):
        o = Expression._as_operand(other)
        return add(o, self) if o is not None else NotImplemented

    def __sub__(self, other):
        o = Expression._as_operand(other)
        return add(self, mul(MINUS_ONE, o)) if o is not None else NotImplemented

    def __rsub__(self, other):
        o = Expression._as_operand(other)
        return add(o, mul(MINUS_ONE, self)) if o is not None else NotImplemented

    def __mul__(self, other):
        o = Expression._as_operand(other)
        return mul(self, o) if o is not None else NotImplemented

    def __rmul__(self, other):
        o = Expression._as_operand(other)
        return mul(o, self) if o is not None else NotImplemented

    def __truediv__(self, other):
        o = Expression._as_operand(other)
        return mul(self, pow_(o, -1)) if o is not None else NotImplemented

    def __rtruediv__(self, other):
        o = Expression._as_operand(other)
        return mul(o, pow_(self, -1)) if o is not None else NotImplemented

    def __pow__(self, n: int):
        return pow_(self, n)

    def __neg__(self):
        return mul(MINUS_ONE, self)

    def __hash__(self):
        return self._hash

    def sort_key(self):
        raise NotImplementedError


class Const(Expression):
    __slots__ = ("value",)

    def __init__(self, value):
        if isinstance(value, (int, Fraction)):
            value = SigmaRational(value)
        if not isinstance(value, (SigmaRational, complex, float)):
            raise TypeError(f"bad constant type {type(value).__name__}")
        if isinstance(value, float):
            value = complex(value)
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "_hash", hash(("c", value)))

    def __eq__(self, other):
        return isinstance(other, Const) and self.value == other.value

    __hash__ = Expression.__hash__

    def __repr__(self):
        return repr(self.value)

    def sort_key(self):
        return (0, repr(self.value))


class Var(Expression):
    __slots__ = ("name",)

    def __init__(self, name: str):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "_hash", hash(("v", name)))

    def __eq__(self, other):
        return isinstance(other, Var) and self.name == other.name

    __hash__ = Expression.__hash__

    def __repr__(self):
        return self.name

    def sort_key(self):
        return (1, self.name)


class Add(Expression):
    __slots__ = ("args",)

    def __init__(self, args: tuple):
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "_hash", hash(("+",) + tuple(hash(a) for a in args)))

    def __eq__(self, other):
        return (isinstance(other, Add) and self._hash == other._hash
                and self.args == other.args)

    __hash__ = Expression.__hash__

    def __repr__(self):
        return "(" + " + ".join(map(repr, self.args)) + ")"

    def sort_key(self):
        return (2, len(self.args), tuple(a.sort_key() for a in self.args))


class Mul(Expression):
    __slots__ = ("args",)

    def __init__(self, args: tuple):
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "_hash", hash(("*",) + tuple(hash(a) for a in args)))

    def __eq__(self, other):
        return (isinstance(other, Mul) and self._hash == other._hash
                and self.args == other.args)

    __hash__ = Expression.__hash__

    def __repr__(self):
        return "(" + "*".join(map(repr, self.args)) + ")"

    def sort_key(self):
        return (3, len(self.args), tuple(a.sort_key() for a in self.args))


class Pow(Expression):
    __slots__ = ("base", "exponent")

    def __init__(self, base: Expression, exponent: int):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exponent", exponent)
        object.__setattr__(self, "_hash", hash(("^", hash(base), exponent)))

    def __eq__(self, other):
        return (isinstance(other, Pow) and self.exponent == other.exponent
                and self.base == other.base)

    __hash__ = Expression.__hash__

    def __repr__(self):
        return f"{self.base!r}**{self.exponent}"

    def sort_key(self):
        return (4, self.exponent, self.base.sort_key())


class Exp(Expression):
    __slots__ = ("arg",)

    def __init__(self, arg: Expression):
        object.__setattr__(self, "arg", arg)
        object.__setattr__(self, "_hash", hash(("e", hash(arg))))

    def __eq__(self, other):
        return isinstance(other, Exp) and self.arg == other.arg

    __hash__ = Expression.__hash__

    def __repr__(self):
        return f"exp({self.arg!r})"

    def sort_key(self):
        return (5, self.arg.sort_key())


ZERO = Const(0)
ONE = Const(1)
MINUS_ONE = Const(-1)
SIGMA_C = Const(SIGMA)

X = Var("x")
Y = Var("y")
Z = Var("z")
T = Var("t")


def as_expr(v) -> Expression:
    if isinstance(v, Expression):
        return v
    if isinstance(v, (int, Fraction, SigmaRational, float, complex)):
        return Const(v)
    raise TypeError(f"cannot interpret {type(v).__name__} as an expression")


def _const_mul(a, b):
    if isinstance(a, SigmaRational) and isinstance(b, SigmaRational):
        return a * b
    ca = a.to_complex() if isinstance(a, SigmaRational) else a
    cb = b.to_complex() if isinstance(b, SigmaRational) else b
    return ca * cb


def _const_add(a, b):
    if isinstance(a, SigmaRational) and isinstance(b, SigmaRational):
        return a + b
    ca = a.to_complex() if isinstance(a, SigmaRational) else a
    cb = b.to_complex() if isinstance(b, SigmaRational) else b
    return ca + cb


def _is_zero_const(e) -> bool:
    return isinstance(e, Const) and (e.value.is_zero() if isinstance(e.value, SigmaRational)
                                     else e.value == 0)


def _is_one_const(e) -> bool:
    return isinstance(e, Const) and (e.value == SigmaRational(1) if isinstance(e.value, SigmaRational)
                                     else e.value == 1)


def add(*terms) -> Expression:
    flat = []
    const = SigmaRational(0)
    const_f = None
    for term in terms:
        t = as_expr(term)
        items = t.args if isinstance(t, Add) else (t,)
        for it in items:
            if isinstance(it, Const):
                if isinstance(it.value, SigmaRational):
                    const = const + it.value
                else:
                    const_f = it.value if const_f is None else const_f + it.value
            else:
                flat.append(it)
    if const_f is not None:
        flat.append(Const(_const_add(const, const_f)))
    elif not const.is_zero() or not flat:
        flat.append(Const(const))
    if len(flat) == 1:
        return flat[0]
    return Add(tuple(flat))


def mul(*factors) -> Expression:
    flat = []
    const = SigmaRational(1)
    const_f = None
    for factor in factors:
        f = as_expr(factor)
        items = f.args if isinstance(f, Mul) else (f,)
        for it in items:
            if isinstance(it, Const):
                if isinstance(it.value, SigmaRational):
                    const = const * it.value
                else:
                    const_f = it.value if const_f is None else const_f * it.value
            else:
                flat.append(it)
    if const.is_zero() or (const_f is not None and const_f == 0):
        return ZERO
    if const_f is not None:
        flat.insert(0, Const(_const_mul(const, const_f)))
    elif const != SigmaRational(1) or not flat:
        flat.insert(0, Const(const))
    if len(flat) == 1:
        return flat[0]
    return Mul(tuple(flat))


def pow_(base, exponent: int) -> Expression:
    b = as_expr(base)
    if not isinstance(exponent, int):
        raise TypeError("exponents must be integers")
    if exponent == 0:
        return ONE
    if exponent == 1:
        return b
    if isinstance(b, Const):
        if isinstance(b.value, SigmaRational):
            if b.value.is_zero() and exponent < 0:
                raise PoleError("negative power of exact zero")
            return Const(b.value ** exponent)
        if b.value == 0 and exponent < 0:
            raise PoleError("negative power of exact zero")
        return Const(b.value ** exponent)
    if isinstance(b, Pow):
        return pow_(b.base, b.exponent * exponent)
    if isinstance(b, Exp):
        return Exp(mul(Const(exponent), b.arg))
    return Pow(b, exponent)


def exp_(arg) -> Expression:
    a = as_expr(arg)
    if _is_zero_const(a):
        return ONE
    return Exp(a)


def free_variables(e: Expression) -> set:
    out = set()
    stack = [e]
    seen = set()
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        if isinstance(n, Var):
            out.add(n.name)
        elif isinstance(n, (Add, Mul)):
            stack.extend(n.args)
        elif isinstance(n, Pow):
            stack.append(n.base)
        elif isinstance(n, Exp):
            stack.append(n.arg)
    return out


def differentiate(e: Expression, v) -> Expression:
    """Exact partial derivative with respect to variable v."""
    vname = v.name if isinstance(v, Var) else str(v)
    cache: dict[int, Expression] = {}

    def d(n: Expression) -> Expression:
        got = cache.get(id(n))
        if got is not None:
            return got
        if isinstance(n, Const):
            r = ZERO
        elif isinstance(n, Var):
            r = ONE if n.name == vname else ZERO
        elif isinstance(n, Add):
            r = add(*[d(a) for a in n.args])
        elif isinstance(n, Mul):
            parts = []
            for i, a in enumerate(n.args):
                da = d(a)
                if _is_zero_const(da):
                    continue
                parts.append(mul(*(n.args[:i] + (da,) + n.args[i + 1:])))
            r = add(*parts) if parts else ZERO
        elif isinstance(n, Pow):
            db = d(n.base)
            if _is_zero_const(db):
                r = ZERO
            else:
                r = mul(Const(n.exponent), pow_(n.base, n.exponent - 1), db)
        elif isinstance(n, Exp):
            da = d(n.arg)
            r = ZERO if _is_zero_const(da) else mul(n, da)
        else:  # pragma: no cover
            raise TypeError(f"unknown node {type(n).__name__}")
        cache[id(n)] = r
        return r

    return d(e)


def substitute(e: Expression, mapping: Mapping[str, Expression]) -> Expression:
    """Replace variables by expressions (capture-free; grammar is first-order)."""
    cache: dict[int, Expression] = {}

    def s(n: Expression) -> Expression:
        got = cache.get(id(n))
        if got is not None:
            return got
        if isinstance(n, Var):
            r = mapping.get(n.name, n)
        elif isinstance(n, Const):
            r = n
        elif isinstance(n, Add):
            r = add(*[s(a) for a in n.args])
        elif isinstance(n, Mul):
            r = mul(*[s(a) for a in n.args])
        elif isinstance(n, Pow):
            r = pow_(s(n.base), n.exponent)
        else:
            r = exp_(s(n.arg))
        cache[id(n)] = r
        return r

    return s(e)


def normalize(e: Expression) -> Expression:
    """Deterministic canonical-ish form: rebuild through the folding
    constructors with sorted operands. Not a general simplifier."""
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Add):
        parts = sorted((normalize(a) for a in e.args), key=lambda n: n.sort_key())
        return add(*parts)
    if isinstance(e, Mul):
        parts = sorted((normalize(a) for a in e.args), key=lambda n: n.sort_key())
        return mul(*parts)
    if isinstance(e, Pow):
        return pow_(normalize(e.base), e.exponent)
    return exp_(normalize(e.arg))


# ----------------------------------------------------------------------
# evaluation
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class EvaluationPoint:
    bindings: Mapping[str, complex]
    precision: str = "double"       # "double" | "extended"
    sigma_sign: int = 1
    dps: int = 50


def evaluate(e: Expression, pt: EvaluationPoint):
    """Evaluate to a complex value (mpmath.mpc in extended mode).

    Raises PoleError when a negative power's base evaluates to zero and
    KeyError when a free variable is unbound.
    """
    if pt.precision == "extended":
        return _evaluate_mp(e, pt)
    cache: dict[int, complex] = {}

    def ev(n: Expression) -> complex:
        got = cache.get(id(n))
        if got is not None:
            return got
        if isinstance(n, Const):
            r = n.value.to_complex(pt.sigma_sign) if isinstance(n.value, SigmaRational) else n.value
        elif isinstance(n, Var):
            r = complex(pt.bindings[n.name])
        elif isinstance(n, Add):
            r = 0j
            for a in n.args:
                r += ev(a)
        elif isinstance(n, Mul):
            r = 1 + 0j
            for a in n.args:
                r *= ev(a)
        elif isinstance(n, Pow):
            b = ev(n.base)
            if n.exponent < 0 and b == 0:
                raise PoleError("negative power of zero base during evaluation")
            r = b ** n.exponent
        else:
            import cmath
            r = cmath.exp(ev(n.arg))
        cache[id(n)] = r
        return r

    try:
        return ev(e)
    except ZeroDivisionError as exc:
        raise PoleError(str(exc)) from exc


def _evaluate_mp(e: Expression, pt: EvaluationPoint):
    import mpmath as mp
    cache: dict[int, object] = {}
    with mp.workdps(max(pt.dps, 50)):
        def ev(n):
            got = cache.get(id(n))
            if got is not None:
                return got
            if isinstance(n, Const):
                if isinstance(n.value, SigmaRational):
                    r = n.value.to_mpc(mp, pt.sigma_sign)
                else:
                    r = mp.mpc(n.value)
            elif isinstance(n, Var):
                r = mp.mpc(pt.bindings[n.name])
            elif isinstance(n, Add):
                r = mp.mpc(0)
                for a in n.args:
                    r += ev(a)
            elif isinstance(n, Mul):
                r = mp.mpc(1)
                for a in n.args:
                    r *= ev(a)
            elif isinstance(n, Pow):
                b = ev(n.base)
                if n.exponent < 0 and b == 0:
                    raise PoleError("negative power of zero base during evaluation")
                r = b ** n.exponent
            else:
                r = mp.exp(ev(n.arg))
            cache[id(n)] = r
            return r

        try:
            return ev(e)
        except ZeroDivisionError as exc:
            raise PoleError(str(exc)) from exc


def compile_fn(e: Expression, varnames: Iterable[str] | None = None,
               sigma_sign: int = 1) -> Callable[..., complex]:
    """Compile to a plain python callable over complex doubles.

    Common subexpressions (by structural identity) are evaluated once.
    Division by an exact zero surfaces as PoleError.
    """
    names = list(varnames) if varnames is not None else sorted(free_variables(e))
    lines: list[str] = []
    symbol: dict[Expression, str] = {}
    counter = [0]

    def emit(n: Expression) -> str:
        got = symbol.get(n)
        if got is not None:
            return got
        if isinstance(n, Const):
            v = n.value.to_complex(sigma_sign) if isinstance(n.value, SigmaRational) else complex(n.value)
            s = f"complex({v.real!r},{v.imag!r})"
        elif isinstance(n, Var):
            s = f"_a_{n.name}"
        elif isinstance(n, Add):
            s = "(" + "+".join(emit(a) for a in n.args) + ")"
        elif isinstance(n, Mul):
            s = "(" + "*".join(emit(a) for a in n.args) + ")"
        elif isinstance(n, Pow):
            s = f"({emit(n.base)}**{n.exponent})"
        else:
            s = f"_exp({emit(n.arg)})"
        counter[0] += 1
        name = f"_v{counter[0]}"
        lines.append(f" {name} = {s}")
        symbol[n] = name
        return name

    top = emit(e)
    args = ",".join(f"_a_{n}" for n in names)
    src = f"def _fn({args}):\n" + "\n".join(lines) + f"\n return {top}\n"
    import cmath
    env = {"_exp": cmath.exp}
    exec(compile(src, "<compiled-expression>", "exec"), env)
    raw = env["_fn"]

    def fn(*vals):
        try:
            return raw(*vals)
        except ZeroDivisionError as exc:
            raise PoleError(str(exc)) from exc

    fn.varnames = names  # type: ignore[attr-defined]
    return fn


# ----------------------------------------------------------------------
# randomized equivalence testing
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SampleBox:
    """Real sampling box per variable, with a pole-avoidance radius."""
    ranges: Mapping[str, tuple[float, float]]
    pole_radius: float = 1e-3


@dataclass
class EquivalenceResult:
    ok: bool
    trials: int
    witness: dict | None = None
    max_err: float = 0.0

    def __bool__(self):
        return self.ok


def equivalent_on_samples(a: Expression, b: Expression, box: SampleBox,
                          trials: int = 100, tol: float = 1e-9,
                          seed: int = 42, sigma_sign: int = 1) -> EquivalenceResult:
    """Randomized check that a == b on the box.

    True iff |a-b| <= tol*(1 + max(|a|,|b|)) at every sampled point.  Points
    whose evaluation hits a pole (or whose negative-power bases come within the
    pole-avoidance radius) are resampled, up to 10x the trial budget.
    """
    rng = random.Random(seed)
    vars_ = sorted(free_variables(a) | free_variables(b))
    for v in vars_:
        if v not in box.ranges:
            raise KeyError(f"sample box does not cover variable {v!r}")
    max_err = 0.0
    done = 0
    attempts = 0
    while done < trials:
        if attempts > 10 * trials:
            raise PoleError("could not find enough pole-free sample points")
        attempts += 1
        pt = EvaluationPoint({v: rng.uniform(*box.ranges[v]) for v in vars_},
                             sigma_sign=sigma_sign)
        try:
            va = evaluate(a, pt)
            vb = evaluate(b, pt)
        except PoleError:
            continue
        m = max(abs(va), abs(vb))
        if m > 1.0 / max(box.pole_radius, 1e-12):  # pole proximity guard
            continue
        err = abs(va - vb) / (1.0 + m)
        max_err = max(max_err, err)
        if err > tol:
            return EquivalenceResult(False, done + 1,
                                     {"point": dict(pt.bindings), "a": va, "b": vb,
                                      "err": err}, max_err)
        done += 1
    return EquivalenceResult(True, trials, None, max_err)
