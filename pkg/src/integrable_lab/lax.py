"""Differential-operator algebra over the jet ring and Lax-pair verification.

Local operators are finite maps from derivative monomials (powers of d_x plus
at most one d_y, d_z, d_t factor) to jet-polynomial coefficients.  Composition
follows the generalized Leibniz rule, so commutators of the three local pairs
can be computed exactly; vanishing after substituting the evolution equation
is the integrability certificate.

The 2+1 pairs carry antiderivative coefficients, so they are verified
numerically: [L,T]psi = L(T psi) - T(L psi) on closed-form test functions,
with every derivative taken symbolically and the atoms by quadrature.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Mapping, Sequence

from . import expr as ex
from .expr import Expression, PoleError, Var
from .jetring import JetPolynomial, JetKey
from .nlterms import NLEvaluator, NLSum
from .pde import evolution_rhs
from .quadrature import NonConvergence, QuadConfig
from .scalars import SIGMA, SigmaRational

OpKey = tuple[int, int, int, int]       # (nx, ny, nz, nt)

_J = JetPolynomial.jet
_F = JetPolynomial.field
_SR = SigmaRational


class NonlocalComposition(ValueError):
    """Symbolic composition would need a derivative rule an operator slot
    does not define (nonlocal coefficients, repeated transverse slots)."""


class NotMultiplicationOperator(ValueError):
    """A commutator residual kept positive-order terms after the evolution
    substitution, signalling a mis-transcribed pair."""


class DifferentialOperator:
    """Finite-support map (nx, ny, nz, nt) -> JetPolynomial, local symbolic."""
    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[OpKey, JetPolynomial] | None = None):
        clean: dict[OpKey, JetPolynomial] = {}
        for k, p in (terms or {}).items():
            p = JetPolynomial.coerce(p)
            if not p.is_zero():
                if k[1] > 1 or k[2] > 1 or k[3] > 1:
                    raise NonlocalComposition(f"repeated transverse slot in {k}")
                clean[k] = p
        self.terms = clean

    @staticmethod
    def identity() -> "DifferentialOperator":
        return DifferentialOperator({(0, 0, 0, 0): JetPolynomial.const(1)})

    @staticmethod
    def d(axis: str, coeff=1) -> "DifferentialOperator":
        key = {"x": (1, 0, 0, 0), "y": (0, 1, 0, 0),
               "z": (0, 0, 1, 0), "t": (0, 0, 0, 1)}[axis]
        return DifferentialOperator({key: JetPolynomial.coerce(coeff)})

    @staticmethod
    def mult(coeff) -> "DifferentialOperator":
        return DifferentialOperator({(0, 0, 0, 0): JetPolynomial.coerce(coeff)})

    def order(self) -> int:
        return max((k[0] for k in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other):
        out = dict(self.terms)
        for k, p in other.terms.items():
            s = out.get(k, JetPolynomial()) + p
            if s.is_zero():
                out.pop(k, None)
            else:
                out[k] = s
        return DifferentialOperator(out)

    def __sub__(self, other):
        return self + DifferentialOperator({k: -p for k, p in other.terms.items()})

    def __eq__(self, other):
        return isinstance(other, DifferentialOperator) and self.terms == other.terms

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for k in sorted(self.terms, reverse=True):
            label = "".join(["dx^%d" % k[0] if k[0] else "",
                          "dy" if k[1] else "", "dz" if k[2] else "",
                          "dt" if k[3] else ""]) or "1"
            bits.append(f"[{self.terms[k]!r}] {label}")
        return "  +  ".join(bits)


def op_compose(a: DifferentialOperator, b: DifferentialOperator) -> DifferentialOperator:
    """a after b, expanded with the generalized Leibniz rule.

    Coefficients depend on (x, z, t) through the jets, never on y, so d_y
    slides through; d_z and d_t act on coefficients by the total derivative.
    """
    out: dict[OpKey, JetPolynomial] = {}

    def put(key: OpKey, poly: JetPolynomial):
        if key[1] > 1 or key[2] > 1 or key[3] > 1:
            raise NonlocalComposition(f"composition needs repeated slot {key}")
        s = out.get(key, JetPolynomial()) + poly
        if s.is_zero():
            out.pop(key, None)
        else:
            out[key] = s

    for (ax, ay, az, at), ca in a.terms.items():
        for (bx, by, bz, bt), cb in b.terms.items():
            # move a's derivative monomial past cb, axis by axis
            pieces = [(cb, 0, 0)]   # (coefficient, extra z, extra t)
            if at:
                pieces = [(p.total_derivative("t"), dz, dt) for (p, dz, dt) in pieces] + \
                         [(p, dz, dt + 1) for (p, dz, dt) in pieces]
            if az:
                pieces = [(p.total_derivative("z"), dz, dt) for (p, dz, dt) in pieces] + \
                         [(p, dz + 1, dt) for (p, dz, dt) in pieces]
            for (p, dz, dt) in pieces:
                if p.is_zero():
                    continue
                # binomial expansion of dx^ax across p
                fact = 1
                deriv = p
                for k in range(ax + 1):
                    if k > 0:
                        fact = fact * (ax - k + 1) // k
                        deriv = deriv.total_derivative("x")
                    put((ax - k + bx, ay + by, dz + bz, dt + bt),
                        _SR(fact) * ca * deriv)
    return DifferentialOperator(out)


def op_commutator(a: DifferentialOperator, b: DifferentialOperator) -> DifferentialOperator:
    return op_compose(a, b) - op_compose(b, a)


def extend_operator_y(L: DifferentialOperator) -> DifferentialOperator:
    """Append the transverse derivative slot (the dimensional-extension move
    for the spatial operator); refuses a second application."""
    if any(k[1] for k in L.terms):
        raise ValueError("operator already carries the single d_y slot")
    return L + DifferentialOperator.d("y")


# ----------------------------------------------------------------------
# the three local pairs
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LaxPair:
    L: DifferentialOperator
    T: DifferentialOperator
    evolution: JetPolynomial            # time jet expressed in space jets
    equation: str

    def __post_init__(self):
        if any(k[3] for k in self.L.terms):
            raise ValueError("L must not contain d_t")
        t_terms = {k: p for k, p in self.T.terms.items() if k[3]}
        if list(t_terms) != [(0, 0, 0, 1)] or \
                t_terms[(0, 0, 0, 1)] != JetPolynomial.const(1):
            raise ValueError("T must contain d_t exactly once with unit coefficient")


def kdv_lax_pair() -> LaxPair:
    u = _F()
    ux = _J((1, 0, 0))
    L = DifferentialOperator({(2, 0, 0, 0): JetPolynomial.const(1),
                              (0, 0, 0, 0): u})
    T = op_compose(DifferentialOperator.d("x"), L) \
        + DifferentialOperator({(1, 0, 0, 0): _SR(Fraction(1, 2)) * u,
                                (0, 0, 0, 0): _SR(Fraction(-1, 4)) * ux}) \
        + DifferentialOperator.d("t")
    return LaxPair(L, T, evolution_rhs("KdV"), "KdV")


def mkdv_lax_pair() -> LaxPair:
    v = _F()
    vx = _J((1, 0, 0))
    s = SIGMA
    L = DifferentialOperator({(2, 0, 0, 0): JetPolynomial.const(1),
                              (1, 0, 0, 0): _SR(2) * s * v})
    T = op_compose(DifferentialOperator.d("x"), L) \
        + DifferentialOperator({
            (2, 0, 0, 0): s * v,
            (1, 0, 0, 0): -(_SR(Fraction(3, 2)) * v * v + _SR(Fraction(1, 2)) * s * vx)}) \
        + DifferentialOperator.d("t")
    return LaxPair(L, T, evolution_rhs("mKdV"), "mKdV")


def ckdv_lax_pair(t_perturbation: Fraction = Fraction(0)) -> LaxPair:
    """The pair for the unmodified 1+1 equation; `t_perturbation` shifts one
    T coefficient for negative-control runs."""
    w = _F
    wx = _J((1, 0, 0))
    wxx = _J((2, 0, 0))
    s = SIGMA
    L = DifferentialOperator({
        (2, 0, 0, 0): JetPolynomial.const(1),
        (1, 0, 0, 0): s * w(-1),
        (0, 0, 0, 0): _SR(Fraction(-1, 4)) * w(-2) - _SR(Fraction(1, 2)) * s * wx * w(-2),
    })
    t_order0 = (_SR(Fraction(-3, 16)) * s * w(-3)
                + _SR(Fraction(1, 4)) * wx * w(-3)
                - _SR(Fraction(1, 16)) * s * wx * wx * w(-3)
                + _SR(Fraction(1, 8)) * s * wxx * w(-2))
    if t_perturbation:
        t_order0 = t_order0 + _SR(Fraction(t_perturbation)) * w(-3)
    T = op_compose(DifferentialOperator.d("x"), L) \
        + DifferentialOperator({
            (2, 0, 0, 0): _SR(Fraction(1, 2)) * s * w(-1),
            (1, 0, 0, 0): _SR(Fraction(-1, 2)) * w(-2),
            (0, 0, 0, 0): t_order0}) \
        + DifferentialOperator.d("t")
    return LaxPair(L, T, evolution_rhs("CKdV"), "CKdV")


LOCAL_PAIRS = {"KdV": kdv_lax_pair, "mKdV": mkdv_lax_pair, "CKdV": ckdv_lax_pair}


@dataclass
class LaxVerdict:
    equation: str
    exact_zero: bool
    commutator: DifferentialOperator
    residual: DifferentialOperator
    notes: dict = dc_field(default_factory=dict)

    def to_dict(self):
        return {"equation": self.equation, "exact_zero": self.exact_zero,
                "commutator_order": self.commutator.order(),
                "commutator_keys": sorted(map(list, self.commutator.terms)),
                "residual": repr(self.residual) if not self.exact_zero else "0",
                **self.notes}


def verify_lax_symbolic(pair: LaxPair) -> LaxVerdict:
    """Compute [L, T], substitute the evolution into every coefficient, and
    demand the exactly-empty operator.

    The pre-substitution commutator is reported as well: its coefficients are
    (jet-polynomial multiples of) the evolution equation, which is the
    operator-level statement being certified.
    """
    K = op_commutator(pair.L, pair.T)
    residual = DifferentialOperator(
        {k: p.substitute_time_jets(pair.evolution) for k, p in K.terms.items()})
    ok = residual.is_zero()
    if not ok and residual.order() > 0:
        raise NotMultiplicationOperator(
            f"[L,T] keeps positive-order terms after substitution for "
            f"{pair.equation}: {residual!r}")
    return LaxVerdict(pair.equation, ok, K, residual)


def instantiate_and_apply(op: DifferentialOperator, field: Expression,
                          psi: Expression,
                          axis_names: tuple[str, ...] = ("x", "t")) -> Expression:
    """Apply a local symbolic operator to a closed-form test function, with
    the unknown field bound to a closed-form expression (bridges the jet-ring
    and expression engines)."""
    jet_cache: dict[JetKey, Expression] = {}
    if len(axis_names) == 3:
        axis_of_slot = dict(enumerate(axis_names))
    else:
        axis_of_slot = {0: axis_names[0], 2: axis_names[1]}

    def jet_expr(key: JetKey) -> Expression:
        got = jet_cache.get(key)
        if got is None:
            got = field
            for slot, count in enumerate(key):
                for _ in range(count):
                    got = ex.differentiate(got, Var(axis_of_slot[slot]))
            jet_cache[key] = got
        return got

    def coeff_expr(p: JetPolynomial) -> Expression:
        parts = []
        for m, c in p.monomials():
            factors = [ex.Const(c)]
            for key, e in m:
                factors.append(ex.pow_(jet_expr(key), e))
            parts.append(ex.mul(*factors))
        return ex.add(*parts) if parts else ex.ZERO

    out = ex.ZERO
    for (nx, ny, nz, nt), coeff in op.terms.items():
        applied = psi
        for _ in range(nx):
            applied = ex.differentiate(applied, Var("x"))
        if ny:
            applied = ex.differentiate(applied, Var("y"))
        if nz:
            applied = ex.differentiate(applied, Var("z"))
        if nt:
            applied = ex.differentiate(applied, Var("t"))
        out = ex.add(out, ex.mul(coeff_expr(coeff), applied))
    return out


# ----------------------------------------------------------------------
# numeric verification for the 2+1 pairs
# ----------------------------------------------------------------------

class NumericOperator:
    """Sum of (coefficient in the nonlocal algebra) x (derivative monomial),
    applied to members of the nonlocal algebra."""

    def __init__(self, terms: Sequence[tuple[NLSum, tuple[int, int, int]]]):
        self.terms = list(terms)   # ((coeff, (nx, nz, nt)), ...)

    def apply(self, f: NLSum) -> NLSum:
        out = NLSum()
        cache: dict[tuple[int, int, int], NLSum] = {(0, 0, 0): f}

        def deriv(key):
            got = cache.get(key)
            if got is not None:
                return got
            nx, nz, nt = key
            if nt:
                got = deriv((nx, nz, nt - 1)).derivative("t")
            elif nz:
                got = deriv((nx, nz - 1, nt)).derivative("z")
            else:
                got = deriv((nx - 1, nz, nt)).derivative("x")
            cache[key] = got
            return got

        for coeff, key in self.terms:
            out = out + coeff * deriv(key)
        return out


def _sig_e():
    return ex.SIGMA_C


def numeric_L_second_order(w: Expression, modified: bool = False) -> NumericOperator:
    """The spatial operator: d_x^2 + (sigma/w) d_x + h[w] for the unmodified
    field, or d_x^2 + 2 sigma v d_x for the modified one."""
    one = NLSum.from_expr(ex.ONE)
    if modified:
        return NumericOperator([
            (one, (2, 0, 0)),
            (NLSum.from_expr(ex.mul(ex.Const(2), _sig_e(), w)), (1, 0, 0)),
        ])
    wx = ex.differentiate(w, Var("x"))
    h = ex.add(ex.mul(ex.Const(Fraction(-1, 4)), ex.pow_(w, -2)),
               ex.mul(ex.Const(Fraction(-1, 2)), _sig_e(), wx, ex.pow_(w, -2)))
    return NumericOperator([
        (one, (2, 0, 0)),
        (NLSum.from_expr(ex.mul(_sig_e(), ex.pow_(w, -1))), (1, 0, 0)),
        (NLSum.from_expr(h), (0, 0, 0)),
    ])


def numeric_L_cbs(u: Expression) -> NumericOperator:
    return NumericOperator([(NLSum.from_expr(ex.ONE), (2, 0, 0)),
                            (NLSum.from_expr(u), (0, 0, 0))])


def _dz_L_terms(L: NumericOperator) -> list[tuple[NLSum, tuple[int, int, int]]]:
    """d_z after L: coefficients differentiate, plus L shifted by one d_z."""
    out = []
    for coeff, (nx, nz, nt) in L.terms:
        out.append((coeff.derivative("z"), (nx, nz, nt)))
        out.append((coeff, (nx, nz + 1, nt)))
    return out


def numeric_T_ckdv2p1(w: Expression) -> NumericOperator:
    """Transverse flow operator of the 2+1 pair.

    The two separate antiderivative coefficients of 1/w^2 and w_x^2/w^2 carry
    equal-and-opposite weights and are realized as the combined (residue-free)
    atom; term-by-term quadrature would diverge at the field's zeros.
    """
    s = _sig_e()
    w_nl = NLSum.from_expr(w)
    wx = ex.differentiate(w, Var("x"))
    wz = ex.differentiate(w, Var("z"))
    wxz = ex.differentiate(wx, Var("z"))
    inv = lambda n: ex.pow_(w, -n)
    A1 = NLSum.atom("x", (w_nl ** (-1)).derivative("z"))
    one = NLSum.from_expr(ex.ONE)
    combined = ((one - NLSum.from_expr(wx) ** 2) * w_nl ** (-2)).derivative("z")
    A23 = NLSum.atom("x", combined)
    terms = list(_dz_L_terms(numeric_L_second_order(w)))
    half = ex.Const(Fraction(1, 2))
    terms += [
        (NLSum.from_expr(ex.mul(half, s)) * A1, (2, 0, 0)),
        (NLSum.from_expr(ex.mul(ex.Const(Fraction(-1, 2)), inv(1))) * A1, (1, 0, 0)),
        (NLSum.from_expr(ex.add(
            ex.mul(ex.Const(Fraction(1, 8)), s, wxz, inv(2)),
            ex.mul(ex.Const(Fraction(-1, 8)), s, wx, wz, inv(3)))), (0, 0, 0)),
        (NLSum.from_expr(ex.add(
            ex.mul(ex.Const(Fraction(-1, 8)), s, inv(2)),
            ex.mul(ex.Const(Fraction(1, 4)), wx, inv(2)))) * A1, (0, 0, 0)),
        (NLSum.from_expr(ex.mul(ex.Const(Fraction(-1, 16)), s, inv(1))) * A23, (0, 0, 0)),
        (one, (0, 0, 1)),
    ]
    return NumericOperator(terms)


def numeric_T_cbs(u: Expression) -> NumericOperator:
    uz = ex.differentiate(u, Var("z"))
    terms = list(_dz_L_terms(numeric_L_cbs(u)))
    terms += [
        (NLSum.from_expr(ex.Const(Fraction(1, 2))) * NLSum.atom(
            "x", NLSum.from_expr(uz)), (1, 0, 0)),
        (NLSum.from_expr(ex.mul(ex.Const(Fraction(-1, 4)), uz)), (0, 0, 0)),
        (NLSum.from_expr(ex.ONE), (0, 0, 1)),
    ]
    return NumericOperator(terms)


def numeric_T_mcbs(v: Expression) -> NumericOperator:
    s = _sig_e()
    v_nl = NLSum.from_expr(v)
    vz = ex.differentiate(v, Var("z"))
    vt = ex.differentiate(v, Var("t"))
    vxz = ex.differentiate(ex.differentiate(v, Var("x")), Var("z"))
    Avz = NLSum.atom("x", NLSum.from_expr(vz))
    Av2z = NLSum.atom("x", (v_nl * v_nl).derivative("z"))
    Avt = NLSum.atom("x", NLSum.from_expr(vt))
    terms = list(_dz_L_terms(numeric_L_second_order(v, modified=True)))
    terms += [
        (NLSum.from_expr(s) * Avz, (2, 0, 0)),
        (NLSum.from_expr(ex.Const(Fraction(1, 2))) * Av2z
         + NLSum.from_expr(ex.mul(ex.Const(-2), v)) * Avz
         + NLSum.from_expr(ex.mul(ex.Const(Fraction(-1, 2)), s, vz)), (1, 0, 0)),
        (NLSum.from_expr(ex.mul(ex.Const(Fraction(1, 4)), s, vxz)), (0, 0, 0)),
        (NLSum.from_expr(ex.mul(ex.Const(Fraction(1, 2)), s, v)) * Av2z, (0, 0, 0)),
        (NLSum.from_expr(s) * Avt, (0, 0, 0)),
        (NLSum.from_expr(ex.ONE), (0, 0, 1)),
    ]
    return NumericOperator(terms)


def default_test_functions(n: int = 5, seed: int = 7) -> list[Expression]:
    """Smooth exponential-polynomial basket used as Lax test functions."""
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        a = rng.uniform(-0.4, 0.4)
        b = rng.uniform(-0.4, 0.4)
        c = rng.uniform(-0.3, 0.3)
        poly = ex.add(ex.ONE, ex.mul(ex.Const(Fraction(rng.randint(-3, 3), 4)), Var("x")),
                      ex.mul(ex.Const(Fraction(rng.randint(-3, 3), 4)), Var("z")))
        out.append(ex.mul(poly, ex.exp_(ex.add(
            ex.mul(ex.Const(Fraction(round(a * 16), 16)), Var("x")),
            ex.mul(ex.Const(Fraction(round(b * 16), 16)), Var("z")),
            ex.mul(ex.Const(Fraction(round(c * 16), 16)), Var("t"))))))
    return out


@dataclass
class NumericLaxReport:
    equation: str
    max_abs: float
    normalization: float
    n_points: int
    n_excluded: int
    seed: int
    notes: dict = dc_field(default_factory=dict)

    @property
    def relative(self):
        return self.max_abs / self.normalization if self.normalization else float("inf")

    def to_dict(self):
        return {"equation": self.equation, "max_abs": self.max_abs,
                "normalization": self.normalization, "relative": self.relative,
                "n_points": self.n_points, "n_excluded": self.n_excluded,
                "seed": self.seed, **self.notes}


def verify_lax_numeric(L: NumericOperator, T: NumericOperator,
                       testfns: Sequence[Expression] | None = None,
                       n_points: int = 200,
                       box: Mapping[str, tuple[float, float]] | None = None,
                       cfg: QuadConfig = QuadConfig(),
                       exclude=None, seed: int = 42, sigma_sign: int = 1,
                       equation: str = "", max_exclusion: float = 0.02,
                       ) -> NumericLaxReport:
    """Evaluate ([L,T] psi)(x,z,t) = L(T psi) - T(L psi) at sample points.

    All derivatives are exact (the algebra differentiates through the atoms);
    quadrature enters only through atom values.  Points failing quadrature are
    excluded up to `max_exclusion`.
    """
    rng = random.Random(seed)
    testfns = testfns or default_test_functions()
    box = box or {"x": (-8.0, 8.0), "z": (-4.0, 4.0), "t": (-1.5, 1.5)}
    evaluator = NLEvaluator(cfg, sigma_sign)
    max_abs = norm = 0.0
    n = in_pole_tube = quad_failures = 0
    for psi in testfns:
        psi_nl = NLSum.from_expr(psi)
        lt = L.apply(T.apply(psi_nl))
        tl = T.apply(L.apply(psi_nl))
        for _ in range(n_points):
            pt = {k: rng.uniform(*box[k]) for k in ("x", "z", "t")}
            if exclude is not None and exclude(pt):
                in_pole_tube += 1
                continue
            try:
                a = evaluator.eval_nl(lt, pt)
                b = evaluator.eval_nl(tl, pt)
            except (NonConvergence, PoleError):
                quad_failures += 1
                continue
            max_abs = max(max_abs, abs(a - b))
            norm = max(norm, abs(a), abs(b))
            n += 1
    total = n + quad_failures
    if total and quad_failures > max_exclusion * total:
        raise NonConvergence(f"{quad_failures}/{total} points lost to "
                             f"quadrature (> {max_exclusion:.0%})")
    return NumericLaxReport(equation, max_abs, norm, n,
                            in_pole_tube + quad_failures, seed,
                            notes={"pole_tube": in_pole_tube,
                                   "quad_failures": quad_failures})
