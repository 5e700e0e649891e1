"""Multi-soliton solution family built from exponential tau-function pairs.

Constructs, for N solitons with wavenumbers p_j (and transverse parameters q_j
in 2+1 mode): the phase functions, the interaction coefficients, the tau pair
(f, g), the log-derivative solution of the modified equations, the
H-polynomial closed form of the integral factor, and the full solution of the
unmodified equations w = sigma*(f/g)^2*(x + H/f) + c*(f/g)^2.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from . import expr as ex
from .expr import Expression, Var
from .scalars import SigmaRational, snap_rational


class DegenerateWavenumbers(ValueError):
    """p_j + p_k = 0 (interaction coefficient undefined) or p_j = 0."""


def _coerce_wavenumber(v) -> Fraction | float:
    snapped = snap_rational(v) if isinstance(v, float) else Fraction(v)
    if snapped is None:
        warnings.warn(f"wavenumber {v!r} is not close to a small rational; "
                      "interaction coefficients will be floating point")
        return float(v)
    return snapped


@dataclass(frozen=True)
class SolitonParams:
    """Parameter bundle for an N-soliton solution.

    q is None in 1+1 mode.  c is the integration constant of the unmodified
    equation's solution (the residual is c-independent; 0 in every figure).
    """
    p: tuple
    s: tuple
    q: tuple | None = None
    c: complex | SigmaRational = 0
    sigma_sign: int = 1

    def __post_init__(self):
        from .scalars import SigmaBranch
        if isinstance(self.sigma_sign, SigmaBranch):
            object.__setattr__(self, "sigma_sign", self.sigma_sign.sign)
        p = tuple(_coerce_wavenumber(v) for v in self.p)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "s", tuple(Fraction(v) if not isinstance(v, float) else v
                                            for v in self.s))
        if self.q is not None:
            object.__setattr__(self, "q", tuple(_coerce_wavenumber(v) for v in self.q))
            if len(self.q) != len(p):
                raise ValueError("q must match p in length")
        if len(self.s) != len(p):
            raise ValueError("s must match p in length")
        for j, pj in enumerate(p):
            if pj == 0:
                raise DegenerateWavenumbers(f"p[{j}] = 0")
        for j, k in itertools.combinations(range(len(p)), 2):
            if p[j] + p[k] == 0:
                raise DegenerateWavenumbers(f"p[{j}] + p[{k}] = 0")

    @property
    def n(self) -> int:
        return len(self.p)

    @property
    def two_d(self) -> bool:
        return self.q is not None

    @property
    def variables(self) -> tuple[str, ...]:
        return ("x", "z", "t") if self.two_d else ("x", "t")


@dataclass(frozen=True)
class TauPair:
    f: Expression
    g: Expression
    params: SolitonParams


@dataclass(frozen=True)
class SolutionBundle:
    tag: str                    # mKdV | CKdV | mCBS | CKdV-2p1
    field: Expression
    tau: TauPair
    h: Expression | None = None


def build_lambda(params: SolitonParams, j: int) -> Expression:
    """Phase of soliton j: p x + s - (p^3/4) t, or with q z and -(p^2 q/4) t."""
    if not 1 <= j <= params.n:
        raise IndexError(f"soliton index {j} out of range 1..{params.n}")
    pj = params.p[j - 1]
    sj = params.s[j - 1]
    if params.two_d:
        qj = params.q[j - 1]
        r = -Fraction(1, 4) * pj * pj * qj if not isinstance(pj, float) and not isinstance(qj, float) \
            else -(float(pj) ** 2) * float(qj) / 4
        return ex.add(ex.mul(ex.Const(pj), Var("x")),
                      ex.mul(ex.Const(qj), Var("z")),
                      ex.mul(ex.Const(r), Var("t")),
                      ex.Const(sj))
    r = -Fraction(1, 4) * pj ** 3 if not isinstance(pj, float) else -float(pj) ** 3 / 4
    return ex.add(ex.mul(ex.Const(pj), Var("x")),
                  ex.mul(ex.Const(r), Var("t")),
                  ex.Const(sj))


def eta_pair(params: SolitonParams, j: int, k: int):
    """(p_j - p_k)^2 / (p_j + p_k)^2, exact when wavenumbers are rational."""
    pj, pk = params.p[j - 1], params.p[k - 1]
    if pj + pk == 0:
        raise DegenerateWavenumbers(f"p[{j}] + p[{k}] = 0")
    num = (pj - pk) ** 2
    den = (pj + pk) ** 2
    if isinstance(num, Fraction) and isinstance(den, Fraction):
        return num / den
    return float(num) / float(den)


def eta_coefficients(params: SolitonParams, indices: Sequence[int]):
    """Product of pair coefficients over all index pairs (multi-soliton weight)."""
    idx = list(indices)
    if len(set(idx)) != len(idx):
        raise ValueError("indices must be distinct")
    out: Fraction | float = Fraction(1)
    for a, b in itertools.combinations(idx, 2):
        out = out * eta_pair(params, a, b)
    return out


def _subsets(n: int, exclude: int | None = None) -> Iterable[tuple[int, ...]]:
    """Nonempty index subsets of 1..n in (size, lex) order; deterministic."""
    pool = [j for j in range(1, n + 1) if j != exclude]
    for size in range(1, len(pool) + 1):
        yield from itertools.combinations(pool, size)


def _tau_sum(params: SolitonParams, signs: bool, exclude: int | None = None) -> Expression:
    lams = {j: build_lambda(params, j) for j in range(1, params.n + 1)}
    terms: list[Expression] = [ex.ONE]
    for subset in _subsets(params.n, exclude):
        coeff = eta_coefficients(params, subset)
        if signs and len(subset) % 2 == 1:
            coeff = -coeff
        terms.append(ex.mul(ex.Const(coeff),
                            ex.exp_(ex.add(*[lams[j] for j in subset]))))
    return ex.add(*terms)


def build_tau_pair(params: SolitonParams) -> TauPair:
    """f over all 2^N index subsets; g identical with (-1)^size signs."""
    return TauPair(_tau_sum(params, signs=False), _tau_sum(params, signs=True), params)


def tau_f_excluding(params: SolitonParams, j: int) -> Expression:
    """The f-sum restricted to subsets avoiding soliton j (same weights)."""
    return _tau_sum(params, signs=False, exclude=j)


def build_h_polynomial(params: SolitonParams) -> Expression:
    """H = 4 * sum_j f_excluding(j) / p_j (closed form of the integral factor)."""
    terms = []
    for j in range(1, params.n + 1):
        terms.append(ex.mul(ex.Const(Fraction(4) / params.p[j - 1]
                                     if not isinstance(params.p[j - 1], float)
                                     else 4.0 / params.p[j - 1]),
                            tau_f_excluding(params, j)))
    return ex.add(*terms)


def build_mkdv_solution(params: SolitonParams) -> SolutionBundle:
    """v = sigma*(log(f/g))_x for the modified (1+1 or 2+1) equation."""
    tau = build_tau_pair(params)
    fx = ex.differentiate(tau.f, Var("x"))
    gx = ex.differentiate(tau.g, Var("x"))
    v = ex.mul(ex.SIGMA_C, ex.add(ex.mul(fx, ex.pow_(tau.f, -1)),
                                  ex.mul(ex.MINUS_ONE, gx, ex.pow_(tau.g, -1))))
    return SolutionBundle("mCBS" if params.two_d else "mKdV", v, tau)


def build_ckdv_solution(params: SolitonParams) -> SolutionBundle:
    """w = sigma*(f/g)^2*(x + H/f) + c*(f/g)^2."""
    tau = build_tau_pair(params)
    h = build_h_polynomial(params)
    f_over_g_sq = ex.mul(ex.pow_(tau.f, 2), ex.pow_(tau.g, -2))
    integral_factor = ex.add(Var("x"), ex.mul(h, ex.pow_(tau.f, -1)))
    w = ex.add(ex.mul(ex.SIGMA_C, f_over_g_sq, integral_factor),
               ex.mul(ex.Const(params.c), f_over_g_sq))
    return SolutionBundle("CKdV-2p1" if params.two_d else "CKdV", w, tau, h)


def w_over_sigma(params: SolitonParams) -> Expression:
    """(f/g)^2*(x + H/f) + (c/sigma)*(f/g)^2 -- real-valued when c = 0."""
    tau = build_tau_pair(params)
    h = build_h_polynomial(params)
    f_over_g_sq = ex.mul(ex.pow_(tau.f, 2), ex.pow_(tau.g, -2))
    out = ex.mul(f_over_g_sq, ex.add(Var("x"), ex.mul(h, ex.pow_(tau.f, -1))))
    c = params.c if isinstance(params.c, SigmaRational) else params.c
    if isinstance(c, SigmaRational) and c.is_zero() or c == 0:
        return out
    c_over_sigma = ex.mul(ex.Const(c), ex.pow_(ex.SIGMA_C, -1))
    return ex.add(out, ex.mul(c_over_sigma, f_over_g_sq))


# ----------------------------------------------------------------------
# identity and pole bookkeeping
# ----------------------------------------------------------------------

def integral_identity_lhs(params: SolitonParams) -> tuple[Expression, list[Expression]]:
    """H_x f - H f_x + f^2 - g^2 (identically zero); returns (sum, terms)."""
    tau = build_tau_pair(params)
    h = build_h_polynomial(params)
    terms = [ex.mul(ex.differentiate(h, Var("x")), tau.f),
             ex.mul(ex.MINUS_ONE, h, ex.differentiate(tau.f, Var("x"))),
             ex.pow_(tau.f, 2),
             ex.mul(ex.MINUS_ONE, ex.pow_(tau.g, 2))]
    return ex.add(*terms), terms


def check_integral_identity(params: SolitonParams, trials: int = 100,
                            tol: float = 1e-9, seed: int = 42,
                            box: dict | None = None, precision: str = "double"):
    """Sample the differentiated-integral identity at random real points.

    Relative to the largest participating term so the check stays meaningful
    when the exponential sums are huge.  Extended precision re-evaluates both
    sides with 50-digit arithmetic.
    """
    import random
    rng = random.Random(seed)
    total, terms = integral_identity_lhs(params)
    names = sorted(set().union(*[ex.free_variables(tm) for tm in terms]) | {"x", "t"})
    ranges = box or {"x": (-10.0, 10.0), "z": (-6.0, 6.0), "t": (-2.0, 2.0)}
    if precision == "extended":
        def fn_of(e):
            def f(*vals):
                pt = ex.EvaluationPoint(dict(zip(names, vals)),
                                        precision="extended",
                                        sigma_sign=params.sigma_sign)
                return complex(ex.evaluate(e, pt))
            return f
        fn_total = fn_of(total)
        fn_terms = [fn_of(tm) for tm in terms]
    else:
        fn_total = ex.compile_fn(total, names, params.sigma_sign)
        fn_terms = [ex.compile_fn(tm, names, params.sigma_sign) for tm in terms]
    worst = 0.0
    witness = None
    for _ in range(trials):
        vals = [rng.uniform(*ranges[n]) for n in names]
        scale = max(1.0, *(abs(f(*vals)) for f in fn_terms))
        err = abs(fn_total(*vals)) / scale
        if err > worst:
            worst = err
            witness = dict(zip(names, vals))
    return (worst <= tol), worst, witness


def real_zeros_on_line(e: Expression, var: str, frozen: dict[str, float],
                       lo: float, hi: float, n_scan: int = 400,
                       sigma_sign: int = 1) -> list[float]:
    """Real zeros of a real-valued expression along one variable, by
    sign-change bisection on a scan grid."""
    names = sorted(ex.free_variables(e))
    fn = ex.compile_fn(e, names, sigma_sign)

    def f(v: float) -> float:
        vals = [frozen[n] if n != var else v for n in names]
        return fn(*vals).real

    zeros = []
    xs = [lo + (hi - lo) * i / n_scan for i in range(n_scan + 1)]
    prev = f(xs[0])
    for a, b in zip(xs[:-1], xs[1:]):
        cur = f(b)
        if prev == 0.0:
            zeros.append(a)
        elif prev * cur < 0:
            lo_, hi_ = a, b
            for _ in range(80):
                mid = (lo_ + hi_) / 2
                if f(lo_) * f(mid) <= 0:
                    hi_ = mid
                else:
                    lo_ = mid
            zeros.append((lo_ + hi_) / 2)
        prev = cur
    return zeros


def pole_locations(params: SolitonParams, frozen: dict[str, float],
                   lo: float = -10.0, hi: float = 10.0) -> list[float]:
    """x-locations where the solution blows up (tau denominator zeros) or the
    solution itself vanishes (denominators of the unmodified equation)."""
    tau = build_tau_pair(params)
    zeros = real_zeros_on_line(tau.g, "x", frozen, lo, hi)
    h = build_h_polynomial(params)
    big_g = ex.add(Var("x"), ex.mul(h, ex.pow_(tau.f, -1)))
    zeros += real_zeros_on_line(big_g, "x", frozen, lo, hi)
    return sorted(zeros)
