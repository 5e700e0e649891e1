"""Singularity-structure test for the local equations.

Pipeline (all under the simplified manifold gamma = x + psi(z, t), gamma_x = 1):
  1. leading_order      -- exact dominant balance over the sigma-rational ring,
                           scanning integer exponents in [-4, -1].
  2. resonance_polynomial -- exact linearization coefficient interpolated at
                           integer points (randomized psi samples stay exact
                           because they are drawn as rationals).
  3. compatibility_check -- numeric recursion for the expansion coefficients;
                           coefficients are truncated 2-variable Taylor jets in
                           (z, t) at a generic point, so the forcing at a
                           resonance is checked as a function, not one number.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .jetring import JetPolynomial, Monomial
from .pde import EquationDescriptor, EQUATIONS
from .scalars import SigmaRational


class NoBalance(ValueError):
    """No candidate exponent produced a two-term dominant balance."""


class InterpolationUnstable(ArithmeticError):
    """The interpolated linearization polynomial failed its consistency or
    rationality checks."""


class CompatibilityFailure(AssertionError):
    """Nonzero forcing at a resonance: the expansion admits no arbitrary
    coefficient there.  Carries the witness parameters."""

    def __init__(self, message, witness):
        super().__init__(message)
        self.witness = witness


def _falling(a: Fraction | int, n: int) -> Fraction:
    out = Fraction(1)
    for i in range(n):
        out *= Fraction(a) - i
    return out


def _mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def _mono_power(m: Monomial, alpha: int) -> int:
    return sum(e * (alpha - sum(k)) for k, e in m)


@dataclass
class LeadingOrder:
    equation: str
    alpha: int
    base_power: int
    condition: dict[int, SigmaRational]      # monic in the leading coefficient
    roots: list[SigmaRational]
    dominant: list[Monomial]
    psi_samples: dict[str, Fraction]

    def to_dict(self):
        return {"equation": self.equation, "alpha": self.alpha,
                "condition": {d: repr(c) for d, c in sorted(self.condition.items())},
                "roots": [repr(r) for r in self.roots],
                "n_dominant_terms": len(self.dominant),
                "psi_samples": {k: str(v) for k, v in self.psi_samples.items()}}


def _rational_sqrt(f: Fraction) -> Fraction | None:
    if f < 0:
        return None
    num = math.isqrt(f.numerator)
    den = math.isqrt(f.denominator)
    if num * num == f.numerator and den * den == f.denominator:
        return Fraction(num, den)
    return None


def _condition_roots(condition: dict[int, SigmaRational]) -> list[SigmaRational]:
    degs = sorted(condition)
    if degs == [0, 1]:
        return [-(condition[0] / condition[1])]
    if degs == [0, 2] and condition[0].is_rational():
        c0 = condition[0].re
        if c0 > 0:
            r = _rational_sqrt(c0)
            if r is not None:
                return [SigmaRational(0, r), SigmaRational(0, -r)]
        else:
            r = _rational_sqrt(-c0)
            if r is not None:
                return [SigmaRational(r), SigmaRational(-r)]
    raise NoBalance(f"cannot solve leading condition with degrees {degs}")


def _psi_fraction_samples(rng: random.Random) -> dict[str, Fraction]:
    # magnitudes in [1/2, 2], random sign, exact rationals
    def draw():
        val = Fraction(rng.randint(8, 32), 16)
        return val if rng.random() < 0.5 else -val
    return {"psi_z": draw(), "psi_t": draw()}


def leading_order(eq: EquationDescriptor | str, seed: int = 42,
                  alphas: Sequence[int] = (-1, -2, -3, -4)) -> LeadingOrder:
    """Dominant balance: find the exponent where at least two terms share the
    minimal power and extract the (monic, stripped) condition polynomial on
    the leading coefficient."""
    if isinstance(eq, str):
        eq = EQUATIONS[eq]
    if not eq.local:
        raise ValueError("leading-order analysis needs the local form")
    rng = random.Random(seed)
    psis = _psi_fraction_samples(rng)
    poly = eq.jet_poly
    for alpha in alphas:
        powers = {m: _mono_power(m, alpha) for m in poly.terms}
        pmin = min(powers.values())
        dominant = [m for m, p in powers.items() if p == pmin]
        if len(dominant) < 2:
            continue
        condition: dict[int, SigmaRational] = {}
        for m in dominant:
            coeff = poly.terms[m]
            fac = SigmaRational(1)
            for key, e in m:
                per_jet = (_falling(alpha, sum(key))
                           * psis["psi_z"] ** key[1] * psis["psi_t"] ** key[2])
                fac = fac * SigmaRational(per_jet) ** e
            deg = _mono_degree(m)
            condition[deg] = condition.get(deg, SigmaRational(0)) + coeff * fac
        condition = {d: c for d, c in condition.items() if not c.is_zero()}
        if len(condition) < 2:
            continue   # balance exists but forces the trivial solution only
        dmin = min(condition)
        stripped = {d - dmin: c for d, c in condition.items()}
        lead_coeff = stripped[max(stripped)]
        monic = {d: c / lead_coeff for d, c in stripped.items()}
        roots = _condition_roots(monic)
        return LeadingOrder(eq.id, alpha, pmin, monic, roots, dominant, psis)
    raise NoBalance(f"no dominant balance for {eq.id} in alpha range {alphas}")


# ----------------------------------------------------------------------
# resonance polynomial (exact)
# ----------------------------------------------------------------------

@dataclass
class ResonancePolynomial:
    equation: str
    coefficients: list[Fraction]         # monic, ascending degree
    roots: list[int]
    degree: int
    rounding_error: float
    psi_samples: dict[str, Fraction]

    def __call__(self, j) -> Fraction:
        out = Fraction(0)
        for c in reversed(self.coefficients):
            out = out * j + c
        return out

    def to_dict(self):
        return {"equation": self.equation,
                "coefficients": [str(c) for c in self.coefficients],
                "roots": self.roots, "degree": self.degree,
                "rounding_error": self.rounding_error,
                "psi_samples": {k: str(v) for k, v in self.psi_samples.items()}}


def _linearized_value(dominant, poly: JetPolynomial, alpha: int, j: Fraction,
                      w0: SigmaRational, psis) -> SigmaRational:
    """Coefficient multiplying the new expansion coefficient at its entry
    order, evaluated exactly (psi derivatives are exact rationals)."""
    total = SigmaRational(0)
    for m in dominant:
        c = poly.terms[m]
        deg = _mono_degree(m)
        base_scalar = Fraction(1)
        for key, e in m:
            base_scalar *= (_falling(alpha, sum(key))
                            * psis["psi_z"] ** key[1] * psis["psi_t"] ** key[2]) ** e
        for key, e in m:
            per = (_falling(alpha, sum(key))
                   * psis["psi_z"] ** key[1] * psis["psi_t"] ** key[2])
            vary = (_falling(Fraction(j) + alpha, sum(key))
                    * psis["psi_z"] ** key[1] * psis["psi_t"] ** key[2])
            total = total + c * (w0 ** (deg - 1)) * SigmaRational(
                e * base_scalar / per * vary)
    return total


def resonance_polynomial(eq: EquationDescriptor | str, lead: LeadingOrder,
                         seed: int = 42) -> ResonancePolynomial:
    """Interpolate the linearization coefficient through integer points and
    recover the exact monic polynomial whose integer roots are the resonances."""
    if isinstance(eq, str):
        eq = EQUATIONS[eq]
    rng = random.Random(seed ^ 0x5eed)
    psis = _psi_fraction_samples(rng)
    w0 = lead.roots[0]
    degree = max(sum(key) for m in lead.dominant for key, _ in m)
    xs = list(range(degree + 1))
    ys = [_linearized_value(lead.dominant, eq.jet_poly, lead.alpha, Fraction(x),
                            w0, psis) for x in xs]
    # exact Lagrange interpolation
    coeffs = [SigmaRational(0)] * (degree + 1)
    for i, xi in enumerate(xs):
        basis = [Fraction(1)]
        denom = Fraction(1)
        for k, xk in enumerate(xs):
            if k == i:
                continue
            denom *= xi - xk
            new = [Fraction(0)] * (len(basis) + 1)
            for d, b in enumerate(basis):
                new[d] += b * (-xk)
                new[d + 1] += b
            basis = new
        for d, b in enumerate(basis):
            coeffs[d] = coeffs[d] + ys[i] * SigmaRational(b / denom)
    # consistency check at two extra integers
    for extra in (degree + 1, degree + 3):
        direct = _linearized_value(lead.dominant, eq.jet_poly, lead.alpha,
                                   Fraction(extra), w0, psis)
        horner = SigmaRational(0)
        for c in reversed(coeffs):
            horner = horner * SigmaRational(extra) + c
        if horner != direct:
            raise InterpolationUnstable("interpolated polynomial fails at "
                                        f"j={extra}")
    lead_c = coeffs[-1]
    if lead_c.is_zero():
        raise InterpolationUnstable("vanishing leading coefficient")
    monic = [c / lead_c for c in coeffs]
    if not all(c.is_rational() for c in monic):
        raise InterpolationUnstable("normalized coefficients are not rational")
    rat = [c.re for c in monic]
    roots = []
    for cand in range(-10, 31):
        val = Fraction(0)
        for c in reversed(rat):
            val = val * cand + c
        if val == 0:
            roots.append(cand)
    return ResonancePolynomial(eq.id if hasattr(eq, "id") else str(eq), rat,
                               sorted(roots), degree, 0.0, psis)


# ----------------------------------------------------------------------
# numeric recursion with Taylor-jet coefficients
# ----------------------------------------------------------------------

class ZT:
    """Truncated Taylor jet in (dz, dt): coefficient array c[a, b], a+b <= D."""
    __slots__ = ("c", "D")

    def __init__(self, c: np.ndarray, D: int):
        self.c = c
        self.D = D

    @staticmethod
    def zeros(D: int, dtype=complex) -> "ZT":
        return ZT(np.zeros((D + 1, D + 1), dtype=dtype), D)

    @staticmethod
    def const(val, D: int, dtype=complex) -> "ZT":
        z = ZT.zeros(D, dtype)
        z.c[0, 0] = val
        return z

    @staticmethod
    def random(rng: random.Random, D: int, zero_const: bool = False,
               dtype=complex) -> "ZT":
        z = ZT.zeros(D, dtype)
        for a in range(D + 1):
            for b in range(D + 1 - a):
                mag = rng.uniform(0.5, 2.0)
                z.c[a, b] = mag if rng.random() < 0.5 else -mag
        if zero_const:
            z.c[0, 0] = 0
        return z

    def copy(self):
        return ZT(self.c.copy(), self.D)

    def __add__(self, o: "ZT"):
        return ZT(self.c + o.c, self.D)

    def __sub__(self, o: "ZT"):
        return ZT(self.c - o.c, self.D)

    def scaled(self, s):
        return ZT(self.c * s, self.D)

    def mul(self, o: "ZT") -> "ZT":
        D = self.D
        out = np.zeros_like(self.c)
        A = self.c
        B = o.c
        for a in range(D + 1):
            row = A[a]
            for b in range(D + 1 - a):
                v = row[b]
                if v == 0:
                    continue
                out[a:, b:] += v * B[:D + 1 - a, :D + 1 - b]
        return ZT(out, D)

    def dz(self) -> "ZT":
        out = np.zeros_like(self.c)
        D = self.D
        out[:D, :] = self.c[1:, :] * np.arange(1, D + 1)[:, None]
        return ZT(out, D)

    def dt(self) -> "ZT":
        out = np.zeros_like(self.c)
        D = self.D
        out[:, :D] = self.c[:, 1:] * np.arange(1, D + 1)[None, :]
        return ZT(out, D)

    def norm(self) -> float:
        # entries above the truncation anti-diagonal are junk; skip them
        out = 0.0
        for a in range(self.D + 1):
            for b in range(self.D + 1 - a):
                out = max(out, abs(complex(self.c[a, b])))
        return out

    def inverse(self) -> "ZT":
        c00 = complex(self.c[0, 0])
        if c00 == 0:
            raise ZeroDivisionError("jet with zero constant term")
        x = ZT.const(1.0 / c00, self.D, dtype=self.c.dtype)
        two = ZT.const(2.0, self.D, dtype=self.c.dtype)
        for _ in range(max(1, math.ceil(math.log2(self.D + 1)) + 1)):
            x = x.mul(two - self.mul(x))
        return x


class GammaSeries:
    """Laurent series in gamma with ZT coefficients, clipped above."""
    __slots__ = ("terms", "clip", "D")

    def __init__(self, terms: dict[int, ZT], clip: int, D: int):
        self.terms = {m: c for m, c in terms.items() if m <= clip}
        self.clip = clip
        self.D = D

    def get(self, m: int) -> ZT | None:
        return self.terms.get(m)

    def add_term(self, m: int, c: ZT):
        if m > self.clip:
            return
        prev = self.terms.get(m)
        self.terms[m] = c if prev is None else prev + c

    def __add__(self, o: "GammaSeries"):
        out = GammaSeries(dict(self.terms), self.clip, self.D)
        for m, c in o.terms.items():
            out.add_term(m, c)
        return out

    def min_order(self) -> int:
        return min(self.terms, default=0)

    def dx(self) -> "GammaSeries":
        out = GammaSeries({}, self.clip, self.D)
        for m, c in self.terms.items():
            if m != 0:
                out.add_term(m - 1, c.scaled(m))
        return out

    def d_trans(self, which: str, psi_z: ZT, psi_t: ZT) -> "GammaSeries":
        """d/dz or d/dt: differentiate coefficients, plus the chain term
        through gamma = x + psi."""
        psi_d = psi_z if which == "z" else psi_t
        out = GammaSeries({}, self.clip, self.D)
        for m, c in self.terms.items():
            dc = c.dz() if which == "z" else c.dt()
            out.add_term(m, dc)
            if m != 0:
                out.add_term(m - 1, psi_d.mul(c).scaled(m))
        return out


_NO_CLIP = 10 ** 9


def _product_with_clip(factors: list[GammaSeries], final_clip: int,
                       D: int) -> GammaSeries:
    """Left fold of series products with the tightest valid intermediate clip.

    A term of a partial product above its clip can still reach `final_clip`
    after multiplying by the remaining factors' (negative) minimal orders, so
    intermediate i may only be clipped at final_clip - sum of remaining mins.
    """
    suffix_min = [0] * (len(factors) + 1)
    for i in range(len(factors) - 1, -1, -1):
        suffix_min[i] = suffix_min[i + 1] + factors[i].min_order()
    prod = factors[0]
    for i in range(1, len(factors)):
        clip_i = final_clip - suffix_min[i + 1]
        nxt = GammaSeries({}, clip_i, D)
        for m1, c1 in prod.terms.items():
            for m2, c2 in factors[i].terms.items():
                if m1 + m2 > clip_i:
                    continue
                nxt.add_term(m1 + m2, c1.mul(c2))
        prod = nxt
    return prod


@dataclass
class ResonanceVerdict:
    j: int
    relative_forcing: float
    arbitrary: bool
    recheck_used: bool = False


@dataclass
class CompatibilityReport:
    equation: str
    resonances: list[int]
    verdicts: dict[int, list[ResonanceVerdict]]   # per resonance, per trial
    trials: int
    max_j: int
    tol: float
    seed: int
    all_ok: bool
    witness: dict | None = None

    def worst(self, j: int) -> float:
        return max(v.relative_forcing for v in self.verdicts[j])

    def to_dict(self):
        return {"equation": self.equation, "resonances": self.resonances,
                "worst_relative_forcing": {j: self.worst(j) for j in self.verdicts},
                "trials": self.trials, "max_j": self.max_j, "tol": self.tol,
                "seed": self.seed, "all_ok": self.all_ok,
                "witness": self.witness}


def _run_trial(poly: JetPolynomial, alpha: int, m0: int, w0: complex,
               resonances: list[int], dominant, max_j: int,
               rng: random.Random, tol: float, dtype=complex, mp_ctx=None):
    """One recursion with fresh random psi and resonance injections.

    Returns (per-resonance relative forcing dict, psi jet used)."""
    D = max_j + 1
    if mp_ctx is not None:
        conv = lambda v: mp_ctx.mpc(v)
    else:
        conv = lambda v: complex(v)
    psi = ZT.random(rng, D, zero_const=True, dtype=dtype)
    if mp_ctx is not None:
        psi = ZT(np.array([[conv(complex(v)) for v in row] for row in psi.c],
                          dtype=object), D)
    psi_z = psi.dz()
    psi_t = psi.dt()

    S_terms: dict[int, ZT] = {alpha: ZT.const(conv(w0), D, dtype=psi.c.dtype)}
    forcings: dict[int, float] = {}

    def eval_F(S: GammaSeries, clip: int):
        """Returns (series of F[S], max per-monomial coefficient norm at each
        order)."""
        jets: dict[tuple, GammaSeries] = {}

        def jet_series(key):
            got = jets.get(key)
            if got is not None:
                return got
            s = S
            for _ in range(key[0]):
                s = s.dx()
            for _ in range(key[1]):
                s = s.d_trans("z", psi_z, psi_t)
            for _ in range(key[2]):
                s = s.d_trans("t", psi_z, psi_t)
            jets[key] = s
            return s

        total = GammaSeries({}, clip, D)
        scales: dict[int, float] = {}
        for m, c in poly.terms.items():
            factors = []
            for key, e in m:
                if e < 0:
                    raise ValueError("negative jet powers not supported here")
                factors.extend([jet_series(key)] * e)
            prod = _product_with_clip(factors, clip, D)
            cval = conv(c.to_complex(1))
            contrib = GammaSeries({mm: cc.scaled(cval) for mm, cc in prod.terms.items()},
                                  clip, D)
            for mm, cc in contrib.terms.items():
                scales[mm] = max(scales.get(mm, 0.0), cc.norm())
            total = total + contrib
        return total, scales

    # multiplier of the new coefficient entering at order m0 + j
    def multiplier(j: int) -> ZT:
        out = ZT.zeros(D, dtype=psi.c.dtype)
        pw_z: dict[int, ZT] = {}
        pw_t: dict[int, ZT] = {}

        def zpow(n):
            if n == 0:
                return None
            got = pw_z.get(n)
            if got is None:
                got = psi_z if n == 1 else zpow(n - 1).mul(psi_z)
                pw_z[n] = got
            return got

        def tpow(n):
            if n == 0:
                return None
            got = pw_t.get(n)
            if got is None:
                got = psi_t if n == 1 else tpow(n - 1).mul(psi_t)
                pw_t[n] = got
            return got

        for m in dominant:
            c = poly.terms[m].to_complex(1)
            deg = _mono_degree(m)
            tot_z = sum(key[1] * e for key, e in m)
            tot_t = sum(key[2] * e for key, e in m)
            scalar_all = 1.0
            for key, e in m:
                scalar_all *= float(_falling(alpha, sum(key))) ** e
            for key, e in m:
                per = float(_falling(alpha, sum(key)))
                vary = float(_falling(j + alpha, sum(key)))
                scal = conv(c * (w0 ** (deg - 1)) * e * scalar_all / per * vary)
                piece = ZT.const(scal, D, dtype=psi.c.dtype)
                zp = zpow(tot_z - key[1])
                tp = tpow(tot_t - key[2])
                if zp is not None:
                    piece = piece.mul(zp)
                if tp is not None:
                    piece = piece.mul(tp)
                out = out + piece
        return out

    for j in range(1, max_j + 1):
        clip = m0 + j
        S = GammaSeries(dict(S_terms), _NO_CLIP, D)
        R, scales = eval_F(S, clip)
        if j == 1:
            base = R.get(m0)
            base_scale = scales.get(m0, 0.0)
            if base is not None and base_scale and base.norm() > 1e-8 * base_scale:
                raise ArithmeticError("leading-order condition violated in recursion")
        E = R.get(clip) or ZT.zeros(D, dtype=psi.c.dtype)
        scale = max(scales.get(clip, 0.0), 1e-300)
        if j in resonances:
            forcings[j] = E.norm() / scale
            W = ZT.random(rng, D, dtype=complex)
            if mp_ctx is not None:
                W = ZT(np.array([[conv(complex(v)) for v in row] for row in W.c],
                                dtype=object), D)
            S_terms[alpha + j] = W
        else:
            M = multiplier(j)
            if abs(complex(M.c[0, 0])) < 1e-12 * max(scale, 1.0):
                raise InterpolationUnstable(
                    f"numeric multiplier vanishes at non-resonant j={j}")
            S_terms[alpha + j] = (E.mul(M.inverse())).scaled(-1)
    return forcings, psi


def compatibility_check(eq: EquationDescriptor | str, lead: LeadingOrder,
                        res_poly: ResonancePolynomial | None = None,
                        max_j: int = 6, trials: int = 20, seed: int = 42,
                        tol: float = 1e-8, branch: int = 0,
                        strict: bool = True) -> CompatibilityReport:
    """Drive the expansion recursion over `trials` random manifolds and check
    that the forcing vanishes at every positive resonance.

    Verdicts near the threshold are re-run in extended precision before being
    trusted.  With strict=True a failed resonance raises CompatibilityFailure.
    """
    if isinstance(eq, str):
        eq = EQUATIONS[eq]
    res_poly = res_poly or resonance_polynomial(eq, lead, seed)
    resonances = [j for j in res_poly.roots if 0 < j <= max_j]
    w0 = lead.roots[branch].to_complex(1)
    m0 = lead.base_power
    rng = random.Random(seed)
    verdicts: dict[int, list[ResonanceVerdict]] = {j: [] for j in resonances}
    witness = None
    for trial in range(trials):
        trial_seed = rng.randrange(1 << 30)
        trng = random.Random(trial_seed)
        forcings, psi = _run_trial(eq.jet_poly, lead.alpha, m0, w0, resonances,
                                   lead.dominant, max_j, trng, tol)
        for j, rel in forcings.items():
            recheck = False
            if tol / 100 < rel < tol * 100:
                import mpmath as mp
                with mp.workdps(40):
                    trng2 = random.Random(trial_seed)
                    forcings2, _ = _run_trial(eq.jet_poly, lead.alpha, m0, w0,
                                              resonances, lead.dominant, max_j,
                                              trng2, tol, dtype=object,
                                              mp_ctx=mp)
                rel = forcings2[j]
                recheck = True
            ok = rel <= tol
            verdicts[j].append(ResonanceVerdict(j, rel, ok, recheck))
            if not ok and witness is None:
                witness = {"resonance": j, "relative_forcing": rel,
                           "trial_seed": trial_seed}
    all_ok = all(v.arbitrary for vs in verdicts.values() for v in vs)
    report = CompatibilityReport(eq.id, resonances, verdicts, trials, max_j,
                                 tol, seed, all_ok, witness)
    if strict and not all_ok:
        raise CompatibilityFailure(
            f"forcing does not vanish at resonance {witness['resonance']} "
            f"of {eq.id} (relative {witness['relative_forcing']:.3e})", witness)
    return report


@dataclass
class ResonanceReport:
    equation: str
    lead: LeadingOrder
    res_poly: ResonancePolynomial
    compatibility: CompatibilityReport

    def to_dict(self):
        return {"equation": self.equation, "leading_order": self.lead.to_dict(),
                "resonance_polynomial": self.res_poly.to_dict(),
                "resonances": self.res_poly.roots,
                "compatibility": self.compatibility.to_dict()}


def run_painleve(eq: EquationDescriptor | str, trials: int = 20, max_j: int = 6,
                 seed: int = 42, tol: float = 1e-8,
                 strict: bool = True) -> ResonanceReport:
    if isinstance(eq, str):
        eq = EQUATIONS[eq]
    lead = leading_order(eq, seed)
    rp = resonance_polynomial(eq, lead, seed)
    comp = compatibility_check(eq, lead, rp, max_j, trials, seed, tol,
                               strict=strict)
    return ResonanceReport(eq.id, lead, rp, comp)
