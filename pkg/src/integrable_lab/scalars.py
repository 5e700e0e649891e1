"""Exact coefficient arithmetic: rationals adjoined with the unit sigma, sigma^2 = -1.

Every symbolic computation in this package (expression constants, jet-polynomial
coefficients) runs over this ring so that identities can be certified exactly.
sigma only acquires a concrete value (+i or -i) at numeric evaluation time.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Union

Rat = Union[int, Fraction]


class SigmaRational:
    """a + b*sigma with exact rational a, b and sigma^2 = -1."""

    __slots__ = ("re", "im")

    def __init__(self, re: Rat = 0, im: Rat = 0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    # -- constructors -------------------------------------------------
    @staticmethod
    def coerce(x) -> "SigmaRational":
        if isinstance(x, SigmaRational):
            return x
        if isinstance(x, (int, Fraction)):
            return SigmaRational(x)
        raise TypeError(f"cannot coerce {type(x).__name__} into the sigma-rational ring")

    # -- ring operations ----------------------------------------------
    @staticmethod
    def _try_coerce(x):
        if isinstance(x, SigmaRational):
            return x
        if isinstance(x, (int, Fraction)):
            return SigmaRational(x)
        return None

    def __add__(self, other):
        o = SigmaRational._try_coerce(other)
        if o is None:
            return NotImplemented
        return SigmaRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return SigmaRational(-self.re, -self.im)

    def __sub__(self, other):
        o = SigmaRational._try_coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = SigmaRational._try_coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = SigmaRational._try_coerce(other)
        if o is None:
            return NotImplemented
        # (a + b s)(c + d s) = (ac - bd) + (ad + bc) s
        return SigmaRational(self.re * o.re - self.im * o.im,
                             self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def inverse(self) -> "SigmaRational":
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise ZeroDivisionError("sigma-rational division by zero")
        return SigmaRational(self.re / n, -self.im / n)

    def __truediv__(self, other):
        return self * SigmaRational.coerce(other).inverse()

    def __rtruediv__(self, other):
        return SigmaRational.coerce(other) * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("only integer powers are defined")
        base = self if n >= 0 else self.inverse()
        out = SigmaRational(1)
        for _ in range(abs(n)):
            out = out * base
        return out

    # -- predicates / conversion ---------------------------------------
    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def is_rational(self) -> bool:
        return self.im == 0

    def to_complex(self, sigma_sign: int = 1) -> complex:
        return complex(self.re) + complex(self.im) * (1j if sigma_sign >= 0 else -1j)

    def to_mpc(self, mp, sigma_sign: int = 1):
        s = mp.mpc(0, 1 if sigma_sign >= 0 else -1)
        return (mp.mpf(self.re.numerator) / self.re.denominator
                + s * mp.mpf(self.im.numerator) / self.im.denominator)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, SigmaRational)):
            o = SigmaRational.coerce(other)
            return self.re == o.re and self.im == o.im
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}*s"
        return f"({self.re}{'+' if self.im > 0 else '-'}{abs(self.im)}*s)"


SIGMA = SigmaRational(0, 1)
ONE = SigmaRational(1)
ZERO = SigmaRational(0)


class SigmaBranch:
    """Choice of the square root of -1: sign +1 means sigma = +i."""
    __slots__ = ("sign",)

    def __init__(self, sign: int = 1):
        if sign not in (1, -1):
            raise ValueError("branch sign must be +1 or -1")
        self.sign = sign

    @staticmethod
    def coerce(v) -> "SigmaBranch":
        if isinstance(v, SigmaBranch):
            return v
        return SigmaBranch(1 if v >= 0 else -1)

    @property
    def value(self) -> complex:
        return 1j if self.sign > 0 else -1j

    def __eq__(self, other):
        return isinstance(other, SigmaBranch) and self.sign == other.sign

    def __hash__(self):
        return hash(("branch", self.sign))

    def __repr__(self):
        return f"SigmaBranch({'+1' if self.sign > 0 else '-1'})"


def snap_rational(x: float, tol: float = 1e-12) -> Fraction | None:
    """Snap a float to a nearby small-denominator rational, or None if not close.

    Used so float-valued wavenumbers like 0.5 become exact and the interaction
    coefficients stay in the rational field.
    """
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, Fraction):
        return x
    cand = Fraction(x).limit_denominator(10**6)
    if abs(float(cand) - x) <= tol * max(1.0, abs(x)):
        return cand
    return None
