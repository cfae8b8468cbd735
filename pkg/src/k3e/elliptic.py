"""Period lattices, Weierstrass p and Eisenstein sums for one elliptic curve.

The curve is ``y**2 = 4 x**3 - g2 x - g3``.  Its period lattice comes from
the complex AGM; ``p``, ``p'`` and the Eisenstein sums ``g2(L) = 60 sum w**-4``
and ``g3(L) = 140 sum w**-6`` are evaluated as lattice sums over the nonzero
lattice points.

Lattice sums
------------
Every sum here has the form ``sum_w f(w)`` with ``f`` decaying like a power
whose angular average over a circle vanishes (``w**-k``, or the Laurent tail
of ``(z - w)**-2 - w**-2``).  Truncating with a sharp disk of radius ``R``
would need ``R ~ tol**-1/2`` lattice points per unit of accuracy.  Instead each
term is weighted by the radial window ``W(r) = erfc((r - R0)/sigma)/2``.  By
Poisson summation the neglected part ``sum (1 - W) f`` equals a sum of Fourier
transforms over the nonzero dual lattice, and those decay like
``exp(-(pi sigma |xi|)**2)``; the continuum term vanishes by the angular
average.  With ``beta**2 ~ log(1/tol)``, ``sigma = beta/(pi xi_min)`` and
``R0 = beta sigma`` both error sources are ``O(exp(-beta**2))``, so a few
thousand lattice points give ``1e-12`` relative accuracy.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.special import erfc

__all__ = [
    "DegenerateCubicError",
    "ConvergenceError",
    "ResourceLimitError",
    "CurveCoefficients",
    "PeriodLattice",
    "SeriesValue",
    "agm",
    "reduce_basis",
    "period_lattice",
    "eisenstein_g2",
    "eisenstein_g3",
    "eisenstein_series",
    "wp",
    "wp_prime",
    "wp_pair",
    "wp_second",
    "is_pole",
    "reduce_z",
    "j_invariant",
    "DEFAULT_TOL_WP",
    "DEFAULT_TOL_EIS",
]

DEFAULT_TOL_WP = 1e-10
DEFAULT_TOL_EIS = 1e-8
#: distance to the lattice, in units of |omega1|, below which z is a pole
POLE_EPS = 1e-8
#: hard cap on lattice points in one window
MAX_LATTICE_POINTS = 4_000_000
_TIE_EPS = 1e-12


class DegenerateCubicError(ValueError):
    """``g2**3 - 27 g3**2 == 0``: the cubic has a repeated root."""


class ConvergenceError(ArithmeticError):
    """An iteration failed to converge."""


class ResourceLimitError(RuntimeError):
    """The requested tolerance needs more lattice points than allowed."""


class SeriesValue(NamedTuple):
    value: complex
    error: float


@dataclass(frozen=True)
class CurveCoefficients:
    g2: complex
    g3: complex

    def __post_init__(self):
        object.__setattr__(self, "g2", complex(self.g2))
        object.__setattr__(self, "g3", complex(self.g3))

    @property
    def disc(self) -> complex:
        return self.g2 ** 3 - 27 * self.g3 ** 2

    def is_singular(self, rtol: float = 1e-13) -> bool:
        scale = max(abs(self.g2) ** 3, 27 * abs(self.g3) ** 2)
        return abs(self.disc) <= rtol * scale

    def require_nonsingular(self):
        if self.is_singular():
            raise DegenerateCubicError(
                f"cubic 4x^3 - ({self.g2})x - ({self.g3}) has a repeated root"
            )

    def cubic_roots(self) -> np.ndarray:
        """Roots of ``4x^3 - g2 x - g3`` ordered by descending real, then imaginary part."""
        r = np.roots([4.0, 0.0, -self.g2, -self.g3]).astype(complex)
        return np.array(sorted(r, key=lambda x: (-x.real, -x.imag)))


def agm(a: complex, b: complex, tol: float = 1e-15, maxiter: int = 64) -> complex:
    """Complex arithmetic-geometric mean with the right choice of square root."""
    a, b = complex(a), complex(b)
    if a == 0 or b == 0:
        raise ValueError("agm arguments must be nonzero")
    for _ in range(maxiter):
        if abs(a - b) <= tol * abs(a):
            return a
        a1 = 0.5 * (a + b)
        b1 = cmath.sqrt(a * b)
        if abs(a1 - b1) > abs(a1 + b1):
            b1 = -b1
        if a1 == a and b1 == b:
            return a
        a, b = a1, b1
    raise ConvergenceError(f"agm did not converge in {maxiter} steps (a={a}, b={b})")


def reduce_basis(omega1: complex, omega2: complex) -> tuple[complex, complex]:
    """Change basis so ``tau = omega2/omega1`` lies in the standard fundamental domain.

    The domain is ``-1/2 <= Re tau < 1/2``, ``|tau| >= 1``, with ``Re tau <= 0``
    on the unit circle.
    """
    omega1, omega2 = complex(omega1), complex(omega2)
    if omega1 == 0:
        raise ValueError("omega1 must be nonzero")
    tau = omega2 / omega1
    if tau.imag == 0:
        raise ValueError("periods are linearly dependent over R")
    if tau.imag < 0:
        omega2 = -omega2
    for _ in range(10_000):
        tau = omega2 / omega1
        n = round(tau.real)
        if n:
            omega2 -= n * omega1
            tau = omega2 / omega1
        if abs(tau) < 1 - _TIE_EPS:
            omega1, omega2 = omega2, -omega1
            continue
        break
    else:  # pragma: no cover
        raise ConvergenceError("basis reduction did not terminate")
    tau = omega2 / omega1
    if tau.real >= 0.5 - _TIE_EPS:
        omega2 -= omega1
        tau = omega2 / omega1
    if abs(tau) <= 1 + _TIE_EPS and tau.real > _TIE_EPS:
        omega1, omega2 = omega2, -omega1
    return omega1, omega2


@dataclass(frozen=True)
class PeriodLattice:
    """Lattice ``Z omega1 + Z omega2`` with ``Im(omega2/omega1) > 0``.

    Build with :meth:`from_basis` (or :func:`period_lattice`) to get the
    normalized basis; the raw constructor only checks orientation.
    """

    omega1: complex
    omega2: complex
    source: CurveCoefficients | None = None

    def __post_init__(self):
        object.__setattr__(self, "omega1", complex(self.omega1))
        object.__setattr__(self, "omega2", complex(self.omega2))
        if self.omega1 == 0 or (self.omega2 / self.omega1).imag <= 0:
            raise ValueError("need Im(omega2/omega1) > 0")

    @classmethod
    def from_basis(cls, omega1, omega2, source=None) -> "PeriodLattice":
        w1, w2 = reduce_basis(omega1, omega2)
        return cls(w1, w2, source)

    @property
    def tau(self) -> complex:
        return self.omega2 / self.omega1

    @property
    def covolume(self) -> float:
        return abs((self.omega1.conjugate() * self.omega2).imag)

    def point(self, m: int, n: int) -> complex:
        return m * self.omega1 + n * self.omega2

    def scaled(self, lam: complex) -> "PeriodLattice":
        return PeriodLattice.from_basis(lam * self.omega1, lam * self.omega2)

    def to_json(self) -> dict:
        return {
            "omega1": [self.omega1.real, self.omega1.imag],
            "omega2": [self.omega2.real, self.omega2.imag],
            "tau": [self.tau.real, self.tau.imag],
        }


def period_lattice(c: CurveCoefficients) -> PeriodLattice:
    """Period lattice of ``y**2 = 4x**3 - g2 x - g3``.

    With roots ``e1, e2, e3`` of the cubic, the periods are
    ``pi/M(sqrt(e1-e3), sqrt(e1-e2))`` and ``i pi/M(sqrt(e1-e3), sqrt(e2-e3))``.
    """
    if not isinstance(c, CurveCoefficients):
        c = CurveCoefficients(*c)
    c.require_nonsingular()
    e1, e2, e3 = c.cubic_roots()
    a = cmath.sqrt(e1 - e3)
    b = cmath.sqrt(e1 - e2)
    cc = cmath.sqrt(e2 - e3)
    w1 = math.pi / agm(a, b)
    w2 = 1j * math.pi / agm(a, cc)
    return PeriodLattice.from_basis(w1, w2, source=c)


# --------------------------------------------------------------------------
# windowed lattice sums


def _beta(tol: float) -> float:
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    return math.sqrt(math.log(1.0 / min(tol, 0.1)) + 3.0) + 1.0


def _dual_min(tau: complex) -> float:
    basis = np.array([[1.0, tau.real], [0.0, tau.imag]])
    dual = np.linalg.inv(basis).T
    best = math.inf
    for a in range(-3, 4):
        for b in range(-3, 4):
            if a or b:
                best = min(best, float(np.hypot(*(dual @ (a, b)))))
    return best


@lru_cache(maxsize=256)
def _window(tau_re: float, tau_im: float, beta: float):
    """Nonzero points of ``Z + Z tau`` inside the window and their weights."""
    tau = complex(tau_re, tau_im)
    xi = _dual_min(tau)
    sigma = beta / (math.pi * xi)
    r0 = beta * sigma
    rmax = r0 + beta * sigma
    approx = math.pi * rmax ** 2 / tau_im
    if approx > MAX_LATTICE_POINTS:
        raise ResourceLimitError(
            f"tolerance needs ~{approx:.3g} lattice points (limit {MAX_LATTICE_POINTS}); "
            "the lattice is too elongated"
        )
    nmax = int(rmax / tau_im) + 1
    n = np.arange(-nmax, nmax + 1)
    pts = []
    for nn in n:
        lo = math.floor(-rmax - nn * tau_re)
        hi = math.ceil(rmax - nn * tau_re)
        m = np.arange(lo, hi + 1)
        pts.append(m + nn * tau)
    om = np.concatenate(pts)
    r = np.abs(om)
    keep = (r <= rmax) & (om != 0)
    om = om[keep]
    r = r[keep]
    # fixed summation order for reproducibility
    order = np.lexsort((np.angle(om), r))
    om = om[order]
    w = 0.5 * erfc((r[order] - r0) / sigma)
    om.setflags(write=False)
    w.setflags(write=False)
    return om, w


def _lattice_window(lattice: PeriodLattice, tol: float):
    tau = lattice.tau
    return _window(tau.real, tau.imag, _beta(tol))


def eisenstein_series(lattice: PeriodLattice, k: int, tol: float = DEFAULT_TOL_EIS) -> SeriesValue:
    """``G_k(L) = sum over nonzero w of w**-k`` for even ``k >= 4``."""
    if k < 3:
        raise ValueError("only absolutely convergent Eisenstein sums (k >= 3)")
    om, w = _lattice_window(lattice, tol)
    terms = w * om ** (-k)
    scale = lattice.omega1 ** (-k)
    value = complex(np.sum(terms)) * scale
    err = float(np.sum(np.abs(terms))) * abs(scale) * math.exp(-(_beta(tol) - 1.0) ** 2)
    return SeriesValue(value, err)


def eisenstein_g2(lattice: PeriodLattice, tol: float = DEFAULT_TOL_EIS) -> SeriesValue:
    v = eisenstein_series(lattice, 4, tol)
    return SeriesValue(60 * v.value, 60 * v.error)


def eisenstein_g3(lattice: PeriodLattice, tol: float = DEFAULT_TOL_EIS) -> SeriesValue:
    v = eisenstein_series(lattice, 6, tol)
    return SeriesValue(140 * v.value, 140 * v.error)


def reduce_z(z, lattice: PeriodLattice):
    """Representative of ``z`` mod the lattice nearest to 0, in units of ``omega1``."""
    tau = lattice.tau
    u = np.asarray(z, dtype=complex) / lattice.omega1
    b = np.round(u.imag / tau.imag)
    a = np.round(u.real - b * tau.real)
    u = u - a - b * tau
    best = u
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            if i or j:
                cand = u - i - j * tau
                best = np.where(np.abs(cand) < np.abs(best), cand, best)
    return best


def is_pole(z, lattice: PeriodLattice):
    return np.abs(reduce_z(z, lattice)) < POLE_EPS


_CHUNK = 1 << 16


def _wp_sums(u: np.ndarray, om: np.ndarray, w: np.ndarray):
    s2 = np.empty(u.shape, dtype=complex)
    s3 = np.empty(u.shape, dtype=complex)
    inv2 = w * om ** -2
    step = max(1, _CHUNK // max(om.size, 1))
    for i in range(0, u.size, step):
        d = u[i:i + step, None] - om[None, :]
        inv = 1.0 / d
        sq = inv * inv
        s2[i:i + step] = (w * sq).sum(axis=1) - inv2.sum()
        s3[i:i + step] = (w * sq * inv).sum(axis=1)
    return s2, s3


def wp_pair(z, lattice: PeriodLattice, tol: float = DEFAULT_TOL_WP):
    """``(p(z), p'(z))``; both are ``inf`` at lattice points."""
    zz = np.asarray(z, dtype=complex)
    u = reduce_z(zz, lattice).ravel()
    pole = np.abs(u) < POLE_EPS
    om, w = _lattice_window(lattice, tol)
    us = np.where(pole, 0.5, u)
    s2, s3 = _wp_sums(us, om, w)
    p = (1.0 / us ** 2 + s2) / lattice.omega1 ** 2
    dp = (-2.0 / us ** 3 - 2.0 * s3) / lattice.omega1 ** 3
    p[pole] = complex(math.inf, 0.0)
    dp[pole] = complex(math.inf, 0.0)
    p = p.reshape(zz.shape)
    dp = dp.reshape(zz.shape)
    if zz.ndim == 0:
        return complex(p), complex(dp)
    return p, dp


def wp(z, lattice: PeriodLattice, tol: float = DEFAULT_TOL_WP):
    """Weierstrass p of the lattice; ``inf`` signals a pole."""
    return wp_pair(z, lattice, tol)[0]


def wp_prime(z, lattice: PeriodLattice, tol: float = DEFAULT_TOL_WP):
    return wp_pair(z, lattice, tol)[1]


def wp_second(z, lattice: PeriodLattice, tol: float = DEFAULT_TOL_WP, g2: complex | None = None):
    """``p'' = 6 p**2 - g2/2``; ``g2`` defaults to the lattice's source curve."""
    if g2 is None:
        g2 = lattice.source.g2 if lattice.source is not None else eisenstein_g2(lattice).value
    p = wp(z, lattice, tol)
    return 6 * np.asarray(p) ** 2 - g2 / 2 if np.ndim(p) else 6 * p ** 2 - g2 / 2


def j_invariant(c: CurveCoefficients) -> complex:
    if not isinstance(c, CurveCoefficients):
        c = CurveCoefficients(*c)
    c.require_nonsingular()
    return 1728 * c.g2 ** 3 / c.disc
