"""Weierstrass elliptic K3 surfaces over P^1.

The surface is ``y^2 z = 4x^3 - g2 x z^2 - g3 z^3`` with ``g2`` a form of
degree 8 and ``g3`` of degree 12.  Fibers over points of the discriminant
locus ``S_X`` are singular; over the complement ``R_X`` each fiber is the
torus ``C/L(t)`` and ``F(z, t) = [p(z) : p'(z) : 1]`` parametrizes it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .binaryforms import (
    BinaryForm,
    DegreeError,
    P1Point,
    discriminant_form,
    roots,
)
from .elliptic import (
    DEFAULT_TOL_WP,
    CurveCoefficients,
    PeriodLattice,
    j_invariant,
    period_lattice,
    reduce_z,
    wp_pair,
)

__all__ = [
    "DegenerateFibrationError",
    "SingularFiberError",
    "NonMinimalError",
    "SectionPointError",
    "WeierstrassFibration",
    "FiberPoint",
    "KodairaLabel",
    "KODAIRA_TABLE",
    "KODAIRA_TABLE_VERSION",
    "validate",
    "is_regular",
    "rescale",
    "vanishing_order",
    "kodaira_from_orders",
    "kodaira_type",
    "fiber_curve",
    "fiber_lattice",
    "fiber_j",
    "uniformize",
    "jacobian_F",
    "random_fibration",
    "kodaira_table_json",
    "REGULAR_EPS",
]

#: chordal distance to S_X below which a base point counts as singular
REGULAR_EPS = 1e-6
_ORDER_TOL = 1e-8


class DegenerateFibrationError(ValueError):
    """The discriminant vanishes identically: no smooth fibers."""


class SingularFiberError(ValueError):
    """The base point lies on (or too near) the discriminant locus."""


class NonMinimalError(ValueError):
    """``ord g2 >= 4`` and ``ord g3 >= 6``: the model is not minimal there."""


class SectionPointError(ValueError):
    """The image point is (too near) the section point [0:1:0]."""


@dataclass(frozen=True, eq=False)
class WeierstrassFibration:
    g2: BinaryForm
    g3: BinaryForm
    delta: BinaryForm = field(init=False, repr=False)
    singular_locus: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.g2.degree != 8:
            raise DegreeError(f"g2 must have degree 8, got {self.g2.degree}")
        if self.g3.degree != 12:
            raise DegreeError(f"g3 must have degree 12, got {self.g3.degree}")
        delta = discriminant_form(self.g2, self.g3)
        scale = max(self.g2.norm ** 3, 27 * self.g3.norm ** 2)
        if scale == 0 or delta.norm <= 1e-13 * scale:
            raise DegenerateFibrationError("discriminant vanishes identically: no smooth fibers")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "singular_locus", tuple(_singular_locus(self.g2, self.g3, delta)))

    @property
    def multiplicity_sum(self) -> int:
        return sum(m for _, m in self.singular_locus)

    def to_json(self) -> dict:
        return {"g2": self.g2.to_json(), "g3": self.g3.to_json()}

    @classmethod
    def from_json(cls, obj) -> "WeierstrassFibration":
        if not isinstance(obj, dict) or "g2" not in obj or "g3" not in obj:
            raise ValueError("fibration JSON needs keys 'g2' and 'g3'")
        return validate(BinaryForm.from_json(obj["g2"]), BinaryForm.from_json(obj["g3"]))


def _deflate(f: BinaryForm, p: P1Point, k: int) -> BinaryForm:
    """Quotient of ``f`` by the k-th power of the linear form vanishing at ``p``."""
    c = p.canonical()
    chart = c.chart
    u0 = c.coordinate(chart)
    asc = f.coeffs if chart == "s" else f.coeffs[::-1]
    desc = asc[::-1]
    # descending coefficients may have leading zeros: the chart point at the
    # far end is then a root that the division must not see
    for _ in range(k):
        out = np.empty(desc.size - 1, dtype=complex)
        acc = 0j
        for i in range(desc.size - 1):
            acc = acc * u0 + desc[i]
            out[i] = acc
        desc = out
    q_asc = desc[::-1]
    coeffs = q_asc if chart == "s" else q_asc[::-1]
    return BinaryForm(f.degree - k, coeffs)


def _common_roots(g2: BinaryForm, g3: BinaryForm, tol: float = 1e-5):
    if g2.is_zero() or g3.is_zero():
        return []
    r2 = roots(g2)
    r3 = roots(g3)
    out = []
    for p, a in r2:
        for q, b in r3:
            if p.chordal_distance(q) <= tol:
                # the factor with smaller spread (lower multiplicity) locates better
                out.append((p if a <= b else q, a, b))
                break
    return out


def _singular_locus(g2: BinaryForm, g3: BinaryForm, delta: BinaryForm):
    """Zeros of the discriminant with multiplicity.

    Common zeros of ``g2`` and ``g3`` of orders ``(a, b)`` are zeros of the
    discriminant of order at least ``min(3a, 2b)``; that factor is divided out
    first, since its roots are too ill-conditioned to recover from ``delta``
    alone.  The quotient's roots are found directly and any that land on a
    common zero add to its multiplicity.
    """
    if g2.is_zero():
        known = [(p, 2 * b) for p, b in roots(g3)]
    elif g3.is_zero():
        known = [(p, 3 * a) for p, a in roots(g2)]
    else:
        known = [(p, min(3 * a, 2 * b)) for p, a, b in _common_roots(g2, g3)]
    rest = delta
    for p, k in known:
        rest = _deflate(rest, p, k)
    locus = [[p, k] for p, k in known]
    if rest.degree > 0:
        for q, m in roots(rest):
            for entry in locus:
                if entry[0].chordal_distance(q) <= 1e-4:
                    entry[1] += m
                    break
            else:
                locus.append([q, m])
    return [(p, m) for p, m in locus]


def validate(g2: BinaryForm, g3: BinaryForm) -> WeierstrassFibration:
    return WeierstrassFibration(g2, g3)


def random_fibration(rng: np.random.Generator, scale: float = 1.0) -> WeierstrassFibration:
    """Fibration with independent complex Gaussian coefficients."""
    def form(d):
        return BinaryForm(d, scale * (rng.normal(size=d + 1) + 1j * rng.normal(size=d + 1)) / math.sqrt(2))

    return validate(form(8), form(12))


def _nearest_singular(X: WeierstrassFibration, t: P1Point):
    best = (math.inf, None)
    for p, m in X.singular_locus:
        d = t.chordal_distance(p)
        if d < best[0]:
            best = (d, (p, m))
    return best


def is_regular(X: WeierstrassFibration, t: P1Point) -> tuple[bool, float]:
    """``(t in R_X, chordal distance from t to S_X)``."""
    d, _ = _nearest_singular(X, t)
    return d > REGULAR_EPS, d


def rescale(X: WeierstrassFibration, lam: complex) -> WeierstrassFibration:
    """``(lam^4 g2, lam^6 g3)`` for a nonzero scalar (or degree-0 form) ``lam``."""
    if isinstance(lam, BinaryForm):
        if lam.degree != 0:
            raise DegreeError("only constant rescalings are supported")
        lam = lam.coeffs[0]
    lam = complex(lam)
    if lam == 0:
        raise ValueError("rescaling factor must be nonzero")
    return validate(X.g2 * lam ** 4, X.g3 * lam ** 6)


# --------------------------------------------------------------------------
# Kodaira fibers

KODAIRA_TABLE_VERSION = "1"

# (label, ord g2, ord g3, ord disc); ">=k" is a lower bound, "n" marks the
# free index of I_n and I_n*.
KODAIRA_TABLE = (
    ("I0", ">=0", ">=0", "0"),
    ("I_n", "0", "0", "n>=1"),
    ("II", ">=1", "1", "2"),
    ("III", "1", ">=2", "3"),
    ("IV", ">=2", "2", "4"),
    ("I0*", ">=2", ">=3", "6"),
    ("I_n*", "2", "3", "6+n, n>=1"),
    ("IV*", ">=3", "4", "8"),
    ("III*", "3", ">=5", "9"),
    ("II*", ">=4", "5", "10"),
)


def kodaira_table_json() -> dict:
    return {
        "version": KODAIRA_TABLE_VERSION,
        "columns": ["label", "ord_g2", "ord_g3", "ord_disc"],
        "rows": [list(r) for r in KODAIRA_TABLE],
        "non_minimal": "ord_g2 >= 4 and ord_g3 >= 6",
    }


@dataclass(frozen=True)
class KodairaLabel:
    label: str
    orders: tuple[int, int, int]

    @property
    def euler_number(self) -> int:
        return self.orders[2]

    def to_json(self) -> dict:
        a, b, c = self.orders
        return {"label": self.label, "ord_g2": a, "ord_g3": b, "ord_disc": c}


def _match(pattern: str, value: int):
    """Return ``True``/``False``, or the free index ``n`` for ``n``-specs."""
    if pattern.startswith(">="):
        return value >= int(pattern[2:])
    if pattern == "n>=1":
        return value if value >= 1 else False
    if pattern.startswith("6+n"):
        return value - 6 if value >= 7 else False
    return value == int(pattern)


def kodaira_from_orders(a: int, b: int, c: int) -> KodairaLabel:
    """Look up the fiber type for vanishing orders ``(ord g2, ord g3, ord disc)``."""
    if a >= 4 and b >= 6:
        raise NonMinimalError(f"orders ({a}, {b}) are non-minimal")
    for label, sa, sb, sc in KODAIRA_TABLE:
        ma, mb, mc = _match(sa, a), _match(sb, b), _match(sc, c)
        if ma is False or mb is False or mc is False:
            continue
        if "n" in label:
            label = label.replace("_n", str(mc))
        return KodairaLabel(label, (a, b, c))
    raise ValueError(f"orders ({a}, {b}, {c}) match no Kodaira type")


def vanishing_order(f: BinaryForm, p: P1Point, max_order: int | None = None) -> int:
    """Order of vanishing of ``f`` at ``p``, from Taylor coefficients in the chart of ``p``."""
    c = p.canonical()
    chart = c.chart
    u0 = c.coordinate(chart)
    coeffs = f.coeffs if chart == "s" else f.coeffs[::-1]
    desc = coeffs[::-1]
    absd = np.abs(desc)
    max_order = f.degree if max_order is None else max_order
    ref_scale = f.norm
    for j in range(max_order + 1):
        if desc.size == 0:
            return j
        val = abs(np.polyval(desc, u0))
        ref = max(np.polyval(absd, abs(u0)), ref_scale * 1e-300)
        if val > _ORDER_TOL * ref:
            return j
        desc = np.polyder(desc) / (j + 1)
        absd = np.polyder(absd) / (j + 1)
    return max_order


def kodaira_type(X: WeierstrassFibration, p: P1Point) -> KodairaLabel:
    """Kodaira fiber type over ``p``; ``"I0"`` (smooth) off the discriminant locus."""
    d, near = _nearest_singular(X, p)
    if d > REGULAR_EPS:
        return KodairaLabel("I0", (vanishing_order(X.g2, p), vanishing_order(X.g3, p), 0))
    point, mult = near
    a = vanishing_order(X.g2, point)
    b = vanishing_order(X.g3, point)
    if mult > 0 and min(a, b) == 0:
        # g2^3 = 27 g3^2 at a discriminant zero, so neither can vanish alone;
        # a lone positive order is a near-miss of the tolerance test
        a = b = 0
    return kodaira_from_orders(a, b, mult)


# --------------------------------------------------------------------------
# fibers and the uniformizing map


def _chart_point(t: P1Point, chart: str | None):
    """Homogeneous pair with the chart coordinate normalized to 1."""
    if chart is None:
        return t.canonical()
    return P1Point.from_coordinate(t.coordinate(chart), chart)


def _require_regular(X, t):
    ok, d = is_regular(X, t)
    if not ok:
        raise SingularFiberError(f"{t!r} lies on the discriminant locus (distance {d:.3g})")
    return d


def fiber_curve(X: WeierstrassFibration, t: P1Point, chart: str | None = None) -> CurveCoefficients:
    """``(g2(t), g3(t))`` in the affine trivialization of ``chart``.

    The default chart is the one where ``t``'s larger coordinate is 1.
    """
    _require_regular(X, t)
    q = _chart_point(t, chart)
    return CurveCoefficients(X.g2(q), X.g3(q))


def _curve_unchecked(X, u: complex, chart: str) -> CurveCoefficients:
    return CurveCoefficients(X.g2.eval_affine(u, chart), X.g3.eval_affine(u, chart))


@lru_cache(maxsize=4096)
def _lattice(g2: complex, g3: complex) -> PeriodLattice:
    return period_lattice(CurveCoefficients(g2, g3))


def fiber_lattice(X: WeierstrassFibration, t: P1Point, chart: str | None = None) -> PeriodLattice:
    c = fiber_curve(X, t, chart)
    return _lattice(c.g2, c.g3)


def fiber_j(X: WeierstrassFibration, t: P1Point) -> complex:
    return j_invariant(fiber_curve(X, t))


@dataclass(frozen=True, eq=False)
class FiberPoint:
    """``[x:y:z]`` scaled so the largest-modulus coordinate is exactly 1."""

    x: complex
    y: complex
    z: complex

    def __post_init__(self):
        v = [complex(self.x), complex(self.y), complex(self.z)]
        if not any(v):
            raise ValueError("[0:0:0] is not a projective point")
        k = max(range(3), key=lambda i: abs(v[i]))
        v = [c / v[k] for c in v]
        v[k] = 1.0 + 0.0j
        for name, c in zip("xyz", v):
            object.__setattr__(self, name, c)

    @classmethod
    def section(cls) -> "FiberPoint":
        return cls(0, 1, 0)

    @property
    def is_section(self) -> bool:
        return self.z == 0

    def residual(self, g2: complex, g3: complex) -> complex:
        x, y, z = self.x, self.y, self.z
        return y * y * z - 4 * x ** 3 + g2 * x * z * z + g3 * z ** 3

    def isclose(self, other: "FiberPoint", tol: float = 1e-9) -> bool:
        a = np.array([self.x, self.y, self.z])
        b = np.array([other.x, other.y, other.z])
        # projective: compare the 2x2 minors
        m = np.abs(np.outer(a, b) - np.outer(b, a))
        return bool(m.max() <= tol)

    def __eq__(self, other):
        if not isinstance(other, FiberPoint):
            return NotImplemented
        return self.isclose(other)

    __hash__ = None

    def to_json(self):
        return [[c.real, c.imag] for c in (self.x, self.y, self.z)]


def uniformize(X: WeierstrassFibration, z: complex, t: P1Point, tol: float = DEFAULT_TOL_WP,
               chart: str | None = None) -> FiberPoint:
    """``F(z, t) = [p(z) : p'(z) : 1]`` on the fiber over ``t``; ``[0:1:0]`` at lattice points."""
    lat = fiber_lattice(X, t, chart)
    p, dp = wp_pair(complex(z), lat, tol)
    if math.isinf(abs(p)):
        return FiberPoint.section()
    return FiberPoint(p, dp, 1.0)


def _affine_F(X, z: complex, u: complex, chart: str, tol: float):
    c = _curve_unchecked(X, u, chart)
    lat = _lattice(c.g2, c.g3)
    return np.array(wp_pair(z, lat, tol))


def jacobian_F(
    X: WeierstrassFibration,
    z: complex,
    t: P1Point,
    h: float | None = None,
    tol: float = DEFAULT_TOL_WP,
    chart: str | None = None,
    full_output: bool = False,
):
    """Derivatives of ``F`` in the affine chart ``(x, y, t)`` of the image.

    Row 0 is ``dF/dz = (p', p'', 0)``, row 1 is ``dF/dt = (dp/dt, dp'/dt, 1)``
    with ``t`` the coordinate of ``chart``.  Both rows are Richardson-improved
    central differences with step ``h`` (default ``1e-5 (1 + |z|)``); row 0 is
    checked against the closed form ``p'' = 6 p^2 - g2/2``.
    """
    z = complex(z)
    if h is None:
        h = 1e-5 * (1 + abs(z))
    c0 = t.canonical()
    chart = chart or c0.chart
    u0 = t.coordinate(chart)
    d_sing = _require_regular(X, t)
    if d_sing <= 2 * h:
        raise SingularFiberError(f"t is within 2h={2 * h:.3g} of the discriminant locus")
    curve = _curve_unchecked(X, u0, chart)
    lat = _lattice(curve.g2, curve.g3)
    dist = abs(reduce_z(z, lat)) * abs(lat.omega1)
    if dist <= 4 * h:
        raise SectionPointError(f"z={z} is within {dist:.3g} of a lattice point: F is at the section point")

    def central(fun, x0, step):
        d1 = (fun(x0 + step) - fun(x0 - step)) / (2 * step)
        d2 = (fun(x0 + 2 * step) - fun(x0 - 2 * step)) / (4 * step)
        return (4 * d1 - d2) / 3, np.abs(d1 - d2) / 3

    dz, ez = central(lambda zz: _affine_F(X, zz, u0, chart, tol), z, h)
    dt, et = central(lambda uu: _affine_F(X, z, uu, chart, tol), u0, h)
    jac = np.array([[dz[0], dz[1], 0.0], [dt[0], dt[1], 1.0]], dtype=complex)
    if not full_output:
        return jac
    p, dp = wp_pair(z, lat, tol)
    ddp = 6 * p * p - curve.g2 / 2
    info = {
        "closed_form_dz": np.array([dp, ddp]),
        "closed_form_residual": float(np.max(np.abs(dz - np.array([dp, ddp])) / (1 + np.abs([dp, ddp])))),
        "richardson_error": np.concatenate([ez, et]),
        "h": h,
        "chart": chart,
        "point": (p, dp),
    }
    return jac, info
