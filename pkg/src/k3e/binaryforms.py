"""Binary forms on P^1: sections of O(d) stored by coefficient.

A form of degree ``d`` is ``sum_k coeffs[k] * s**(d - k) * t**k``.  In the
affine chart ``s = 1`` this is the polynomial ``sum_k coeffs[k] * t**k``; the
point at infinity ``[0:1]`` is a root of order ``d - deg_affine(f)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DegreeError",
    "P1Point",
    "BinaryForm",
    "eval_form",
    "multiply",
    "power",
    "scale",
    "subtract",
    "discriminant_form",
    "roots",
    "cluster_radius",
]

#: coefficients below this fraction of ``max|coeff|`` count as zero when
#: deciding the affine degree
ZERO_COEFF_TOL = 1e-14
#: relative slack used when certifying merged clusters as one multiple root
_MULTIPLICITY_TOL = 1e-10


class DegreeError(ValueError):
    """Raised when a form has the wrong declared degree for an operation."""


@dataclass(frozen=True, eq=False)
class P1Point:
    """A point ``[s:t]`` of the projective line.

    The stored pair is kept exactly as given, so ``eval_form`` is
    homogeneous in it.  Comparisons are projective and use a tolerance.
    """

    s: complex
    t: complex

    def __post_init__(self):
        object.__setattr__(self, "s", complex(self.s))
        object.__setattr__(self, "t", complex(self.t))
        if self.s == 0 and self.t == 0:
            raise ValueError("[0:0] is not a point of P^1")
        if not (np.isfinite(self.s) and np.isfinite(self.t)):
            raise ValueError("homogeneous coordinates must be finite")

    @classmethod
    def affine(cls, t: complex) -> "P1Point":
        return cls(1.0, t)

    @classmethod
    def infinity(cls) -> "P1Point":
        return cls(0.0, 1.0)

    @classmethod
    def parse(cls, text: str) -> "P1Point":
        """Parse ``"inf"``, ``"1+2j"`` or ``"s:t"``."""
        text = text.strip().replace(" ", "")
        if text.lower() in {"inf", "infinity", "oo"}:
            return cls.infinity()
        if ":" in text:
            s, t = text.split(":")
            return cls(complex(s), complex(t))
        return cls.affine(complex(text))

    @property
    def chart(self) -> str:
        """``"s"`` for the chart ``s = 1``, ``"t"`` for ``t = 1``."""
        return "s" if abs(self.s) >= abs(self.t) else "t"

    def canonical(self) -> "P1Point":
        """Representative whose larger coordinate is exactly 1."""
        if self.chart == "s":
            return P1Point(1.0, self.t / self.s)
        return P1Point(self.s / self.t, 1.0)

    def coordinate(self, chart: str | None = None) -> complex:
        """Affine coordinate in ``chart`` (``t/s`` for ``"s"``, ``s/t`` for ``"t"``)."""
        chart = chart or self.chart
        if chart == "s":
            if self.s == 0:
                raise ZeroDivisionError("point at infinity is outside the chart s=1")
            return self.t / self.s
        if self.t == 0:
            raise ZeroDivisionError("point [1:0] is outside the chart t=1")
        return self.s / self.t

    @classmethod
    def from_coordinate(cls, u: complex, chart: str) -> "P1Point":
        return cls(1.0, u) if chart == "s" else cls(u, 1.0)

    @property
    def is_infinity(self) -> bool:
        return self.s == 0

    def chordal_distance(self, other: "P1Point") -> float:
        """Chordal (Fubini-Study chord) distance, at most 1."""
        num = abs(self.s * other.t - self.t * other.s)
        den = math.hypot(abs(self.s), abs(self.t)) * math.hypot(abs(other.s), abs(other.t))
        return num / den

    def isclose(self, other: "P1Point", tol: float = 1e-9) -> bool:
        return self.chordal_distance(other) <= tol

    def __eq__(self, other):
        if not isinstance(other, P1Point):
            return NotImplemented
        return self.isclose(other)

    __hash__ = None

    def to_json(self):
        c = self.canonical()
        return [[c.s.real, c.s.imag], [c.t.real, c.t.imag]]

    def __repr__(self):
        if self.is_infinity:
            return "P1Point(inf)"
        c = self.canonical()
        return f"P1Point([{c.s:.6g}:{c.t:.6g}])"


@dataclass(frozen=True, eq=False)
class BinaryForm:
    """Homogeneous form of ``degree`` with ``degree + 1`` complex coefficients."""

    degree: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 0:
            raise DegreeError(f"degree must be a nonnegative integer, got {self.degree!r}")
        c = np.array(self.coeffs, dtype=complex).ravel()
        if c.shape[0] != self.degree + 1:
            raise DegreeError(
                f"a degree-{self.degree} form needs {self.degree + 1} coefficients, got {c.shape[0]}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "degree", int(self.degree))
        object.__setattr__(self, "coeffs", c)

    # construction helpers
    @classmethod
    def zero(cls, degree: int) -> "BinaryForm":
        return cls(degree, np.zeros(degree + 1))

    @classmethod
    def monomial(cls, degree: int, k: int, c: complex = 1.0) -> "BinaryForm":
        """``c * s**(degree - k) * t**k``."""
        coeffs = np.zeros(degree + 1, dtype=complex)
        coeffs[k] = c
        return cls(degree, coeffs)

    @classmethod
    def from_affine(cls, degree: int, poly) -> "BinaryForm":
        """Homogenize an ascending-order affine polynomial in ``t`` to ``degree``."""
        poly = np.atleast_1d(np.asarray(poly, dtype=complex))
        if poly.shape[0] > degree + 1 and np.any(poly[degree + 1:] != 0):
            raise DegreeError("affine polynomial exceeds the declared degree")
        coeffs = np.zeros(degree + 1, dtype=complex)
        n = min(poly.shape[0], degree + 1)
        coeffs[:n] = poly[:n]
        return cls(degree, coeffs)

    @property
    def norm(self) -> float:
        """max |coeff|; the scale used by every tolerance in this module."""
        return float(np.max(np.abs(self.coeffs)))

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def affine_degree(self, rtol: float = ZERO_COEFF_TOL) -> int:
        """Degree in ``t`` of the chart ``s = 1`` polynomial (-1 for the zero form)."""
        nz = np.nonzero(np.abs(self.coeffs) > rtol * self.norm)[0]
        return int(nz[-1]) if nz.size else -1

    def __call__(self, p: P1Point) -> complex:
        return eval_form(self, p)

    def eval_affine(self, u, chart: str = "s"):
        """Evaluate on chart coordinates (vectorized).

        In chart ``"s"`` this is ``f(1, u)``; in chart ``"t"`` it is ``f(u, 1)``.
        """
        c = self.coeffs if chart == "s" else self.coeffs[::-1]
        return np.polynomial.polynomial.polyval(u, c)

    def __mul__(self, other):
        if isinstance(other, BinaryForm):
            return multiply(self, other)
        return scale(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return subtract(self, other)

    def __add__(self, other):
        if not isinstance(other, BinaryForm):
            return NotImplemented
        if other.degree != self.degree:
            raise DegreeError(f"cannot add forms of degrees {self.degree} and {other.degree}")
        return BinaryForm(self.degree, self.coeffs + other.coeffs)

    def __neg__(self):
        return scale(self, -1.0)

    def __pow__(self, k: int):
        return power(self, k)

    def allclose(self, other: "BinaryForm", rtol: float = 1e-12) -> bool:
        if other.degree != self.degree:
            return False
        scale_ = max(self.norm, other.norm, 1e-300)
        return bool(np.max(np.abs(self.coeffs - other.coeffs)) <= rtol * scale_)

    def to_json(self) -> dict:
        """``{"degree": d, "coeffs": [[re, im], ...]}``, lowest s-degree first."""
        return {
            "degree": self.degree,
            "coeffs": [[float(c.real), float(c.imag)] for c in self.coeffs[::-1]],
        }

    @classmethod
    def from_json(cls, obj) -> "BinaryForm":
        try:
            degree = obj["degree"]
            pairs = obj["coeffs"]
            vals = [complex(float(re), float(im)) for re, im in pairs]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed binary form: {exc}") from exc
        if not isinstance(degree, int):
            raise DegreeError(f"degree must be an integer, got {degree!r}")
        if len(vals) != degree + 1:
            raise DegreeError(
                f"a degree-{degree} form needs {degree + 1} coefficients, got {len(vals)}"
            )
        return cls(degree, np.array(vals[::-1]))

    def __repr__(self):
        terms = []
        for k, c in enumerate(self.coeffs):
            if c != 0:
                terms.append(f"({c:.6g})*s^{self.degree - k}*t^{k}")
        return f"BinaryForm(deg={self.degree}: {' + '.join(terms) or '0'})"


def eval_form(f: BinaryForm, p: P1Point) -> complex:
    """Value of ``f`` at the stored homogeneous pair of ``p``."""
    d = f.degree
    k = np.arange(d + 1)
    return complex(np.sum(f.coeffs * p.s ** (d - k) * p.t ** k))


def multiply(f: BinaryForm, g: BinaryForm) -> BinaryForm:
    return BinaryForm(f.degree + g.degree, np.convolve(f.coeffs, g.coeffs))


def power(f: BinaryForm, k: int) -> BinaryForm:
    if k < 0:
        raise ValueError("negative powers are not forms")
    out = BinaryForm(0, [1.0])
    base = f
    while k:
        if k & 1:
            out = multiply(out, base)
        k >>= 1
        if k:
            base = multiply(base, base)
    return out


def scale(f: BinaryForm, c: complex) -> BinaryForm:
    return BinaryForm(f.degree, f.coeffs * complex(c))


def subtract(f: BinaryForm, g: BinaryForm) -> BinaryForm:
    if f.degree != g.degree:
        raise DegreeError(f"cannot subtract forms of degrees {f.degree} and {g.degree}")
    return BinaryForm(f.degree, f.coeffs - g.coeffs)


def discriminant_form(g2: BinaryForm, g3: BinaryForm) -> BinaryForm:
    """``g2**3 - 27 g3**2`` as a degree-24 form."""
    if g2.degree != 8 or g3.degree != 12:
        raise DegreeError(
            f"discriminant needs degrees (8, 12), got ({g2.degree}, {g3.degree})"
        )
    return subtract(power(g2, 3), scale(power(g3, 2), 27.0))


def cluster_radius(values) -> float:
    values = np.asarray(values)
    return 1e-6 * (1.0 + (float(np.max(np.abs(values))) if values.size else 0.0))


def _single_linkage(points: np.ndarray, eps: float) -> list[list[int]]:
    n = len(points)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(points[i] - points[j]) <= eps:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _is_multiple_root(poly_desc: np.ndarray, c: complex, m: int) -> bool:
    """True if the first ``m`` Taylor coefficients at ``c`` vanish to rounding."""
    absc = np.abs(poly_desc)
    d = poly_desc
    for j in range(m):
        val = abs(np.polyval(d, c))
        ref = np.polyval(absc, abs(c))
        if val > _MULTIPLICITY_TOL * max(ref, 1e-300):
            return False
        d = np.polyder(d)
        absc = np.polyder(absc)
    return True


def _merge_clusters(raw: np.ndarray, groups: list[list[int]], poly_desc, rho: float):
    # An m-fold root splits into a ring of radius ~ eps**(1/m).  Grow a group
    # from each cluster by repeatedly adding the cluster nearest to the group
    # centroid; keep the largest growth whose centroid is a certified root of
    # the full multiplicity.
    groups = [list(g) for g in groups]
    changed = True
    while changed:
        changed = False
        cents = np.array([raw[g].mean() for g in groups])
        for i in sorted(range(len(groups)), key=lambda i: -len(groups[i])):
            members = [i]
            best = None
            while True:
                idx = [r for j in members for r in groups[j]]
                c = raw[idx].mean()
                rest = [j for j in range(len(groups)) if j not in members]
                if not rest:
                    break
                j = min(rest, key=lambda j: abs(cents[j] - c))
                if abs(cents[j] - c) > rho:
                    break
                members.append(j)
                idx = [r for jj in members for r in groups[jj]]
                if _is_multiple_root(poly_desc, raw[idx].mean(), len(idx)):
                    best = list(members)
            if best is not None:
                merged = [r for j in best for r in groups[j]]
                groups = [g for j, g in enumerate(groups) if j not in best] + [merged]
                changed = True
                break
    return groups


def roots(f: BinaryForm) -> list[tuple[P1Point, int]]:
    """Zeros of ``f`` on P^1 with multiplicities summing to ``f.degree``.

    Affine roots come from the companion matrix of the chart ``s = 1``
    polynomial and are grouped by single linkage at ``cluster_radius``; nearby
    groups are merged further when the merged centroid is a certified
    multiple root.  Infinity carries the degree deficit.
    """
    if f.is_zero():
        raise ValueError("the zero form has no isolated roots")
    d_aff = f.affine_degree()
    out: list[tuple[P1Point, int]] = []
    if d_aff > 0:
        poly_desc = f.coeffs[: d_aff + 1][::-1]
        raw = np.roots(poly_desc)
        groups = _single_linkage(raw, cluster_radius(raw))
        rho = 0.25 * (1.0 + float(np.max(np.abs(raw))))
        groups = _merge_clusters(raw, groups, poly_desc, rho)
        groups.sort(key=lambda g: (round(abs(raw[g].mean()), 12), np.angle(raw[g].mean())))
        for g in groups:
            out.append((P1Point.affine(complex(raw[g].mean())).canonical(), len(g)))
    if f.degree - max(d_aff, 0) > 0:
        out.append((P1Point.infinity(), f.degree - max(d_aff, 0)))
    return out
