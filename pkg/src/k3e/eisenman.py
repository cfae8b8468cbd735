"""Upper bounds for Kobayashi-Eisenman pseudovolumes from explicit polydisk maps.

A holomorphic map ``phi`` from the unit polydisk of dimension ``p`` with
``phi_*(d/du_1 ^ ... ^ d/du_p) = mu * zeta`` at the origin shows that the
p-pseudovolume at ``(phi(0), zeta)`` is at most ``1/|mu|``.  Only such upper
bounds are computed here; the infimum itself is never approached from below.

Tangent p-vectors are handled in decomposable form, as an ``n x p`` matrix
whose columns are wedged together.  Their size is measured by a declared
Hermitian reference metric: the norm of ``v_1 ^ ... ^ v_p`` is
``sqrt(det(V* H V))``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .binaryforms import P1Point
from .elliptic import DEFAULT_TOL_WP, is_pole, wp_pair
from .fibration import (
    SingularFiberError,
    WeierstrassFibration,
    _curve_unchecked,
    _lattice,
    is_regular,
    jacobian_F,
    uniformize,
)

__all__ = [
    "ReferenceMetric",
    "euclidean_metric",
    "k3_reference_metric",
    "TestMap",
    "DegenerateJacobianError",
    "CollinearityError",
    "DegenerateDirectionError",
    "pvector_norm",
    "holomorphic_derivatives",
    "holomorphy_residual",
    "upper_bound",
    "best_upper_bound",
    "linear_test_map",
    "k3_test_map",
    "VanishingCertificate",
    "vanishing_certificate",
    "pullback_check",
    "product_check",
    "REFERENCE_METRIC_VERSION",
]

REFERENCE_METRIC_VERSION = "1"
#: radius of the closed polydisk on which test maps must be defined
CLOSED_RADIUS = 1 - 1e-9
COLLINEARITY_TOL = 1e-6
HOLOMORPHY_TOL = 1e-6
_STENCIL = 8


class DegenerateJacobianError(ValueError):
    """The pushed-forward p-vector vanishes (``mu = 0``)."""


class CollinearityError(ValueError):
    """The pushed-forward p-vector is not a multiple of the requested one."""


class DegenerateDirectionError(ValueError):
    """``h_* zeta`` drops rank: the decreasing property is degenerate in this direction."""


# --------------------------------------------------------------------------
# reference metrics


@dataclass(frozen=True)
class ReferenceMetric:
    """A Hermitian metric ``x -> H(x)`` on the coordinates of a target chart."""

    name: str
    dim: int
    matrix_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    factor: float = 1.0
    version: str = REFERENCE_METRIC_VERSION

    def matrix(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        return self.factor * np.asarray(self.matrix_fn(x), dtype=complex)

    def scaled(self, c: float) -> "ReferenceMetric":
        if not c > 0:
            raise ValueError("metric scale factor must be positive")
        return ReferenceMetric(self.name, self.dim, self.matrix_fn, self.factor * c, self.version)

    def to_json(self) -> dict:
        return {"name": self.name, "dim": self.dim, "factor": self.factor, "version": self.version}


def euclidean_metric(n: int) -> ReferenceMetric:
    eye = np.eye(n, dtype=complex)
    return ReferenceMetric(f"euclidean-C{n}", n, lambda x: eye)


def _fubini_study(w: np.ndarray) -> np.ndarray:
    s = 1 + np.vdot(w, w).real
    return (s * np.eye(w.size) - np.outer(w, w.conj())) / (s * s)


def _k3_metric(x: np.ndarray) -> np.ndarray:
    h = np.zeros((3, 3), dtype=complex)
    h[:2, :2] = _fubini_study(x[:2])
    h[2, 2] = 1 / (1 + abs(x[2]) ** 2) ** 2
    return h


def k3_reference_metric() -> ReferenceMetric:
    """Fubini-Study on an affine chart of the fiber plane crossed with the chordal metric on P^1.

    Both factors have the same expression in every affine chart, so the
    metric does not depend on which chart the coordinates come from.
    """
    return ReferenceMetric("fubini-study-x-chordal", 3, _k3_metric)


def pvector_norm(vectors, metric: ReferenceMetric, at) -> float:
    """Norm of the wedge of the columns of ``vectors`` at the point ``at``."""
    v = np.asarray(vectors, dtype=complex)
    if v.ndim == 1:
        v = v[:, None]
    gram = v.conj().T @ metric.matrix(at) @ v
    return math.sqrt(max(np.linalg.det(gram).real, 0.0))


# --------------------------------------------------------------------------
# test maps


@dataclass(frozen=True, eq=False)
class TestMap:
    """A holomorphic map from the unit polydisk of dimension ``p``.

    ``evaluator`` takes a length-``p`` complex vector and returns target
    coordinates.  ``chart_at(u)`` optionally returns an evaluator in target
    coordinates adapted to a neighbourhood of ``u`` (used by the holomorphy
    witness where the default chart degenerates).  ``jacobian``, when given,
    returns the ``n x p`` derivative at the origin in closed form.
    """

    __test__ = False  # not a pytest class

    p: int
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    basepoint_image: np.ndarray
    safety_radius: float = math.inf
    jacobian: Callable[[], np.ndarray] | None = field(default=None, repr=False)
    chart_at: Callable[[np.ndarray], Callable] | None = field(default=None, repr=False)
    description: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.p not in (1, 2):
            raise ValueError(f"polydisk dimension must be 1 or 2, got {self.p}")
        if not self.safety_radius > 0:
            raise ValueError("safety radius must be positive")
        object.__setattr__(self, "basepoint_image", np.asarray(self.basepoint_image, dtype=complex))

    def __call__(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=complex))
        if u.size != self.p:
            raise ValueError(f"expected {self.p} source coordinates, got {u.size}")
        if np.max(np.abs(u)) > CLOSED_RADIUS * (1 + 1e-12):
            raise ValueError("point outside the closed polydisk of radius 1 - 1e-9")
        return np.asarray(self.evaluator(u), dtype=complex)

    def derivative(self, h: float = 1e-3) -> np.ndarray:
        """``n x p`` holomorphic derivative at the origin."""
        if self.jacobian is not None:
            return np.asarray(self.jacobian(), dtype=complex)
        d, _ = holomorphic_derivatives(self.evaluator, np.zeros(self.p, dtype=complex), h)
        return d


def holomorphic_derivatives(f: Callable, u0, h: float = 1e-3):
    """``(df/du, df/du-bar)`` at ``u0`` from an 8-point circle stencil per coordinate.

    For ``w = h e^{i theta}`` the discrete averages of ``f(u0 + w) e^{-/+ i theta} / h``
    return the two Wirtinger derivatives; for an analytic ``f`` the first
    aliased Taylor term is of order ``h^8``.
    """
    u0 = np.asarray(u0, dtype=complex)
    f0 = np.asarray(f(u0), dtype=complex)
    ang = np.exp(2j * np.pi * np.arange(_STENCIL) / _STENCIL)
    d = np.empty((f0.size, u0.size), dtype=complex)
    dbar = np.empty_like(d)
    for k in range(u0.size):
        vals = []
        for a in ang:
            u = u0.copy()
            u[k] += h * a
            vals.append(np.asarray(f(u), dtype=complex))
        vals = np.array(vals)
        d[:, k] = (vals * ang.conj()[:, None]).mean(axis=0) / h
        dbar[:, k] = (vals * ang[:, None]).mean(axis=0) / h
    return d, dbar


def holomorphy_residual(m: TestMap, u=None, h: float = 1e-4) -> float:
    """``|d-bar f| / |d f|`` at ``u`` (the origin by default): ~0 for a holomorphic map."""
    u = np.zeros(m.p, dtype=complex) if u is None else np.atleast_1d(np.asarray(u, dtype=complex))
    f = m.chart_at(u) if m.chart_at is not None else m.evaluator
    d, dbar = holomorphic_derivatives(f, u, h)
    scale = np.linalg.norm(d)
    if scale == 0:
        return 0.0 if np.linalg.norm(dbar) == 0 else math.inf
    return float(np.linalg.norm(dbar) / scale)


def linear_test_map(A, p: int | None = None, offset=None) -> TestMap:
    """``u -> offset + A u`` into ``C^n``."""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    n, pp = A.shape
    if p is not None and p != pp:
        raise ValueError("matrix shape does not match p")
    b = np.zeros(n, dtype=complex) if offset is None else np.asarray(offset, dtype=complex)
    return TestMap(
        pp,
        lambda u: b + A @ u,
        b,
        jacobian=lambda: A.copy(),
        description={"kind": "linear", "n": n},
    )


# --------------------------------------------------------------------------
# bounds


def _as_pvector(zeta, n: int, p: int) -> np.ndarray:
    z = np.asarray(zeta, dtype=complex)
    if z.ndim == 1:
        z = z[:, None]
    if z.shape != (n, p):
        raise ValueError(f"direction must be an {n}x{p} matrix of tangent vectors, got shape {z.shape}")
    return z


def _proportionality(A: np.ndarray, Z: np.ndarray, H: np.ndarray):
    """``mu`` with ``wedge(A) = mu wedge(Z)`` and the relative off-span residual of ``A``."""
    g = Z.conj().T @ H @ Z
    if abs(np.linalg.det(g)) == 0:
        raise ValueError("direction p-vector is zero")
    M = np.linalg.solve(g, Z.conj().T @ H @ A)
    off = A - Z @ M
    na = math.sqrt(max(np.trace(A.conj().T @ H @ A).real, 0.0))
    if na == 0:
        return 0.0, 0.0
    resid = math.sqrt(max(np.trace(off.conj().T @ H @ off).real, 0.0)) / na
    return complex(np.linalg.det(M)), resid


def upper_bound(m: TestMap, zeta, metric: ReferenceMetric | None = None,
                collinearity_tol: float = COLLINEARITY_TOL) -> float:
    """``1/|mu|`` where ``m_*(d/du_1 ^ ... ^ d/du_p) = mu * zeta`` at the origin.

    ``zeta`` is taken as given; pass a unit p-vector (in ``metric``) for a
    bound on the pseudovolume of a unit direction.
    """
    x = m.basepoint_image
    metric = metric or euclidean_metric(x.size)
    A = m.derivative()
    Z = _as_pvector(zeta, x.size, m.p)
    mu, resid = _proportionality(A, Z, metric.matrix(x))
    if resid > collinearity_tol:
        raise CollinearityError(f"image p-vector is not collinear with zeta (residual {resid:.3g})")
    # a rank drop shows up as a tiny mu relative to the size of the columns
    scale = np.prod(np.linalg.norm(A, axis=0)) / max(pvector_norm(Z, euclidean_metric(x.size), x), 1e-300)
    if mu == 0 or abs(mu) <= 1e-13 * scale:
        raise DegenerateJacobianError("pushed-forward p-vector vanishes (mu = 0)")
    return 1.0 / abs(mu)


def best_upper_bound(maps: Sequence[TestMap], zeta, metric: ReferenceMetric | None = None) -> float:
    """Minimum bound over a family; maps not collinear with ``zeta`` are skipped."""
    best = math.inf
    for m in maps:
        try:
            best = min(best, upper_bound(m, zeta, metric))
        except (CollinearityError, DegenerateJacobianError):
            continue
    return best


# --------------------------------------------------------------------------
# K3 test maps


def _projective_F(X: WeierstrassFibration, z: complex, u: complex, chart: str, tol: float) -> np.ndarray:
    curve = _curve_unchecked(X, u, chart)
    lat = _lattice(curve.g2, curve.g3)
    if is_pole(z, lat):
        return np.array([0, 1, 0], dtype=complex)
    p, dp = wp_pair(z, lat, tol)
    return np.array([p, dp, 1], dtype=complex)


def _dehomogenize(w: np.ndarray, k: int) -> np.ndarray:
    return np.delete(w / w[k], k)


def k3_test_map(X: WeierstrassFibration, z0: complex, t0: P1Point, R: float,
                tol: float = DEFAULT_TOL_WP, margin: float = 0.9) -> TestMap:
    """``(u, v) -> F(z0 + R u, t0 + r v)`` with ``r = margin * dist(t0, S_X)``.

    Target coordinates are ``(x, y, t)``: the affine chart ``z = 1`` of the
    fiber plane and the canonical chart coordinate of ``t0``.  The t-disk of
    chart radius ``r`` stays at chordal distance at least ``(1 - margin) d``
    from the discriminant locus, because the chordal distance never exceeds
    the chart distance.
    """
    if not R > 0:
        raise ValueError("radius R must be positive")
    regular, d = is_regular(X, t0)
    if not regular:
        raise SingularFiberError(f"t0 is at chordal distance {d:.3g} from the discriminant locus")
    z0 = complex(z0)
    chart = t0.canonical().chart
    u0 = t0.coordinate(chart)
    r = margin * d
    J = jacobian_F(X, z0, t0, tol=tol, chart=chart)
    cols = np.array([R * J[0], r * J[1]]).T
    if np.linalg.matrix_rank(cols, tol=1e-12 * np.abs(cols).max()) < 2:
        raise DegenerateJacobianError("jacobian of F is degenerate at (z0, t0)")

    def point(u):
        return z0 + R * u[0], u0 + r * u[1]

    def in_chart(k: int):
        def f(u):
            z, tc = point(u)
            w = _projective_F(X, z, tc, chart, tol)
            return np.append(_dehomogenize(w, k), tc)
        return f

    def chart_at(u):
        z, tc = point(np.asarray(u, dtype=complex))
        w = _projective_F(X, z, tc, chart, tol)
        return in_chart(int(np.argmax(np.abs(w))))

    base = uniformize(X, z0, t0, tol, chart=chart)
    if base.is_section:
        raise DegenerateJacobianError("base point maps to the section point")
    image = np.array([base.x / base.z, base.y / base.z, u0], dtype=complex)
    return TestMap(
        2,
        in_chart(2),
        image,
        safety_radius=(1 - margin) * d,
        jacobian=lambda: cols.copy(),
        chart_at=chart_at,
        description={"kind": "k3", "z0": z0, "t0": t0, "chart": chart, "R": R, "r": r},
    )


@dataclass(frozen=True)
class VanishingCertificate:
    target: dict
    point: dict
    zeta: np.ndarray
    schedule: tuple
    decay_exponent: float
    metric: dict

    @property
    def radii(self) -> np.ndarray:
        return np.array([R for R, _ in self.schedule])

    @property
    def bounds(self) -> np.ndarray:
        return np.array([b for _, b in self.schedule])

    def is_decreasing(self) -> bool:
        b = self.bounds
        return bool(np.all(b > 0) and np.all(np.diff(b) < 0))

    def to_json(self) -> dict:
        return {
            "target": self.target,
            "point": self.point,
            "zeta": [[[v.real, v.imag] for v in col] for col in self.zeta.T],
            "schedule": [{"R": R, "bound": b} for R, b in self.schedule],
            "slope": self.decay_exponent,
            "metric": self.metric,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["R", "bound"])
        for R, b in self.schedule:
            w.writerow([repr(float(R)), repr(float(b))])
        return buf.getvalue()


def _cpair(z: complex):
    return [z.real, z.imag]


def vanishing_certificate(X: WeierstrassFibration, z0: complex, t0: P1Point, schedule: Sequence[float],
                          zeta=None, tol: float = DEFAULT_TOL_WP,
                          metric: ReferenceMetric | None = None) -> VanishingCertificate:
    """Bounds ``b(R) = 1/(R r |J|)`` from ``k3_test_map`` along an increasing schedule.

    ``J = dF/dz ^ dF/dt`` at ``(z0, t0)``; ``zeta`` defaults to ``J / |J|``.
    A user-supplied ``zeta`` (a 3x2 matrix of tangent vectors) must be
    collinear with ``J``.
    """
    radii = [float(R) for R in schedule]
    if len(radii) < 2 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("schedule must contain at least two strictly increasing radii")
    metric = metric or k3_reference_metric()
    first = k3_test_map(X, z0, t0, radii[0], tol)
    x = first.basepoint_image
    J = first.derivative() / np.array([radii[0], first.description["r"]])
    normJ = pvector_norm(J, metric, x)
    if normJ <= 1e-12:
        raise DegenerateJacobianError(f"|J| = {normJ:.3g} is too small to certify")
    if zeta is None:
        zeta = J / np.array([normJ, 1.0])
    zeta = _as_pvector(zeta, 3, 2)
    sched = []
    for R in radii:
        m = first if R == radii[0] else k3_test_map(X, z0, t0, R, tol)
        sched.append((R, upper_bound(m, zeta, metric)))
    logs = np.log([R for R, _ in sched]), np.log([b for _, b in sched])
    slope = float(np.polyfit(logs[0], logs[1], 1)[0])
    d = first.description
    return VanishingCertificate(
        target={"g2": X.g2.to_json(), "g3": X.g3.to_json()},
        point={
            "z0": _cpair(complex(z0)),
            "t0": t0.to_json(),
            "chart": d["chart"],
            "image": [_cpair(complex(v)) for v in x],
            "r": d["r"],
            "norm_J": normJ,
        },
        zeta=zeta,
        schedule=tuple(sched),
        decay_exponent=slope,
        metric=metric.to_json(),
    )


# --------------------------------------------------------------------------
# transformation laws


def _compose(h: Callable, m: TestMap) -> TestMap:
    return TestMap(
        m.p,
        lambda u: np.asarray(h(m.evaluator(u)), dtype=complex),
        np.asarray(h(m.basepoint_image), dtype=complex),
        description={"kind": "composite"},
    )


def pullback_check(m: TestMap, h: Callable, zeta, metric_x: ReferenceMetric | None = None,
                   metric_y: ReferenceMetric | None = None, h_step: float = 1e-3) -> dict:
    """Compare the bound of ``h o m`` with the bound of ``m`` converted through ``h_*``.

    With ``m_* e = mu zeta`` and ``h_* zeta = N eta`` for a unit ``eta``, the
    composite satisfies ``(h o m)_* e = mu N eta``, so its bound must equal
    ``bound(m) / N``.  The composite bound is measured independently by
    finite differences on ``h o m``.
    """
    x = m.basepoint_image
    metric_x = metric_x or euclidean_metric(x.size)
    Z = _as_pvector(zeta, x.size, m.p)
    b_m = upper_bound(m, Z, metric_x)
    Dh, _ = holomorphic_derivatives(h, x, h_step)
    hz = Dh @ Z
    y = np.asarray(h(x), dtype=complex)
    metric_y = metric_y or euclidean_metric(y.size)
    zn = pvector_norm(Z, metric_x, x)
    hn = pvector_norm(hz, metric_y, y)
    col_scale = np.prod(np.linalg.norm(Dh, 2) * np.linalg.norm(Z, axis=0))
    if hn <= 1e-12 * max(col_scale, 1e-300):
        raise DegenerateDirectionError("decreasing property degenerate direction: h_* zeta has dropped rank")
    eta = hz / np.concatenate([[hn], np.ones(m.p - 1)])
    b_comp = upper_bound(_compose(h, m), eta, metric_y)
    expected = b_m / hn
    N = hn / zn
    return {
        "bound_source": b_m,
        "pushforward_norm": N,
        "bound_composite": b_comp,
        "bound_expected": expected,
        "residual": abs(b_comp - expected) / expected,
    }


def product_check(m1: TestMap, m2: TestMap, zeta1, zeta2,
                  metric1: ReferenceMetric | None = None, metric2: ReferenceMetric | None = None) -> dict:
    """Bound of the product map ``m1 x m2`` against the product of the factor bounds.

    The product of polydisk maps is a polydisk map whose image p-vector is
    the wedge of the two images, so the product bound equals ``b1 * b2`` in
    the block-diagonal product metric; this is the mechanism behind the
    product inequality for pseudovolumes.
    """
    x1, x2 = m1.basepoint_image, m2.basepoint_image
    n1, n2 = x1.size, x2.size
    metric1 = metric1 or euclidean_metric(n1)
    metric2 = metric2 or euclidean_metric(n2)
    b1 = upper_bound(m1, zeta1, metric1)
    b2 = upper_bound(m2, zeta2, metric2)

    def block(x):
        H = np.zeros((n1 + n2, n1 + n2), dtype=complex)
        H[:n1, :n1] = metric1.matrix(x[:n1])
        H[n1:, n1:] = metric2.matrix(x[n1:])
        return H

    prod_metric = ReferenceMetric(f"{metric1.name}+{metric2.name}", n1 + n2, block)
    p1 = m1.p
    prod = TestMap(
        m1.p + m2.p,
        lambda u: np.concatenate([m1.evaluator(u[:p1]), m2.evaluator(u[p1:])]),
        np.concatenate([x1, x2]),
        description={"kind": "product"},
    )
    Z1 = _as_pvector(zeta1, n1, m1.p)
    Z2 = _as_pvector(zeta2, n2, m2.p)
    Z = np.zeros((n1 + n2, m1.p + m2.p), dtype=complex)
    Z[:n1, :m1.p] = Z1
    Z[n1:, m1.p:] = Z2
    b = upper_bound(prod, Z, prod_metric)
    return {"bound_product": b, "bound_factors": b1 * b2, "residual": abs(b - b1 * b2) / (b1 * b2)}
