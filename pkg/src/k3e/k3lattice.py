"""Even integral lattices, the K3 lattice and period points.

``L = E8(-1) + E8(-1) + U + U + U`` with coordinates ordered block by block:
0-7 and 8-15 are the two ``E8(-1)`` root bases, then the three hyperbolic
planes at 16-17, 18-19, 20-21.

A period point is a nonzero vector of ``L (x) C`` up to complex scale, given
by the caller (its entries would be the integrals of the holomorphic 2-form
over a marked basis of H_2).  The Neron-Severi lattice is the set of integral
classes orthogonal to both its real and imaginary parts.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = [
    "IntegralLattice",
    "PeriodPoint",
    "HyperbolicPlaneResult",
    "DegenerateLatticeError",
    "lattice_U",
    "lattice_E8_minus",
    "lattice_L",
    "diagonal_lattice",
    "E8_CARTAN",
    "signature",
    "determinant",
    "pairing",
    "pairing_c",
    "is_on_period_quadric",
    "period_point_from_classes",
    "neron_severi",
    "contains_hyperbolic_plane",
    "integer_kernel",
    "lll_reduce",
]

log = logging.getLogger(__name__)

# Bourbaki labelling: chain 1-3-4-5-6-7-8 with node 2 attached to node 4.
_E8_EDGES = [(0, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (1, 3)]


def _e8_cartan():
    g = [[0] * 8 for _ in range(8)]
    for i in range(8):
        g[i][i] = 2
    for i, j in _E8_EDGES:
        g[i][j] = g[j][i] = -1
    return g


E8_CARTAN = tuple(tuple(r) for r in _e8_cartan())


class DegenerateLatticeError(ValueError):
    pass


def _as_int_matrix(m) -> np.ndarray:
    a = np.array(m, dtype=object)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("Gram matrix must be square")
    out = np.empty(a.shape, dtype=object)
    for idx, x in np.ndenumerate(a):
        if int(x) != x:
            raise ValueError(f"Gram entries must be integers, got {x!r}")
        out[idx] = int(x)
    return out


@dataclass(frozen=True, eq=False)
class IntegralLattice:
    """``Z^rank`` with the symmetric integer Gram matrix ``gram``.

    ``embedding`` optionally holds the basis as rows of integer coordinates in
    an ambient lattice (used for sublattices such as NS(X) inside L).
    """

    gram: np.ndarray
    name: str = ""
    embedding: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        g = _as_int_matrix(self.gram)
        if g.shape[0] and not (g == g.T).all():
            raise ValueError("Gram matrix must be symmetric")
        object.__setattr__(self, "gram", g)
        if self.embedding is not None:
            e = np.array(self.embedding, dtype=object)
            if e.ndim != 2:
                e = e.reshape(g.shape[0], -1) if e.size else np.empty((0, 0), dtype=object)
            if e.shape[0] != g.shape[0]:
                raise ValueError("embedding needs one row per basis vector")
            object.__setattr__(self, "embedding", e)

    @property
    def rank(self) -> int:
        return int(self.gram.shape[0])

    @property
    def is_even(self) -> bool:
        return all(self.gram[i, i] % 2 == 0 for i in range(self.rank))

    def __add__(self, other: "IntegralLattice") -> "IntegralLattice":
        return direct_sum(self, other)

    def gram_float(self) -> np.ndarray:
        return self.gram.astype(float)

    def to_json(self) -> dict:
        out = {"rank": self.rank, "gram": [[int(x) for x in row] for row in self.gram]}
        if self.embedding is not None:
            out["embedding"] = [[int(x) for x in row] for row in self.embedding]
        return out

    @classmethod
    def from_json(cls, obj) -> "IntegralLattice":
        try:
            rank = obj["rank"]
            gram = obj["gram"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed lattice: missing {exc}") from exc
        lat = cls(gram, name=obj.get("name", ""), embedding=obj.get("embedding"))
        if lat.rank != rank:
            raise ValueError(f"declared rank {rank} but Gram matrix is {lat.rank}x{lat.rank}")
        return lat


def direct_sum(*lattices: IntegralLattice) -> IntegralLattice:
    n = sum(l.rank for l in lattices)
    g = np.zeros((n, n), dtype=object)
    g[:] = 0
    i = 0
    for l in lattices:
        g[i:i + l.rank, i:i + l.rank] = l.gram
        i += l.rank
    return IntegralLattice(g, name="+".join(l.name or "?" for l in lattices))


def lattice_U() -> IntegralLattice:
    return IntegralLattice([[0, 1], [1, 0]], name="U")


def lattice_E8_minus() -> IntegralLattice:
    return IntegralLattice([[-x for x in row] for row in E8_CARTAN], name="E8(-1)")


def lattice_L() -> IntegralLattice:
    e8, u = lattice_E8_minus(), lattice_U()
    lat = direct_sum(e8, e8, u, u, u)
    return IntegralLattice(lat.gram, name="L")


def diagonal_lattice(*entries: int) -> IntegralLattice:
    n = len(entries)
    g = [[entries[i] if i == j else 0 for j in range(n)] for i in range(n)]
    return IntegralLattice(g, name="<" + ",".join(map(str, entries)) + ">")


def determinant(lat: IntegralLattice) -> int:
    """Exact determinant of the Gram matrix (fraction-free Bareiss)."""
    a = [[int(x) for x in row] for row in lat.gram]
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def _inertia(gram) -> tuple[int, int, int]:
    """(positive, negative, zero) counts by exact congruence diagonalization."""
    a = [[Fraction(int(x)) for x in row] for row in gram]
    n = len(a)
    pos = neg = 0
    active = list(range(n))
    while active:
        piv = next((i for i in active if a[i][i] != 0), None)
        if piv is None:
            pair = next(((i, j) for i in active for j in active if i != j and a[i][j] != 0), None)
            if pair is None:
                break
            i, j = pair
            # row/col i += row/col j makes the diagonal 2 a_ij (+ a_jj = 0)
            for c in range(n):
                a[i][c] += a[j][c]
            for r in range(n):
                a[r][i] += a[r][j]
            piv = i
        d = a[piv][piv]
        if d > 0:
            pos += 1
        else:
            neg += 1
        active.remove(piv)
        for i in active:
            f = a[i][piv] / d
            if f:
                for c in active:
                    a[i][c] -= f * a[piv][c]
        for i in active:
            a[piv][i] = a[i][piv] = Fraction(0)
    return pos, neg, n - pos - neg


def signature(lat: IntegralLattice) -> tuple[int, int]:
    p, q, z = _inertia(lat.gram)
    if z:
        raise DegenerateLatticeError(f"Gram matrix is degenerate (nullity {z})")
    return p, q


def _check_len(lat, *vs):
    for v in vs:
        if len(v) != lat.rank:
            raise ValueError(f"vector of length {len(v)} for a rank-{lat.rank} lattice")


def pairing(lat: IntegralLattice, v, w) -> int:
    _check_len(lat, v, w)
    v = [int(x) for x in v]
    w = [int(x) for x in w]
    return int(sum(v[i] * sum(int(lat.gram[i, j]) * w[j] for j in range(lat.rank)) for i in range(lat.rank)))


def pairing_c(lat: IntegralLattice, x, y) -> complex:
    """Complex bilinear extension (no conjugation)."""
    _check_len(lat, x, y)
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    return complex(x @ lat.gram_float() @ y)


@dataclass(frozen=True, eq=False)
class PeriodPoint:
    """A point of P(L (x) C), i.e. 22 complex numbers up to common scale."""

    omega: np.ndarray

    def __post_init__(self):
        w = np.array(self.omega, dtype=complex).ravel()
        if not np.any(w):
            raise ValueError("period point must be nonzero")
        w.setflags(write=False)
        object.__setattr__(self, "omega", w)

    def normalized(self) -> np.ndarray:
        """Representative whose largest-modulus entry is exactly 1."""
        k = int(np.argmax(np.abs(self.omega)))
        w = self.omega / self.omega[k]
        w[k] = 1.0
        return w

    def __eq__(self, other):
        if not isinstance(other, PeriodPoint):
            return NotImplemented
        a, b = self.normalized(), other.normalized()
        return a.shape == b.shape and bool(np.allclose(a, b, rtol=0, atol=1e-12))

    __hash__ = None

    def to_json(self):
        return [[float(z.real), float(z.imag)] for z in self.omega]

    @classmethod
    def from_json(cls, obj) -> "PeriodPoint":
        if isinstance(obj, dict):
            obj = obj.get("omega", obj.get("period_point"))
        try:
            vals = [complex(float(re), float(im)) for re, im in obj]
        except (TypeError, ValueError) as exc:
            raise ValueError(f"malformed period point: {exc}") from exc
        return cls(np.array(vals))


def is_on_period_quadric(
    omega: PeriodPoint, tol: float = 1e-9, strict: bool = False, lattice: IntegralLattice | None = None
) -> bool:
    """Whether ``<w, w> = 0``; ``strict`` also asks for ``<w, conj w> > 0``."""
    lat = lattice or lattice_L()
    w = omega.normalized()
    _check_len(lat, w)
    g = lat.gram_float()
    scale = float(np.abs(w) @ np.abs(g) @ np.abs(w))
    ok = abs(w @ g @ w) <= tol * max(scale, 1e-300)
    if strict:
        ok = ok and float((w @ g @ w.conj()).real) > tol * scale
    return bool(ok)


def period_point_from_classes(v1, v2, lattice: IntegralLattice | None = None) -> PeriodPoint:
    """``v1 + i v2`` for real classes with ``<v1, v1> = <v2, v2> > 0`` and ``<v1, v2> = 0``.

    These are exactly the conditions for ``<w, w> = 0`` and ``<w, conj w> > 0``.
    """
    lat = lattice or lattice_L()
    a = np.asarray(v1, dtype=float)
    b = np.asarray(v2, dtype=float)
    _check_len(lat, a, b)
    g = lat.gram_float()
    aa, bb, ab = a @ g @ a, b @ g @ b, a @ g @ b
    scale = max(abs(aa), abs(bb), 1.0)
    if aa <= 0 or abs(aa - bb) > 1e-12 * scale or abs(ab) > 1e-12 * scale:
        raise ValueError(f"need <v1,v1> = <v2,v2> > 0 and <v1,v2> = 0, got {aa}, {bb}, {ab}")
    return PeriodPoint(a + 1j * b)


# --------------------------------------------------------------------------
# integer linear algebra


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def integer_kernel(rows) -> list[list[int]]:
    """Basis of ``{v in Z^n : A v = 0}`` for an integer matrix ``A``.

    Column operations by unimodular 2x2 blocks bring ``A`` to lower echelon
    form; the transformed identity columns past the pivots span the kernel.
    """
    a = [[int(x) for x in r] for r in rows]
    if not a:
        raise ValueError("need at least one row (use the identity for no constraints)")
    n = len(a[0])
    cols = [[int(i == j) for i in range(n)] for j in range(n)]  # columns of U
    acols = [[a[r][j] for r in range(len(a))] for j in range(n)]  # columns of A U
    p = 0
    for r in range(len(a)):
        if p >= n:
            break
        for j in range(p + 1, n):
            x, y = acols[p][r], acols[j][r]
            if y == 0:
                continue
            g, s, t = _egcd(x, y)
            u, v = x // g, y // g
            # [p, j] <- [s p + t j, -v p + u j], determinant s u + t v = 1
            acols[p], acols[j] = (
                [s * c1 + t * c2 for c1, c2 in zip(acols[p], acols[j])],
                [-v * c1 + u * c2 for c1, c2 in zip(acols[p], acols[j])],
            )
            cols[p], cols[j] = (
                [s * c1 + t * c2 for c1, c2 in zip(cols[p], cols[j])],
                [-v * c1 + u * c2 for c1, c2 in zip(cols[p], cols[j])],
            )
        if acols[p][r] != 0:
            p += 1
    return [cols[j] for j in range(p, n)]


def lll_reduce(basis, delta: Fraction = Fraction(99, 100)) -> list[list[int]]:
    """LLL-reduce linearly independent integer row vectors (Euclidean norm)."""
    b = [[int(x) for x in v] for v in basis]
    n = len(b)
    if n <= 1:
        return b

    def dot(u, v):
        return sum(x * y for x, y in zip(u, v))

    bstar: list[list[Fraction]] = []
    bb: list[Fraction] = []
    mu = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        v = [Fraction(x) for x in b[i]]
        for j in range(i):
            mu[i][j] = Fraction(dot(b[i], bstar[j])) / bb[j] if bb[j] else Fraction(0)
            v = [x - mu[i][j] * y for x, y in zip(v, bstar[j])]
        bstar.append(v)
        bb.append(dot(v, v))
        if bb[-1] == 0:
            raise ValueError("lll_reduce needs linearly independent vectors")

    def size_reduce(k, j):
        q = round(mu[k][j])
        if q:
            b[k] = [x - q * y for x, y in zip(b[k], b[j])]
            mu[k][j] -= q
            for l in range(j):
                mu[k][l] -= q * mu[j][l]

    k = 1
    while k < n:
        size_reduce(k, k - 1)
        if bb[k] >= (delta - mu[k][k - 1] ** 2) * bb[k - 1]:
            for j in range(k - 2, -1, -1):
                size_reduce(k, j)
            k += 1
            continue
        m = mu[k][k - 1]
        big = bb[k] + m * m * bb[k - 1]
        mu[k][k - 1] = m * bb[k - 1] / big
        bb[k] = bb[k - 1] * bb[k] / big
        bb[k - 1] = big
        b[k], b[k - 1] = b[k - 1], b[k]
        for j in range(k - 1):
            mu[k - 1][j], mu[k][j] = mu[k][j], mu[k - 1][j]
        for i in range(k + 1, n):
            t = mu[i][k]
            mu[i][k] = mu[i][k - 1] - m * t
            mu[i][k - 1] = t + mu[k][k - 1] * mu[i][k]
        k = max(k - 1, 1)
    return b


def _rationalize(x: float, denominator_bound: int, rational_tol: float) -> Fraction | None:
    r = Fraction(x).limit_denominator(denominator_bound)
    if abs(x - float(r)) <= rational_tol * max(1.0, abs(x)):
        return r
    return None


def _constraint_rows(vec: np.ndarray, denominator_bound: int, rational_tol: float, symbols: list[float]):
    """Split ``sum u_i vec_i = 0`` into rational equations.

    Entries that do not rationalize are written ``q * theta`` for a symbol
    ``theta``; distinct symbols are assumed linearly independent over Q
    together with 1, so each symbol contributes its own equation.
    """
    parts: dict[int, list[Fraction]] = {}
    n = len(vec)
    for i, x in enumerate(vec):
        x = float(x)
        if x == 0.0:
            continue
        r = _rationalize(x, denominator_bound, rational_tol)
        if r is not None:
            parts.setdefault(-1, [Fraction(0)] * n)[i] = r
            continue
        for s, theta in enumerate(symbols):
            q = _rationalize(x / theta, denominator_bound, rational_tol)
            if q is not None:
                parts.setdefault(s, [Fraction(0)] * n)[i] = q
                break
        else:
            symbols.append(x)
            parts.setdefault(len(symbols) - 1, [Fraction(0)] * n)[i] = Fraction(1)
    rows = []
    for row in parts.values():
        den = math.lcm(*(f.denominator for f in row))
        rows.append([int(f * den) for f in row])
    return rows


def neron_severi(
    omega: PeriodPoint,
    tol: float = 1e-9,
    lattice: IntegralLattice | None = None,
    denominator_bound: int = 10 ** 6,
    rational_tol: float = 1e-14,
) -> IntegralLattice:
    """Integral classes orthogonal to ``Re w`` and ``Im w``, with induced Gram.

    ``w`` is first scaled so its largest entry is 1.  Entries that agree with a
    fraction of denominator at most ``denominator_bound`` to ``rational_tol``
    are treated as exact rationals; the others as Q-independent irrationals
    (up to rational multiples of one another).  The kernel is then computed
    exactly over Z and LLL-reduced.
    """
    lat = lattice or lattice_L()
    w = omega.normalized()
    _check_len(lat, w)
    gram = [[int(x) for x in row] for row in lat.gram]
    symbols: list[float] = []
    u_rows = _constraint_rows(w.real, denominator_bound, rational_tol, symbols)
    u_rows += _constraint_rows(w.imag, denominator_bound, rational_tol, symbols)
    # constraints are on u = G v
    rows = [[sum(r[i] * gram[i][j] for i in range(lat.rank)) for j in range(lat.rank)] for r in u_rows]
    rows = [r for r in rows if any(r)]
    if rows:
        basis = integer_kernel(rows)
    else:
        basis = [[int(i == j) for j in range(lat.rank)] for i in range(lat.rank)]
    if basis:
        basis = lll_reduce(basis)
    g = lat.gram_float()
    a, b = g @ w.real, g @ w.imag
    scale = float(np.abs(w) @ np.abs(g) @ np.ones(lat.rank))
    for v in basis:
        vf = np.array(v, dtype=float)
        if abs(vf @ a) > tol * max(1.0, scale) or abs(vf @ b) > tol * max(1.0, scale):
            log.warning("NS basis vector %s misses the float constraints at tol=%g", v, tol)
    emb = np.empty((len(basis), lat.rank), dtype=object)
    for i, v in enumerate(basis):
        emb[i, :] = v
    ns_gram = [[sum(v[i] * gram[i][j] * u[j] for i in range(lat.rank) for j in range(lat.rank)) for u in basis] for v in basis]
    return IntegralLattice(np.array(ns_gram, dtype=object).reshape(len(basis), len(basis)), name="NS", embedding=emb)


# --------------------------------------------------------------------------
# hyperbolic plane search


@dataclass(frozen=True)
class HyperbolicPlaneResult:
    """Outcome of a bounded search for ``e, f`` with Gram ``[[0, 1], [1, 0]]``.

    ``found=False`` with ``structural=True`` is a proof of non-existence (rank
    or definiteness); otherwise it only means "not found up to the bound".
    """

    found: bool
    e: tuple[int, ...] | None = None
    f: tuple[int, ...] | None = None
    reason: str = ""
    structural: bool = False
    candidates: int = 0

    def to_json(self) -> dict:
        return {
            "found": self.found,
            "e": list(self.e) if self.e else None,
            "f": list(self.f) if self.f else None,
            "reason": self.reason,
            "structural": self.structural,
            "candidates_examined": self.candidates,
        }


def _gvec(gram, v):
    n = len(v)
    return [sum(gram[i][j] * v[j] for j in range(n)) for i in range(n)]


def _solve_unit(h: list[int]) -> list[int] | None:
    """Integer ``f`` with ``h . f == 1``, or None when gcd(h) != 1."""
    g, f = 0, [0] * len(h)
    for i, x in enumerate(h):
        if x == 0:
            continue
        g2, s, t = _egcd(g, x)
        f = [s * c for c in f]
        f[i] += t
        g = g2
    if g < 0:
        g, f = -g, [-c for c in f]
    return f if g == 1 else None


def _complete_pair(gram, e):
    """Given primitive isotropic ``e``, find ``f`` with ``<e,f> = 1``, ``<f,f> = 0``."""
    n = len(e)
    h = _gvec(gram, e)
    f = _solve_unit(h)
    if f is None:
        return None

    def q(v):
        return sum(v[i] * x for i, x in enumerate(_gvec(gram, v)))

    if q(f) % 2:
        # change parity by a vector orthogonal to e with odd norm
        for k in integer_kernel([h]) if any(h) else []:
            if q(k) % 2:
                f = [a + b for a, b in zip(f, k)]
                break
        else:
            return None
    c = -q(f) // 2
    f = [a + c * b for a, b in zip(f, e)]
    return f


def _candidates(rank: int, bound: int):
    values = [v for k in range(1, bound + 1) for v in (k, -k)]
    for support in range(1, rank + 1):
        for idx in itertools.combinations(range(rank), support):
            for vals in itertools.product(values, repeat=support):
                if vals[0] < 0:
                    continue
                v = [0] * rank
                for i, x in zip(idx, vals):
                    v[i] = x
                yield v


def contains_hyperbolic_plane(
    lat: IntegralLattice, search_bound: int = 3, max_candidates: int = 200_000
) -> HyperbolicPlaneResult:
    """Search for a primitive embedding ``U -> lat`` inside a coordinate box."""
    if lat.rank < 2:
        return HyperbolicPlaneResult(
            False, reason=f"rank obstruction: rank {lat.rank} < 2 = rank U", structural=True
        )
    p, q, z = _inertia(lat.gram)
    if z == 0 and (p == 0 or q == 0):
        kind = "positive" if q == 0 else "negative"
        return HyperbolicPlaneResult(
            False,
            reason=f"definiteness obstruction: {kind} definite lattice has no isotropic vectors",
            structural=True,
        )
    if p + z == 0 or q + z == 0:
        return HyperbolicPlaneResult(
            False, reason="definiteness obstruction: no vector of the opposite sign", structural=True
        )
    gram = [[int(x) for x in row] for row in lat.gram]
    seen = 0
    for e in _candidates(lat.rank, search_bound):
        seen += 1
        if seen > max_candidates:
            break
        ge = _gvec(gram, e)
        if sum(a * b for a, b in zip(e, ge)) != 0:
            continue
        if math.gcd(*e) != 1:
            continue
        f = _complete_pair(gram, e)
        if f is None:
            continue
        return HyperbolicPlaneResult(True, tuple(e), tuple(f), reason="explicit pair", candidates=seen)
    return HyperbolicPlaneResult(
        False,
        reason=f"not found with |coeff| <= {search_bound} ({min(seen, max_candidates)} candidates)",
        candidates=min(seen, max_candidates),
    )
