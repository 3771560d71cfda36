"""Closed bounded convex sets with exact nearest-point projection.

Four representations are supported: a single point, a closed interval on the
line, an axis-aligned box, and the convex hull of a finite vertex set.  The
first three project by clamping; hull projection runs a nearest-point
active-set solve over the simplex of vertex weights and certifies the result
through the projector's variational inequality at every vertex, so its
correctness does not depend on the solver path.

The module also builds the hull of the union of a potential catalog's zero
sets and provides sampled verifiers for the projection inequalities the
synchronization analysis relies on.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import (
    AssumptionViolationError,
    InputError,
    NumericalError,
    RepresentationError,
)
from .report import CheckReport

__all__ = [
    "ConvexBody",
    "Point",
    "Interval1D",
    "Box",
    "Hull",
    "project",
    "distance",
    "intersect",
    "zero_set_hull",
    "check_drift_alignment",
    "check_distance_comparison",
]


def _vector(x, dim: int | None = None, what: str = "x") -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise InputError(f"{what} must be a 1-D vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise InputError(f"{what} has length {v.shape[0]}, expected {dim}")
    return v


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class ConvexBody:
    """A nonempty closed bounded convex subset of R^m."""

    @property
    def dimension(self) -> int:
        raise NotImplementedError

    def project(self, x) -> np.ndarray:
        """Nearest point of the body to ``x`` (the projector map)."""
        raise NotImplementedError

    def distance(self, x) -> float:
        """Euclidean distance from ``x`` to the body; zero iff ``x`` is a member."""
        x = _vector(x, self.dimension)
        return float(np.linalg.norm(x - self.project(x)))

    def distance_many(self, points: np.ndarray) -> np.ndarray:
        """Distances for a stack of points, shape (k, m) -> (k,)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.array([self.distance(p) for p in pts])

    def contains(self, x, tol: float = 1e-10) -> bool:
        return self.distance(x) <= tol

    def center(self) -> np.ndarray:
        """A deterministic interior representative (centroid of the description)."""
        raise NotImplementedError

    def extreme_points(self) -> np.ndarray:
        """Vertex set spanning the body, shape (k, m)."""
        raise NotImplementedError

    def as_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Point(ConvexBody):
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _frozen(_vector(self.p, what="p")))

    @property
    def dimension(self) -> int:
        return self.p.shape[0]

    def project(self, x) -> np.ndarray:
        _vector(x, self.dimension)
        return self.p.copy()

    def distance_many(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.linalg.norm(pts - self.p, axis=1)

    def center(self) -> np.ndarray:
        return self.p.copy()

    def extreme_points(self) -> np.ndarray:
        return self.p.reshape(1, -1).copy()

    def as_dict(self) -> dict:
        return {"type": "point", "p": self.p.tolist()}


@dataclass(frozen=True, eq=False)
class Interval1D(ConvexBody):
    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise InputError("interval endpoints must be finite")
        if self.lo > self.hi:
            raise InputError(f"interval requires lo <= hi, got [{self.lo}, {self.hi}]")

    @property
    def dimension(self) -> int:
        return 1

    def project(self, x) -> np.ndarray:
        x = _vector(x, 1)
        return np.clip(x, self.lo, self.hi)

    def distance_many(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.abs(pts[:, 0] - np.clip(pts[:, 0], self.lo, self.hi))

    def center(self) -> np.ndarray:
        return np.array([0.5 * (self.lo + self.hi)])

    def extreme_points(self) -> np.ndarray:
        if self.lo == self.hi:
            return np.array([[self.lo]])
        return np.array([[self.lo], [self.hi]])

    def as_dict(self) -> dict:
        return {"type": "interval", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True, eq=False)
class Box(ConvexBody):
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _vector(self.lo, what="lo")
        hi = _vector(self.hi, dim=lo.shape[0], what="hi")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InputError("box corners must be finite")
        if np.any(lo > hi):
            raise InputError("box requires lo <= hi componentwise")
        object.__setattr__(self, "lo", _frozen(lo))
        object.__setattr__(self, "hi", _frozen(hi))

    @property
    def dimension(self) -> int:
        return self.lo.shape[0]

    def project(self, x) -> np.ndarray:
        x = _vector(x, self.dimension)
        return np.clip(x, self.lo, self.hi)

    def distance_many(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.linalg.norm(pts - np.clip(pts, self.lo, self.hi), axis=1)

    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def extreme_points(self) -> np.ndarray:
        m = self.dimension
        if m > 12:
            raise RepresentationError(f"box corner enumeration infeasible for m={m}")
        corners = np.array(
            [
                [self.hi[k] if bit else self.lo[k] for k, bit in enumerate(bits)]
                for bits in itertools.product([0, 1], repeat=m)
            ]
        )
        return np.unique(corners, axis=0)

    def as_dict(self) -> dict:
        return {"type": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass(frozen=True, eq=False)
class Hull(ConvexBody):
    vertices: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if v.ndim != 2 or v.shape[0] < 1:
            raise InputError("hull needs at least one vertex of shape (k, m)")
        if not np.all(np.isfinite(v)):
            raise InputError("hull vertices must be finite")
        object.__setattr__(self, "vertices", _frozen(v))

    @property
    def dimension(self) -> int:
        return self.vertices.shape[1]

    def project(self, x) -> np.ndarray:
        x = _vector(x, self.dimension)
        return _project_hull(self.vertices, x)

    def center(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def extreme_points(self) -> np.ndarray:
        return self.vertices.copy()

    def as_dict(self) -> dict:
        return {"type": "hull", "vertices": self.vertices.tolist()}


def project(body: ConvexBody, x) -> np.ndarray:
    """Nearest point of ``body`` to ``x``."""
    return body.project(x)


def distance(body: ConvexBody, x) -> float:
    """Euclidean distance from ``x`` to ``body``."""
    return body.distance(x)


# -- hull projection -------------------------------------------------------


def _affine_weight_minimizer(vertices: np.ndarray, support: list[int], x: np.ndarray):
    """Weights minimizing |x - sum(lam_k v_k)| subject to sum(lam)=1 (sign-unconstrained)."""
    k = len(support)
    if k == 1:
        return np.array([1.0])
    V = vertices[support].T  # (m, k)
    # lam = e_1 + B nu parametrizes the affine constraint sum(lam) = 1
    B = np.vstack([-np.ones((1, k - 1)), np.eye(k - 1)])
    nu, *_ = np.linalg.lstsq(V @ B, x - V[:, 0], rcond=None)
    lam = np.zeros(k)
    lam[0] = 1.0
    return lam + B @ nu


def _project_hull(vertices: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Nearest point in conv(vertices) to x via a Wolfe-style active-set solve.

    Optimality is certified by the variational inequality at every vertex;
    the iteration budget trip raises with the residual so a silent bad
    projection cannot escape.
    """
    nverts = vertices.shape[0]
    scale = max(1.0, float(np.max(np.abs(vertices))), float(np.max(np.abs(x))))
    cert_tol = 5e-13 * scale * scale
    member_tol = 1e-11 * scale

    dists = np.linalg.norm(vertices - x, axis=1)
    support = [int(np.argmin(dists))]
    lam = np.array([1.0])

    max_outer = 16 * (nverts + 2) * (nverts + 2)
    worst = np.inf
    for _ in range(max_outer):
        p = lam @ vertices[support]
        # variational inequality <p - x, v - p> >= 0 for all vertices v
        slack = (vertices - p) @ (p - x)
        j = int(np.argmin(slack))
        worst = float(slack[j])
        if worst >= -cert_tol:
            if np.linalg.norm(p - x) <= member_tol:
                return np.array(x, dtype=float)  # x is (numerically) a member
            return p
        if j in support:
            break  # stalled: affine solve already optimal over support
        support.append(j)
        lam = np.append(lam, 0.0)
        # restore feasibility: pull lam toward the affine minimizer, dropping
        # vertices whose weight hits zero
        for _ in range(nverts + 2):
            lam_hat = _affine_weight_minimizer(vertices, support, x)
            if lam_hat.min() >= -1e-13:
                lam = np.clip(lam_hat, 0.0, None)
                lam = lam / lam.sum()
                break
            shrink = lam_hat < lam
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(shrink, lam / (lam - lam_hat), np.inf)
            alpha = min(1.0, float(np.min(ratios)))
            lam = (1.0 - alpha) * lam + alpha * lam_hat
            keep = lam > 1e-13
            if keep.all():
                keep[int(np.argmin(lam))] = False
            support = [s for s, k in zip(support, keep) if k]
            lam = lam[keep]
            lam = lam / lam.sum()
    raise NumericalError(
        f"hull projection failed to certify optimality: worst vertex slack "
        f"{worst:.3e} (tolerance {-cert_tol:.3e})"
    )


# -- zero-set geometry ------------------------------------------------------


def _corners(body: ConvexBody) -> np.ndarray:
    pts = body.extreme_points()
    if not np.all(np.isfinite(pts)):
        raise AssumptionViolationError("zero set is unbounded; the hull of zero sets must be bounded")
    return pts


def intersect(bodies: list[ConvexBody], tol: float = 1e-9) -> ConvexBody | None:
    """Intersection of point/interval/box bodies, or ``None`` when empty.

    Hulls are not supported: every catalog zero set is a point, interval, or
    box, and those are closed under intersection.
    """
    if not bodies:
        raise InputError("intersect requires at least one body")
    dim = bodies[0].dimension
    lo = np.full(dim, -np.inf)
    hi = np.full(dim, np.inf)
    for b in bodies:
        if b.dimension != dim:
            raise InputError("bodies must share one dimension")
        if isinstance(b, Point):
            blo = bhi = b.p
        elif isinstance(b, Interval1D):
            blo, bhi = np.array([b.lo]), np.array([b.hi])
        elif isinstance(b, Box):
            blo, bhi = b.lo, b.hi
        else:
            raise RepresentationError(f"intersection unsupported for {type(b).__name__}")
        lo = np.maximum(lo, blo)
        hi = np.minimum(hi, bhi)
    if np.any(lo > hi + tol):
        return None
    hi = np.maximum(lo, hi)  # collapse sub-tolerance inversions
    if np.all(hi - lo <= tol):
        return Point(0.5 * (lo + hi))
    if dim == 1:
        return Interval1D(lo[0], hi[0])
    return Box(lo, hi)


def zero_set_hull(potentials) -> ConvexBody:
    """Convex hull of the union of all nodes' zero sets.

    In one dimension this is an interval spanning every zero set; in higher
    dimensions it is the hull of all corner vertices of the (point or box)
    zero sets.
    """
    if not potentials:
        raise InputError("zero_set_hull requires at least one potential")
    zsets = [p.zero_set() for p in potentials]
    dim = zsets[0].dimension
    if any(z.dimension != dim for z in zsets):
        raise InputError("zero sets must share one dimension")
    if dim == 1:
        lo = min(z.extreme_points().min() for z in zsets)
        hi = max(z.extreme_points().max() for z in zsets)
        for z in zsets:
            _corners(z)  # boundedness
        if lo == hi:
            return Point(np.array([lo]))
        return Interval1D(lo, hi)
    pts = np.vstack([_corners(z) for z in zsets])
    pts = np.unique(pts, axis=0)
    if pts.shape[0] == 1:
        return Point(pts[0])
    return Hull(pts)


def check_drift_alignment(potentials, samples, tol: float = 1e-10) -> CheckReport:
    """Sampled verification of the projection inner-product inequality.

    For every node self-dynamics f_i and every sample x it evaluates
    ``<x - P(x), f_i(x)>`` against the hull of the union of zero sets and
    passes iff no value exceeds ``tol``.  A sampled pass is evidence, not a
    proof; the report records the checked sample count.
    """
    body = zero_set_hull(potentials)
    worst = -np.inf
    where = None
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    for si, x in enumerate(pts):
        px = body.project(x)
        gap = x - px
        for ni, p in enumerate(potentials):
            val = float(np.dot(gap, p.self_dynamics(x)))
            if val > worst:
                worst = val
                where = {"node": ni, "sample_index": si, "sample": x.tolist()}
    return CheckReport(
        check="drift_alignment",
        passed=worst <= tol,
        worst_value=worst,
        location=where,
        params={"tol": tol, "samples": int(pts.shape[0]), "body": body.as_dict()},
    )


def check_distance_comparison(body: ConvexBody, pairs, tol: float = 1e-10) -> CheckReport:
    """Verify both distance-comparison inequalities on the given point pairs.

    Part (i) is checked on every pair; part (ii) only on pairs where the
    first point is strictly farther from the body than the second.
    """
    pairs = list(pairs)
    worst = -np.inf
    where = None
    n_ii = 0
    for idx, (xa, xb) in enumerate(pairs):
        xa = _vector(xa, body.dimension, "x_a")
        xb = _vector(xb, body.dimension, "x_b")
        pa = body.project(xa)
        da = float(np.linalg.norm(xa - pa))
        db = body.distance(xb)
        lhs = float(np.dot(xa - pa, xb - xa))
        viol_i = lhs - da * abs(da - db)
        if viol_i > worst:
            worst, where = viol_i, {"pair": idx, "part": "i"}
        if da > db:
            n_ii += 1
            viol_ii = lhs + da * (da - db)
            if viol_ii > worst:
                worst, where = viol_ii, {"pair": idx, "part": "ii"}
    return CheckReport(
        check="distance_comparison",
        passed=worst <= tol,
        worst_value=worst,
        location=where,
        params={"tol": tol, "pairs": len(pairs), "pairs_part_ii": n_ii},
    )
