"""Catalog of convex node potentials with exact gradients and argmin sets.

Each potential F is C1, convex, and coercive with a bounded argmin set, and
exposes both its value and the node self-dynamics f = -grad(F).  The catalog
is closed (four kinds) so that zero sets, convexity, and the hypotheses of
the synchronization analysis stay machine-checkable:

* ``Quadratic``      F(x) = (w/2)|x - c|^2
* ``QuarticWell``    F(x) = sum_k (x_k - c_k)^4 / 4, so f(x) = -(x - c)^3
* ``FlatBottom1D``   zero on [left, right], quadratic halves outside (1-D)
* ``SumPotential``   pointwise sum of catalog terms sharing one dimension

The quartic well is deliberately non-Lipschitz; it is evaluated in double
precision with no clamping, and boundedness along trajectories is the
simulator's responsibility (divergence guard), not the potential's.
"""

from dataclasses import dataclass

import numpy as np

from . import convex_geometry as cg
from .errors import InputError, RepresentationError
from .report import CheckReport

__all__ = [
    "Potential",
    "Quadratic",
    "QuarticWell",
    "FlatBottom1D",
    "SumPotential",
    "eval_potential",
    "eval_self_dynamics",
    "zero_set",
    "gradient_consistency_check",
    "common_zero_set",
    "potential_from_dict",
    "potential_to_dict",
]


class Potential:
    """Base class: immutable, pure, safe to share across threads."""

    @property
    def dimension(self) -> int:
        raise NotImplementedError

    def value(self, x) -> float:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def self_dynamics(self, x) -> np.ndarray:
        """Node drift f(x) = -grad F(x)."""
        return -self.gradient(x)

    def zero_set(self) -> cg.ConvexBody:
        """Exact argmin set {z : f(z) = 0} as a convex body."""
        raise NotImplementedError

    def _check(self, x) -> np.ndarray:
        v = np.atleast_1d(np.asarray(x, dtype=float))
        if v.shape != (self.dimension,):
            raise InputError(
                f"state has shape {v.shape}, expected ({self.dimension},) for {type(self).__name__}"
            )
        return v


@dataclass(frozen=True, eq=False)
class Quadratic(Potential):
    center: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise InputError("quadratic center must be a finite vector")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "weight", float(self.weight))
        if not (self.weight > 0 and np.isfinite(self.weight)):
            raise InputError(f"quadratic weight must be positive, got {self.weight}")

    @property
    def dimension(self) -> int:
        return self.center.shape[0]

    def value(self, x) -> float:
        d = self._check(x) - self.center
        return 0.5 * self.weight * float(d @ d)

    def gradient(self, x) -> np.ndarray:
        return self.weight * (self._check(x) - self.center)

    def zero_set(self) -> cg.ConvexBody:
        return cg.Point(self.center)


@dataclass(frozen=True, eq=False)
class QuarticWell(Potential):
    center: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise InputError("quartic center must be a finite vector")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)

    @property
    def dimension(self) -> int:
        return self.center.shape[0]

    def value(self, x) -> float:
        d = self._check(x) - self.center
        return 0.25 * float(np.sum(d**4))

    def gradient(self, x) -> np.ndarray:
        d = self._check(x) - self.center
        return d**3

    def zero_set(self) -> cg.ConvexBody:
        return cg.Point(self.center)


@dataclass(frozen=True, eq=False)
class FlatBottom1D(Potential):
    """Zero on [left, right]; (x-right)^2/2 above and (left-x)^2/2 below.

    The quadratic halves are the simplest C1 completion keeping the argmin
    bounded, and the argmin set is exactly the interval [left, right].
    """

    left: float
    right: float

    def __post_init__(self):
        object.__setattr__(self, "left", float(self.left))
        object.__setattr__(self, "right", float(self.right))
        if not (np.isfinite(self.left) and np.isfinite(self.right)):
            raise InputError("flat-bottom endpoints must be finite")
        if self.left > self.right:
            raise InputError(f"flat bottom requires left <= right, got [{self.left}, {self.right}]")

    @property
    def dimension(self) -> int:
        return 1

    def value(self, x) -> float:
        s = float(self._check(x)[0])
        if s > self.right:
            return 0.5 * (s - self.right) ** 2
        if s < self.left:
            return 0.5 * (self.left - s) ** 2
        return 0.0

    def gradient(self, x) -> np.ndarray:
        s = float(self._check(x)[0])
        if s > self.right:
            return np.array([s - self.right])
        if s < self.left:
            return np.array([s - self.left])
        return np.zeros(1)

    def zero_set(self) -> cg.ConvexBody:
        if self.left == self.right:
            return cg.Point(np.array([self.left]))
        return cg.Interval1D(self.left, self.right)


@dataclass(frozen=True, eq=False)
class SumPotential(Potential):
    terms: tuple

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise InputError("sum potential needs at least one term")
        if any(not isinstance(t, Potential) for t in terms):
            raise InputError("sum terms must be catalog potentials")
        dims = {t.dimension for t in terms}
        if len(dims) != 1:
            raise InputError(f"sum terms must share one dimension, got {sorted(dims)}")
        object.__setattr__(self, "terms", terms)

    @property
    def dimension(self) -> int:
        return self.terms[0].dimension

    def value(self, x) -> float:
        x = self._check(x)
        return sum(t.value(x) for t in self.terms)

    def gradient(self, x) -> np.ndarray:
        x = self._check(x)
        g = np.zeros(self.dimension)
        for t in self.terms:
            g += t.gradient(x)
        return g

    def zero_set(self) -> cg.ConvexBody:
        flat = _flatten_terms(self)
        # shared minimizer: the argmin of the sum is exactly the intersection
        common = cg.intersect([t.zero_set() for t in flat], tol=0.0)
        if common is not None:
            return common
        if all(isinstance(t, Quadratic) for t in flat):
            wsum = sum(t.weight for t in flat)
            c = sum(t.weight * t.center for t in flat) / wsum
            return cg.Point(c)
        # catalog gradients are componentwise separable, so the argmin box
        # follows from m independent one-dimensional bisections
        lo = np.empty(self.dimension)
        hi = np.empty(self.dimension)
        for k in range(self.dimension):
            lo[k], hi[k] = _component_zero_interval(flat, k)
        scale = max(1.0, float(np.max(np.abs(lo))), float(np.max(np.abs(hi))))
        if np.all(hi - lo <= 1e-9 * scale):
            return cg.Point(0.5 * (lo + hi))
        if self.dimension == 1:
            return cg.Interval1D(lo[0], hi[0])
        return cg.Box(lo, hi)


def _flatten_terms(spec: Potential) -> list[Potential]:
    if isinstance(spec, SumPotential):
        out: list[Potential] = []
        for t in spec.terms:
            out.extend(_flatten_terms(t))
        return out
    return [spec]


def _component_zero_interval(terms: list[Potential], k: int) -> tuple[float, float]:
    """Zero interval of the k-th gradient component of a separable sum.

    The component derivative is non-decreasing, so {deriv = 0} is an interval
    bracketed by the union of the terms' per-component argmin ranges.
    """

    def deriv(s: float) -> float:
        total = 0.0
        for t in terms:
            if isinstance(t, Quadratic):
                total += t.weight * (s - t.center[k])
            elif isinstance(t, QuarticWell):
                total += (s - t.center[k]) ** 3
            elif isinstance(t, FlatBottom1D):
                if s > t.right:
                    total += s - t.right
                elif s < t.left:
                    total += s - t.left
            else:
                raise RepresentationError(
                    f"zero set not representable for sum containing {type(t).__name__}"
                )
        return total

    los, his = [], []
    for t in terms:
        ext = t.zero_set().extreme_points()[:, 0 if t.dimension == 1 else k]
        los.append(float(np.min(ext)))
        his.append(float(np.max(ext)))
    a, b = min(los) - 1.0, max(his) + 1.0
    if not (deriv(a) < 0.0 < deriv(b)):
        raise RepresentationError("failed to bracket the argmin of a sum potential")

    def bisect(predicate) -> tuple[float, float]:
        # predicate flips once from False to True on [a, b]
        lo_, hi_ = a, b
        for _ in range(200):
            mid = 0.5 * (lo_ + hi_)
            if predicate(mid):
                hi_ = mid
            else:
                lo_ = mid
        return lo_, hi_

    _, left_edge = bisect(lambda s: deriv(s) >= 0.0)
    right_edge, _ = bisect(lambda s: deriv(s) > 0.0)
    if right_edge < left_edge:
        mid = 0.5 * (left_edge + right_edge)
        return mid, mid
    return left_edge, right_edge


# -- catalog operations -----------------------------------------------------


def eval_potential(spec: Potential, x) -> float:
    """F(x); finite for every finite state of matching dimension."""
    return spec.value(x)


def eval_self_dynamics(spec: Potential, x) -> np.ndarray:
    """f(x) = -grad F(x), the node drift."""
    return spec.self_dynamics(x)


def zero_set(spec: Potential) -> cg.ConvexBody:
    """Exact argmin set of the potential as a convex body."""
    return spec.zero_set()


def common_zero_set(potentials) -> cg.ConvexBody | None:
    """Intersection of all nodes' zero sets, or ``None`` when empty."""
    return cg.intersect([p.zero_set() for p in potentials])


def gradient_consistency_check(
    spec: Potential, samples, h: float, tol: float
) -> CheckReport:
    """Central finite differences of the value against the analytic drift.

    For every sample the difference quotient of F must match -f within
    ``tol`` componentwise; the report carries the worst deviation.
    """
    if h <= 0 or tol <= 0:
        raise InputError("h and tol must be positive")
    worst = 0.0
    where = None
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    for si, x in enumerate(pts):
        f = spec.self_dynamics(x)
        for k in range(spec.dimension):
            e = np.zeros(spec.dimension)
            e[k] = h
            fd = (spec.value(x + e) - spec.value(x - e)) / (2.0 * h)
            dev = abs(fd + f[k])
            if dev > worst:
                worst = dev
                where = {"sample_index": si, "component": k, "sample": x.tolist()}
    return CheckReport(
        check="gradient_consistency",
        passed=worst <= tol,
        worst_value=worst,
        location=where,
        params={"h": h, "tol": tol, "samples": int(pts.shape[0])},
    )


# -- serialization ----------------------------------------------------------

_KINDS = {"quadratic", "quartic", "flat_bottom", "sum"}


def potential_from_dict(d: dict) -> Potential:
    """Parse the scenario-file representation of a potential."""
    if not isinstance(d, dict) or "kind" not in d:
        raise InputError(f"potential entry must be an object with a 'kind' field, got {d!r}")
    kind = d["kind"]
    if kind not in _KINDS:
        raise InputError(f"unknown potential kind {kind!r}; expected one of {sorted(_KINDS)}")
    try:
        if kind == "quadratic":
            return Quadratic(center=d["center"], weight=d.get("weight", 1.0))
        if kind == "quartic":
            return QuarticWell(center=d["center"])
        if kind == "flat_bottom":
            return FlatBottom1D(left=d["left"], right=d["right"])
        return SumPotential(tuple(potential_from_dict(t) for t in d["terms"]))
    except KeyError as e:
        raise InputError(f"potential kind {kind!r} is missing field {e.args[0]!r}") from None


def potential_to_dict(spec: Potential) -> dict:
    if isinstance(spec, Quadratic):
        return {"kind": "quadratic", "center": spec.center.tolist(), "weight": spec.weight}
    if isinstance(spec, QuarticWell):
        return {"kind": "quartic", "center": spec.center.tolist()}
    if isinstance(spec, FlatBottom1D):
        return {"kind": "flat_bottom", "left": spec.left, "right": spec.right}
    if isinstance(spec, SumPotential):
        return {"kind": "sum", "terms": [potential_to_dict(t) for t in spec.terms]}
    raise InputError(f"cannot serialize {type(spec).__name__}")
