"""Points, surfaces and the level predicate shared by every structure.

Two surface families are supported: non-vertical planes z = a*x + b*y + c
and additively weighted cones z = |q - site| + offset.  Float evaluation
uses an absolute tolerance; planes can also be evaluated exactly with
Fractions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Union

TOL = 1e-9


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("point coordinates must be finite")


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(float(v)) for v in (self.x, self.y, self.z)):
            raise ValueError("point coordinates must be finite")


@dataclass(frozen=True)
class PlaneSurface:
    a: float
    b: float
    c: float

    def __post_init__(self):
        if not all(math.isfinite(float(v)) for v in (self.a, self.b, self.c)):
            raise ValueError("plane coefficients must be finite")


@dataclass(frozen=True)
class ConeSurface:
    site: Point2
    offset: float

    def __post_init__(self):
        if not math.isfinite(self.offset):
            raise ValueError("cone offset must be finite")


Body = Union[PlaneSurface, ConeSurface]


@dataclass(frozen=True)
class Surface:
    id: int
    body: Body

    @property
    def family(self) -> str:
        return "plane" if isinstance(self.body, PlaneSurface) else "cone"


@dataclass(frozen=True)
class NumericPolicy:
    mode: str = "float"
    tol: float = TOL

    def __post_init__(self):
        if self.mode not in ("float", "exact"):
            raise ValueError(f"unknown numeric mode {self.mode!r}")


FLOAT = NumericPolicy()
EXACT = NumericPolicy("exact", 0.0)


class DegenerateError(ValueError):
    """Raised when an input violates general position beyond tolerance."""


def _body(s):
    return s.body if isinstance(s, Surface) else s


def eval_surface(s, q) -> float:
    body = _body(s)
    if isinstance(body, PlaneSurface):
        return body.a * q.x + body.b * q.y + body.c
    return math.hypot(q.x - body.site.x, q.y - body.site.y) + body.offset


def eval_exact(s, q) -> Fraction:
    """Exact value of a plane at q; cones have no rational form."""
    body = _body(s)
    if not isinstance(body, PlaneSurface):
        raise TypeError("exact evaluation is only defined for planes")
    x, y = Fraction(q.x), Fraction(q.y)
    return Fraction(body.a) * x + Fraction(body.b) * y + Fraction(body.c)


def lift_euclidean(p) -> PlaneSurface:
    # |q - p|^2 - |q|^2, the |q|^2 term is shared by every site
    return PlaneSurface(-2.0 * p.x, -2.0 * p.y, p.x * p.x + p.y * p.y)


def lift_exact(x, y) -> tuple[Fraction, Fraction, Fraction]:
    fx, fy = Fraction(x), Fraction(y)
    return -2 * fx, -2 * fy, fx * fx + fy * fy


def level_of_point(q, F: Iterable, policy: NumericPolicy = FLOAT) -> int:
    """Number of surfaces passing strictly below q."""
    q2 = Point2(float(q.x), float(q.y))
    if policy.mode == "exact":
        z = Fraction(q.z)
        return sum(1 for s in F if eval_exact(s, q2) < z)
    return sum(1 for s in F if eval_surface(s, q2) < q.z - policy.tol)


@dataclass(frozen=True)
class _ExactPoint3:
    x: Fraction
    y: Fraction
    z: Fraction


def triple_intersection(p1: PlaneSurface, p2: PlaneSurface, p3: PlaneSurface,
                        policy: NumericPolicy = FLOAT) -> Optional[Point3]:
    """Common point of three planes, or None when the system is singular.

    Subtracting pairs leaves a 2x2 system in (x, y), solved by Cramer's rule.
    """
    planes = [_body(p) for p in (p1, p2, p3)]
    if policy.mode == "exact":
        a, b, c = zip(*[(Fraction(p.a), Fraction(p.b), Fraction(p.c)) for p in planes])
    else:
        a, b, c = zip(*[(p.a, p.b, p.c) for p in planes])
    a11, a12, r1 = a[0] - a[1], b[0] - b[1], c[1] - c[0]
    a21, a22, r2 = a[0] - a[2], b[0] - b[2], c[2] - c[0]
    det = a11 * a22 - a12 * a21
    if policy.mode == "exact":
        if det == 0:
            return None
    else:
        scale = max(abs(a11), abs(a12), abs(a21), abs(a22), 1.0)
        if abs(det) <= policy.tol * scale * scale:
            return None
    x = (r1 * a22 - a12 * r2) / det
    y = (a11 * r2 - r1 * a21) / det
    z = a[0] * x + b[0] * y + c[0]
    if policy.mode == "exact":
        return _ExactPoint3(x, y, z)
    return Point3(x, y, z)


@dataclass(frozen=True)
class Site:
    """A weighted point: a disk of radius w, or a cone with offset w."""
    id: int
    x: float
    y: float
    w: float = 1.0


def plane_arrays(surfaces) -> tuple:
    """Coefficient arrays (ids, a, b, c) of a plane list, for vectorized code."""
    import numpy as np
    ids = np.array([s.id for s in surfaces], dtype=np.int64)
    a = np.array([s.body.a for s in surfaces], dtype=float)
    b = np.array([s.body.b for s in surfaces], dtype=float)
    c = np.array([s.body.c for s in surfaces], dtype=float)
    return ids, a, b, c


def lifted_surfaces(points, start_id: int = 0) -> list[Surface]:
    return [Surface(start_id + i, lift_euclidean(Point2(float(x), float(y))))
            for i, (x, y) in enumerate(points)]
