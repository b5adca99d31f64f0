"""Distributions on the non-negative integer lattice.

:class:`FiniteDistribution` is a sparse probability table. The analytic
families (:class:`PointMass`, :class:`UniformBox`, :class:`ProductPoisson`,
:class:`Mixture`) share its small interface: ``dim``, ``pmf(x)``,
``to_dict()`` and ``enumerate(tol)``, which lists states covering all but
``tol`` of the mass.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .errors import ValidationError

MASS_TOL = 1e-9
ZERO_CUTOFF = 1e-15

State = tuple[int, ...]


def _as_state(x, dim=None) -> State:
    s = tuple(int(v) for v in x)
    if dim is not None and len(s) != dim:
        raise ValidationError(f"state {s} has length {len(s)}, expected {dim}")
    return s


class FiniteDistribution:
    """Finite-support probability mass function stored as ``{state: p}``."""

    kind = "finite"

    def __init__(self, mass: Mapping[Sequence[int], float] | Iterable, dim: int | None = None):
        items = mass.items() if isinstance(mass, Mapping) else mass
        table: dict[State, float] = {}
        for x, p in items:
            x = _as_state(x)
            p = float(p)
            if not math.isfinite(p) or p < 0:
                raise ValidationError(f"invalid probability {p!r} at {x}")
            if min(x, default=0) < 0:
                raise ValidationError(f"negative state {x}")
            table[x] = table.get(x, 0.0) + p
        if dim is None:
            if not table:
                raise ValidationError("empty distribution needs an explicit dim")
            dim = len(next(iter(table)))
        if dim < 1:
            raise ValidationError("dim must be >= 1")
        for x in table:
            if len(x) != dim:
                raise ValidationError(f"state {x} does not have dimension {dim}")
        table = {x: p for x, p in table.items() if p >= ZERO_CUTOFF}
        total = math.fsum(table.values())
        if abs(total - 1.0) > MASS_TOL:
            raise ValidationError(f"total mass {total!r} differs from 1")
        self.dim = dim
        self.mass = dict(sorted(table.items()))

    @classmethod
    def normalized(cls, weights: Mapping[Sequence[int], float], dim=None) -> "FiniteDistribution":
        """Build from non-negative weights, dividing by their sum."""
        total = math.fsum(float(w) for w in weights.values())
        if total <= 0:
            raise ValidationError("weights sum to zero")
        return cls({x: float(w) / total for x, w in weights.items()}, dim)

    def pmf(self, x) -> float:
        return self.mass.get(_as_state(x, self.dim), 0.0)

    @property
    def support(self) -> list[State]:
        return list(self.mass)

    def __len__(self) -> int:
        return len(self.mass)

    def __iter__(self):
        return iter(self.mass.items())

    def __eq__(self, other):
        if not isinstance(other, FiniteDistribution):
            return NotImplemented
        return self.dim == other.dim and self.mass == other.mass

    def __repr__(self):
        return f"FiniteDistribution(dim={self.dim}, mass={self.mass!r})"

    def enumerate(self, tol: float = 0.0):
        return list(self.mass), np.array(list(self.mass.values()))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "kind": "finite",
            "mass": [{"state": list(x), "p": p} for x, p in self.mass.items()],
        }


@dataclass(frozen=True)
class PointMass:
    x: State
    kind = "point_mass"

    def __post_init__(self):
        object.__setattr__(self, "x", _as_state(self.x))
        if not self.x or min(self.x) < 0:
            raise ValidationError("point mass location must be a non-negative state")

    @property
    def dim(self) -> int:
        return len(self.x)

    def pmf(self, x) -> float:
        return 1.0 if _as_state(x, self.dim) == self.x else 0.0

    def enumerate(self, tol: float = 0.0):
        return [self.x], np.array([1.0])

    def to_dict(self) -> dict:
        return {"dim": self.dim, "kind": self.kind, "x": list(self.x)}


@dataclass(frozen=True)
class UniformBox:
    """Uniform law on the integer box ``[a, b]``."""

    a: State
    b: State
    kind = "uniform_box"

    def __post_init__(self):
        object.__setattr__(self, "a", _as_state(self.a))
        object.__setattr__(self, "b", _as_state(self.b))
        if len(self.a) != len(self.b) or not self.a:
            raise ValidationError("a and b must be states of equal, non-zero length")
        if min(self.a) < 0 or any(lo > hi for lo, hi in zip(self.a, self.b)):
            raise ValidationError("uniform box requires 0 <= a <= b")

    @property
    def dim(self) -> int:
        return len(self.a)

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(hi - lo + 1 for lo, hi in zip(self.a, self.b))

    def pmf(self, x) -> float:
        x = _as_state(x, self.dim)
        if all(lo <= v <= hi for v, lo, hi in zip(x, self.a, self.b)):
            return 1.0 / math.prod(self.widths)
        return 0.0

    def enumerate(self, tol: float = 0.0):
        states = list(itertools.product(*(range(lo, hi + 1) for lo, hi in zip(self.a, self.b))))
        return states, np.full(len(states), 1.0 / len(states))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "kind": self.kind, "a": list(self.a), "b": list(self.b)}


@dataclass(frozen=True)
class ProductPoisson:
    """Independent Poisson coordinates with means ``c``."""

    c: tuple[float, ...]
    kind = "product_poisson"

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))
        if not self.c or any(not (v > 0 and math.isfinite(v)) for v in self.c):
            raise ValidationError("Poisson means must be positive and finite")

    @property
    def dim(self) -> int:
        return len(self.c)

    def pmf(self, x) -> float:
        x = _as_state(x, self.dim)
        if min(x) < 0:
            return 0.0
        return math.prod(float(stats.poisson.pmf(v, c)) for v, c in zip(x, self.c))

    def enumerate(self, tol: float = 0.0):
        """States of a box ``[0, ceil(c) + K]`` whose outside mass is below ``tol``."""
        tol = max(tol, 1e-300)
        k = 1
        while True:
            tops = [math.ceil(c) + k for c in self.c]
            inside = math.prod(1.0 - float(stats.poisson.sf(t, c)) for t, c in zip(tops, self.c))
            if 1.0 - inside < tol or k > 10_000:
                break
            k *= 2
        axes = [np.arange(t + 1) for t in tops]
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        probs = np.ones(len(pts))
        for i, c in enumerate(self.c):
            probs *= stats.poisson.pmf(pts[:, i], c)
        return [tuple(int(v) for v in row) for row in pts], probs

    def to_dict(self) -> dict:
        return {"dim": self.dim, "kind": self.kind, "c": list(self.c)}


@dataclass(frozen=True)
class Mixture:
    weights: tuple[float, ...]
    components: tuple
    kind = "mixture"

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components or len(self.weights) != len(self.components):
            raise ValidationError("mixture needs one weight per component")
        if any(not w > 0 for w in self.weights):
            raise ValidationError("mixture weights must be positive")
        if abs(math.fsum(self.weights) - 1.0) > MASS_TOL:
            raise ValidationError("mixture weights must sum to 1")
        if len({c.dim for c in self.components}) != 1:
            raise ValidationError("mixture components must share a dimension")

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def pmf(self, x) -> float:
        x = _as_state(x, self.dim)
        return math.fsum(w * comp.pmf(x) for w, comp in zip(self.weights, self.components))

    def enumerate(self, tol: float = 0.0):
        states: set[State] = set()
        for comp in self.components:
            states.update(comp.enumerate(tol)[0])
        states = sorted(states)
        return states, np.array([self.pmf(x) for x in states])

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "kind": self.kind,
            "weights": list(self.weights),
            "components": [c.to_dict() for c in self.components],
        }


DistributionSpec = FiniteDistribution | PointMass | UniformBox | ProductPoisson | Mixture


def spec_from_dict(doc: Mapping) -> DistributionSpec:
    """Parse a distribution document (see :meth:`to_dict` of each kind)."""
    try:
        kind = doc["kind"]
        if kind == "finite":
            return FiniteDistribution(((e["state"], e["p"]) for e in doc["mass"]), doc.get("dim"))
        if kind == "point_mass":
            spec = PointMass(doc["x"])
        elif kind == "uniform_box":
            spec = UniformBox(doc["a"], doc["b"])
        elif kind == "product_poisson":
            spec = ProductPoisson(doc["c"])
        elif kind == "mixture":
            spec = Mixture(doc["weights"], [spec_from_dict(c) for c in doc["components"]])
        else:
            raise ValidationError(f"unknown distribution kind {kind!r}")
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed distribution document: {exc}") from exc
    if "dim" in doc and doc["dim"] != spec.dim:
        raise ValidationError(f"declared dim {doc['dim']} != actual {spec.dim}")
    return spec


def spec_dumps(spec: DistributionSpec) -> str:
    return json.dumps(spec.to_dict(), indent=2)


def spec_loads(text: str) -> DistributionSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON: {exc}") from exc
    return spec_from_dict(doc)


def pmf(spec: DistributionSpec, x) -> float:
    return spec.pmf(x)


def truncate(q: DistributionSpec, eps: float) -> FiniteDistribution:
    """Finite-support approximation with ``||q - q'||_inf < eps``.

    States are ranked by descending probability (ties broken
    lexicographically); the shortest prefix with mass above ``1 - eps`` is
    kept and all remaining mass is lumped onto its last state.
    """
    if not eps > 0:
        raise ValidationError("eps must be positive")
    if eps >= 2:
        raise ValidationError("eps >= 2 is vacuous: every pair of distributions is within 2")
    states, probs = q.enumerate(eps / 10)
    probs = np.asarray(probs, dtype=np.float64)
    order = sorted(range(len(states)), key=lambda i: (-probs[i], states[i]))
    ranked = [states[i] for i in order]
    ranked_p = [float(probs[i]) for i in order]
    acc = 0.0
    m = len(ranked)
    for i, p in enumerate(ranked_p):
        acc += p
        if acc > 1.0 - eps:
            m = i + 1
            break
    if isinstance(q, FiniteDistribution) and m == len(q):
        return q
    kept = {x: p for x, p in zip(ranked[: m - 1], ranked_p[: m - 1])}
    kept[ranked[m - 1]] = 1.0 - math.fsum(ranked_p[: m - 1])
    return FiniteDistribution(kept, q.dim)


def inf_norm_distance(p: FiniteDistribution, q: FiniteDistribution) -> float:
    """Sup-norm distance between two finite distributions."""
    if p.dim != q.dim:
        raise ValidationError(f"dimension mismatch: {p.dim} vs {q.dim}")
    keys = set(p.mass) | set(q.mass)
    return max((abs(p.mass.get(x, 0.0) - q.mass.get(x, 0.0)) for x in keys), default=0.0)


def distance_to_spec(p: FiniteDistribution, spec: DistributionSpec, tol: float = 1e-15) -> float:
    """Sup-norm distance from a finite table to any distribution kind.

    States outside ``p``'s support contribute ``spec.pmf``; those are found
    by enumerating ``spec`` down to outside mass ``tol``.
    """
    if isinstance(spec, FiniteDistribution):
        return inf_norm_distance(p, spec)
    if p.dim != spec.dim:
        raise ValidationError(f"dimension mismatch: {p.dim} vs {spec.dim}")
    best = max((abs(v - spec.pmf(x)) for x, v in p.mass.items()), default=0.0)
    states, probs = spec.enumerate(tol)
    for x, v in zip(states, probs):
        if x not in p.mass and v > best:
            best = float(v)
    return best


def marginalize(pi: FiniteDistribution, visible: Sequence[int]) -> FiniteDistribution:
    """Sum out every coordinate not listed in ``visible``."""
    visible = tuple(int(i) for i in visible)
    if not visible:
        raise ValidationError("visible index set is empty")
    if len(set(visible)) != len(visible) or not all(0 <= i < pi.dim for i in visible):
        raise ValidationError(f"invalid visible indices {visible} for dim {pi.dim}")
    idx = tuple(sorted(visible))
    acc: dict[State, list[float]] = {}
    for x, p in pi.mass.items():
        acc.setdefault(tuple(x[i] for i in idx), []).append(p)
    return FiniteDistribution({x: math.fsum(ps) for x, ps in acc.items()}, len(idx))
