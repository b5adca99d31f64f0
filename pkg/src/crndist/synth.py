"""Compile target distributions into reaction networks.

Species ``V1..Vd`` are visible and come first; ``H1..Hm`` are hidden index
(or catalyst) species. Support states of a finite target are sorted
lexicographically and ``H_i`` binds to the ``i``-th of them.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from .dist import (
    DistributionSpec,
    FiniteDistribution,
    Mixture,
    PointMass,
    ProductPoisson,
    UniformBox,
    truncate,
)
from .errors import ValidationError
from .network import Reaction, ReactionNetwork

State = tuple[int, ...]


@dataclass
class SynthesisResult:
    net: ReactionNetwork
    method: str
    init: State | None = None
    meta: dict = field(default_factory=dict)

    @property
    def visible(self) -> tuple[int, ...]:
        return self.net.visible

    @property
    def reaction_count(self) -> int:
        return self.net.n_reactions

    def to_dict(self) -> dict:
        doc = self.net.to_dict()
        doc["method"] = self.method
        doc["visible"] = list(self.visible)
        doc["init"] = None if self.init is None else list(self.init)
        doc["meta"] = {"reaction_count": self.reaction_count, **self.meta}
        return doc

    @classmethod
    def from_dict(cls, doc) -> "SynthesisResult":
        net = ReactionNetwork.from_dict(doc)
        meta = dict(doc.get("meta", {}))
        meta.pop("reaction_count", None)
        return cls(net, doc.get("method", "unknown"), net.init, meta)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class ClusterTree:
    support: tuple[State, ...]
    edges: tuple[tuple[int, int], ...]


def _species(d: int, m: int = 0) -> tuple[str, ...]:
    return tuple(f"V{k + 1}" for k in range(d)) + tuple(f"H{k + 1}" for k in range(m))


def _adjacent(u: State, v: State) -> bool:
    diff = [abs(a - b) for a, b in zip(u, v)]
    return sum(diff) == 1


def _check_support(support) -> list[State]:
    support = sorted({tuple(int(v) for v in x) for x in support})
    if not support:
        raise ValidationError("support is empty")
    if len({len(x) for x in support}) != 1:
        raise ValidationError("support states have mixed dimensions")
    return support


def _neighbours(x: State):
    for k in range(len(x)):
        for step in (1, -1):
            y = list(x)
            y[k] += step
            if y[k] >= 0:
                yield tuple(y)


def check_cluster(support: Sequence[Sequence[int]]) -> bool:
    """True iff the support is connected under unit steps along one axis."""
    states = _check_support(support)
    members = set(states)
    seen = {states[0]}
    queue = deque([states[0]])
    while queue:
        x = queue.popleft()
        for y in _neighbours(x):
            if y in members and y not in seen:
                seen.add(y)
                queue.append(y)
    return len(seen) == len(members)


def build_spanning_tree(support: Sequence[Sequence[int]]) -> ClusterTree:
    """BFS spanning tree rooted at the lexicographically smallest state.

    Neighbours are expanded axis by axis, ``+1`` before ``-1``.
    """
    states = _check_support(support)
    if not check_cluster(states):
        raise ValidationError("support is not a cluster")
    index = {x: i for i, x in enumerate(states)}
    seen = {states[0]}
    queue = deque([states[0]])
    edges = []
    while queue:
        x = queue.popleft()
        for y in _neighbours(x):
            if y in index and y not in seen:
                seen.add(y)
                queue.append(y)
                edges.append((index[x], index[y]))
    return ClusterTree(tuple(states), tuple(edges))


def _finite_parts(q: FiniteDistribution):
    if not isinstance(q, FiniteDistribution):
        raise ValidationError("construction requires a finite distribution; truncate first")
    support = q.support
    if not support:
        raise ValidationError("distribution has empty support")
    return support, [q.mass[x] for x in support]


def _init_state(support, d, m) -> State:
    return tuple(support[0]) + tuple(1 if k == 0 else 0 for k in range(m))


def _indexed(d: int, m: int, i: int, v: Sequence[int]) -> tuple[int, ...]:
    h = [0] * m
    h[i] = 1
    return tuple(v) + tuple(h)


def synth_full(q: FiniteDistribution) -> SynthesisResult:
    """Fully connected indexed network (detailed balanced, exact for ``q``)."""
    support, probs = _finite_parts(q)
    d, m = q.dim, len(support)
    rxns = []
    for i in range(m):
        for j in range(m):
            if i != j:
                rate = math.prod(math.factorial(v) for v in support[j]) * probs[j]
                rxns.append(Reaction(_indexed(d, m, i, support[i]), _indexed(d, m, j, support[j]), rate))
    init = _init_state(support, d, m)
    net = ReactionNetwork(_species(d, m), rxns, d, init)
    return SynthesisResult(net, "full", init)


def _edge_pair(d, m, support, probs, i, j) -> list[Reaction]:
    """Reversible pair for adjacent states; orients so ``x_i - x_j = e_k``."""
    if sum(support[i]) < sum(support[j]):
        i, j = j, i
    k = next(n for n in range(d) if support[i][n] != support[j][n])
    ek = tuple(1 if n == k else 0 for n in range(d))
    hi = _indexed(d, m, i, [0] * d)
    hj = _indexed(d, m, j, [0] * d)
    left = tuple(a + b for a, b in zip(hi, ek + (0,) * m))
    return [
        Reaction(left, hj, probs[j]),
        Reaction(hj, left, support[i][k] * probs[i]),
    ]


def synth_bimolecular(q: FiniteDistribution) -> SynthesisResult:
    """``H_i + V_k <-> H_j`` for every adjacent support pair."""
    support, probs = _finite_parts(q)
    if not check_cluster(support):
        raise ValidationError("support is not a cluster")
    d, m = q.dim, len(support)
    rxns = []
    for i in range(m):
        for j in range(i + 1, m):
            if _adjacent(support[i], support[j]):
                rxns.extend(_edge_pair(d, m, support, probs, i, j))
    init = _init_state(support, d, m)
    return SynthesisResult(ReactionNetwork(_species(d, m), rxns, d, init), "bimol", init)


def synth_spanning_tree(q: FiniteDistribution, tree: ClusterTree | None = None) -> SynthesisResult:
    """Like :func:`synth_bimolecular` but only along spanning-tree edges."""
    support, probs = _finite_parts(q)
    if not check_cluster(support):
        raise ValidationError("support is not a cluster")
    if tree is None:
        tree = build_spanning_tree(support)
    if sorted(tree.support) != support:
        raise ValidationError("spanning tree does not span the support")
    index = {x: n for n, x in enumerate(support)}
    d, m = q.dim, len(support)
    rxns = []
    for a, b in tree.edges:
        u, v = tree.support[a], tree.support[b]
        if not _adjacent(u, v):
            raise ValidationError(f"tree edge {u}-{v} joins non-adjacent states")
        rxns.extend(_edge_pair(d, m, support, probs, index[u], index[v]))
    if len(rxns) != 2 * (m - 1):
        raise ValidationError("tree edge count differs from |support| - 1")
    init = _init_state(support, d, m)
    return SynthesisResult(ReactionNetwork(_species(d, m), rxns, d, init), "spantree", init)


def _unit(d: int, i: int, n: int = 1) -> tuple[int, ...]:
    return tuple(n if k == i else 0 for k in range(d))


def _check_eps(eps: float, name: str = "eps"):
    if not 0 < eps < 2:
        raise ValidationError(f"{name} must lie in (0, 2), got {eps!r}")


def synth_point_mass(x: Sequence[int], eps: float) -> SynthesisResult:
    """Robust network whose limit law is within ``eps`` of ``delta_x``."""
    x = tuple(int(v) for v in x)
    if not x or min(x) < 0:
        raise ValidationError("x must be a non-negative state")
    _check_eps(eps)
    d = len(x)
    zero = (0,) * d
    rxns = [Reaction(zero, _unit(d, i), 1.0) for i in range(d) if x[i] != 0]
    rxns += [Reaction(_unit(d, i, x[i] + 1), _unit(d, i, x[i]), 2 * d / eps) for i in range(d)]
    rxns += [Reaction(_unit(d, i, 2), zero, 1.0) for i in range(d) if x[i] == 0]
    return SynthesisResult(ReactionNetwork(_species(d), rxns, d), "pointmass", meta={"epsilon": eps})


def synth_point_mass_mix(q: FiniteDistribution, delta: float) -> SynthesisResult:
    """Catalytic mixture of point-mass networks, one catalyst per support state."""
    support, probs = _finite_parts(q)
    if not delta > 0:
        raise ValidationError("delta must be positive")
    d, m = q.dim, len(support)
    n = d + m
    zero = (0,) * n

    def vec(h: int, v: Sequence[int]) -> tuple[int, ...]:
        return tuple(v) + tuple(1 if k == h else 0 for k in range(m))

    rxns = []
    for i in range(m):
        rxns.append(Reaction(zero, vec(i, (0,) * d), delta**2 * probs[i]))
        rxns.append(Reaction(vec(i, (0,) * d), zero, delta))
    for i, x in enumerate(support):
        for j in range(d):
            if x[j] != 0:
                rxns.append(Reaction(vec(i, (0,) * d), vec(i, _unit(d, j)), 1.0))
            rxns.append(Reaction(vec(i, _unit(d, j, x[j] + 1)), vec(i, _unit(d, j, x[j])), 2 * d / delta))
            if x[j] == 0:
                rxns.append(Reaction(vec(i, _unit(d, j, 2)), vec(i, (0,) * d), 1.0))
    return SynthesisResult(ReactionNetwork(_species(d, m), rxns, d), "pmmix", meta={"delta": delta})


def synth_multidim_unif(
    a: Sequence[int],
    b: Sequence[int],
    delta: float,
    kappa: Sequence[Sequence[float]] | None = None,
) -> SynthesisResult:
    """Robust network approximating the uniform law on the box ``[a, b]``.

    ``kappa`` optionally supplies per-coordinate ``(k1, k2, k3)`` for
    production, box-reset and pair-annihilation; default ``(1, 2d/delta, 1)``.
    """
    a = tuple(int(v) for v in a)
    b = tuple(int(v) for v in b)
    if len(a) != len(b) or not a or min(a) < 0 or any(lo > hi for lo, hi in zip(a, b)):
        raise ValidationError("uniform box requires 0 <= a <= b of equal length")
    d = len(a)
    if kappa is None:
        if not delta > 0:
            raise ValidationError("delta must be positive")
        kappa = [(1.0, 2 * d / delta, 1.0)] * d
    else:
        kappa = [tuple(float(k) for k in row) for row in kappa]
        if len(kappa) != d or any(len(row) != 3 or min(row) <= 0 for row in kappa):
            raise ValidationError("kappa must give three positive rates per coordinate")
        for i, (k1, k2, _) in enumerate(kappa):
            r = b[i] - a[i] + 1
            if b[i] >= 1 and not k2 * r * math.factorial(b[i] + 1) > k1:
                raise ValidationError(f"coordinate {i}: need k2 * r * (b+1)! > k1")
    zero = (0,) * d
    rxns = [Reaction(zero, _unit(d, i), kappa[i][0]) for i in range(d) if b[i] != 0]
    rxns += [Reaction(_unit(d, i, b[i] + 1), _unit(d, i, a[i]), kappa[i][1]) for i in range(d)]
    rxns += [Reaction(_unit(d, i, 2), zero, kappa[i][2]) for i in range(d) if b[i] == 0]
    meta = {"delta": delta} if delta is not None else {}
    return SynthesisResult(ReactionNetwork(_species(d), rxns, d), "unif", meta=meta)


def synth_prod_pois(c: Sequence[float]) -> SynthesisResult:
    """Network with product-form Poisson limit law of means ``c``."""
    c = tuple(float(v) for v in c)
    if not c or any(not (v > 0 and math.isfinite(v)) for v in c):
        raise ValidationError("Poisson means must be positive and finite")
    d = len(c)
    zero = (0,) * d
    rxns = [Reaction(zero, _unit(d, i), c[i] ** 2) for i in range(d)]
    rxns += [Reaction(_unit(d, i), _unit(d, i, 2), c[i]) for i in range(d)]
    rxns += [Reaction(_unit(d, i, 2), zero, 1.0) for i in range(d)]
    return SynthesisResult(ReactionNetwork(_species(d), rxns, d), "poisson")


def synth_mix(
    components: Sequence[ReactionNetwork],
    weights: Sequence[float],
    delta: float,
) -> SynthesisResult:
    """Lift each component under its own catalyst ``H_i`` produced at ``delta^2 w_i``."""
    components = [c.net if isinstance(c, SynthesisResult) else c for c in components]
    if not components:
        raise ValidationError("need at least one component network")
    species = components[0].species
    if any(c.species != species for c in components):
        raise ValidationError("components must share the same ordered species list")
    weights = [float(w) for w in weights]
    if len(weights) != len(components) or any(not w > 0 for w in weights):
        raise ValidationError("need one positive weight per component")
    if abs(math.fsum(weights) - 1.0) > 1e-9:
        raise ValidationError("weights must sum to 1")
    if not delta > 0:
        raise ValidationError("delta must be positive")
    d, m = len(species), len(components)
    hidden = tuple(f"H{k + 1}" for k in range(m))
    if set(hidden) & set(species):
        raise ValidationError("component species clash with catalyst names H1..Hm")
    zero = (0,) * (d + m)

    def lift(i, stoich):
        return tuple(stoich) + tuple(1 if k == i else 0 for k in range(m))

    rxns = []
    for i, w in enumerate(weights):
        rxns.append(Reaction(zero, lift(i, (0,) * d), delta**2 * w))
        rxns.append(Reaction(lift(i, (0,) * d), zero, delta))
    for i, comp in enumerate(components):
        for rxn in comp.reactions:
            rxns.append(Reaction(lift(i, rxn.reactant), lift(i, rxn.product), rxn.rate))
    net = ReactionNetwork(species + hidden, rxns, d)
    return SynthesisResult(net, "mix", meta={"delta": delta})


def component_network(spec: DistributionSpec, delta: float) -> ReactionNetwork:
    """Stock robust network for a point mass, uniform box or Poisson target."""
    if isinstance(spec, FiniteDistribution) and len(spec) == 1:
        spec = PointMass(spec.support[0])
    if isinstance(spec, PointMass):
        return synth_point_mass(spec.x, delta).net
    if isinstance(spec, UniformBox):
        return synth_multidim_unif(spec.a, spec.b, delta).net
    if isinstance(spec, ProductPoisson):
        return synth_prod_pois(spec.c).net
    raise ValidationError(f"no stock network for distribution kind {spec.kind!r}")


def synth_mixture_spec(spec: Mixture, delta: float) -> SynthesisResult:
    """Mix network for a mixture of point masses, uniform boxes and Poissons."""
    comps = [component_network(c, delta) for c in spec.components]
    return synth_mix(comps, spec.weights, delta)


def default_delta(eps: float, m: int, d: int) -> float:
    return eps / (4 * m * d)


def compile_auto(
    q: DistributionSpec,
    eps: float,
    route: str = "robust",
    delta: float | None = None,
) -> SynthesisResult:
    """Truncate ``q`` and build a network approximating it within ``eps``.

    ``route="detailed_balanced"`` uses the fully connected network (exact for
    the truncation). ``route="robust"`` spends ``eps/2`` on truncation and
    builds a point-mass mixing network; the network half of the budget is
    only guaranteed for small enough ``delta`` (see
    :func:`crndist.sim.tune_delta` for a halving search).
    """
    _check_eps(eps)
    if route in ("detailed_balanced", "db"):
        qt = truncate(q, eps)
        res = synth_full(qt)
        res.method = "auto:detailed_balanced"
        res.meta.update({"epsilon": eps, "truncation_epsilon": eps})
        return res
    if route != "robust":
        raise ValidationError(f"unknown route {route!r}")
    qt = truncate(q, eps / 2)
    if delta is None:
        delta = default_delta(eps, len(qt), qt.dim)
    res = synth_point_mass_mix(qt, delta)
    res.method = "auto:robust"
    res.meta.update(
        {"epsilon": eps, "truncation_epsilon": eps / 2, "network_epsilon": eps / 2, "delta": delta}
    )
    return res
