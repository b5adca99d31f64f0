"""Reaction networks under stochastic mass-action kinetics.

A network is a list of species (fixing the coordinate order of state vectors)
and a list of reactions ``y -> y'`` with positive rate constants. The CTMC
jumps from ``x`` to ``x + y' - y`` with propensity
``rate * prod_i x_i! / (x_i - y_i)!`` whenever ``x >= y``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ValidationError

# Falling-factorial products above this switch to log-space accumulation.
LOG_SWITCH = 1e300


def falling_factorial(n: int, k: int) -> float:
    """Return ``n! / (n - k)!`` as a float, or 0 when ``n < k``."""
    if n < k:
        return 0.0
    p = 1.0
    lp = 0.0
    logmode = False
    for j in range(k):
        f = float(n - j)
        if logmode:
            lp += math.log(f)
        else:
            p *= f
            if p > LOG_SWITCH:
                logmode = True
                lp = math.log(p)
    return math.exp(lp) if logmode else p


def log_falling_factorial(n: int, k: int) -> float:
    """Natural log of ``n! / (n - k)!``; ``-inf`` when ``n < k``."""
    if n < k:
        return -math.inf
    return math.fsum(math.log(n - j) for j in range(k))


@dataclass(frozen=True)
class Reaction:
    """A single reaction ``reactant -> product`` with mass-action rate."""

    reactant: tuple[int, ...]
    product: tuple[int, ...]
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "reactant", tuple(int(v) for v in self.reactant))
        object.__setattr__(self, "product", tuple(int(v) for v in self.product))
        object.__setattr__(self, "rate", float(self.rate))

    @property
    def change(self) -> tuple[int, ...]:
        return tuple(b - a for a, b in zip(self.reactant, self.product))

    @property
    def molecularity(self) -> int:
        return max(sum(self.reactant), sum(self.product))

    def reversed(self, rate: float) -> "Reaction":
        return Reaction(self.product, self.reactant, rate)


def _complex_str(stoich: Sequence[int], species: Sequence[str]) -> str:
    terms = []
    for n, name in zip(stoich, species):
        if n == 1:
            terms.append(name)
        elif n > 1:
            terms.append(f"{n}{name}")
    return " + ".join(terms) if terms else "0"


@dataclass(frozen=True)
class ReactionNetwork:
    """Species list, ordered reactions, visible prefix size and optional init.

    Construction only normalizes types; call :func:`validate_network` for
    invariant checking so that malformed networks can still be inspected.
    """

    species: tuple[str, ...]
    reactions: tuple[Reaction, ...] = ()
    visible_count: int = 1
    init: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "species", tuple(str(s) for s in self.species))
        object.__setattr__(self, "reactions", tuple(self.reactions))
        object.__setattr__(self, "visible_count", int(self.visible_count))
        if self.init is not None:
            object.__setattr__(self, "init", tuple(int(v) for v in self.init))

    @classmethod
    def from_mappings(
        cls,
        species: Sequence[str],
        reactions: Iterable[tuple[Mapping[str, int], Mapping[str, int], float]],
        visible_count: int | None = None,
        init: Sequence[int] | None = None,
    ) -> "ReactionNetwork":
        """Build a network from ``(reactants, products, rate)`` name mappings."""
        species = tuple(species)
        index = {name: i for i, name in enumerate(species)}

        def vec(mapping):
            v = [0] * len(species)
            for name, count in mapping.items():
                if name not in index:
                    raise ValidationError(f"unknown species {name!r}")
                v[index[name]] += int(count)
            return tuple(v)

        rxns = tuple(Reaction(vec(r), vec(p), k) for r, p, k in reactions)
        return cls(
            species,
            rxns,
            len(species) if visible_count is None else visible_count,
            None if init is None else tuple(init),
        )

    @property
    def n_species(self) -> int:
        return len(self.species)

    @property
    def n_reactions(self) -> int:
        return len(self.reactions)

    @property
    def visible(self) -> tuple[int, ...]:
        return tuple(range(self.visible_count))

    @cached_property
    def reactant_matrix(self) -> np.ndarray:
        m = np.zeros((self.n_reactions, self.n_species), dtype=np.int64)
        for r, rxn in enumerate(self.reactions):
            m[r] = rxn.reactant
        return m

    @cached_property
    def change_matrix(self) -> np.ndarray:
        m = np.zeros((self.n_reactions, self.n_species), dtype=np.int64)
        for r, rxn in enumerate(self.reactions):
            m[r] = rxn.change
        return m

    @cached_property
    def rates(self) -> np.ndarray:
        return np.array([rxn.rate for rxn in self.reactions], dtype=np.float64)

    @property
    def max_molecularity(self) -> int:
        return max((rxn.molecularity for rxn in self.reactions), default=0)

    def with_init(self, init: Sequence[int] | None) -> "ReactionNetwork":
        return ReactionNetwork(self.species, self.reactions, self.visible_count, init)

    def reaction_str(self, index: int) -> str:
        rxn = self.reactions[index]
        return (
            f"{_complex_str(rxn.reactant, self.species)} -> "
            f"{_complex_str(rxn.product, self.species)}  ({rxn.rate!r})"
        )

    def __str__(self) -> str:
        return "\n".join(self.reaction_str(i) for i in range(self.n_reactions))

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        def mapping(stoich):
            return {name: n for name, n in zip(self.species, stoich) if n}

        return {
            "species": list(self.species),
            "visible": self.visible_count,
            "init": None if self.init is None else list(self.init),
            "reactions": [
                {
                    "reactants": mapping(rxn.reactant),
                    "products": mapping(rxn.product),
                    "rate": rxn.rate,
                }
                for rxn in self.reactions
            ],
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ReactionNetwork":
        try:
            species = doc["species"]
            visible = doc.get("visible", len(species))
            if isinstance(visible, (list, tuple)):
                if list(visible) != list(range(len(visible))):
                    raise ValidationError("visible species must be the leading species")
                visible = len(visible)
            rxns = [(r.get("reactants", {}), r.get("products", {}), r["rate"]) for r in doc["reactions"]]
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValidationError(f"malformed network document: {exc}") from exc
        return cls.from_mappings(species, rxns, visible, doc.get("init"))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def loads(cls, text: str) -> "ReactionNetwork":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed JSON: {exc}") from exc
        return cls.from_dict(doc)


@dataclass
class ValidationReport:
    violations: list[tuple[int | None, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_network(net: ReactionNetwork) -> ValidationReport:
    """Check every network invariant; violations are reported, not raised.

    Each violation is ``(reaction_index, message)``; network-level problems
    carry index ``None``.
    """
    report = ValidationReport()
    add = report.violations.append
    n = net.n_species
    if len(set(net.species)) != n:
        add((None, "species names are not unique"))
    if any(not s for s in net.species):
        add((None, "empty species name"))
    if not 0 <= net.visible_count <= n or (n > 0 and net.visible_count < 1):
        add((None, f"visible_count {net.visible_count} outside [1, {n}]"))
    if net.init is not None:
        if len(net.init) != n:
            add((None, "init length differs from species count"))
        elif min(net.init, default=0) < 0:
            add((None, "init has negative counts"))
    seen = {}
    for i, rxn in enumerate(net.reactions):
        if len(rxn.reactant) != n or len(rxn.product) != n:
            add((i, "complex length differs from species count"))
            continue
        if min(rxn.reactant + rxn.product, default=0) < 0:
            add((i, "negative stoichiometric coefficient"))
        if rxn.reactant == rxn.product:
            add((i, "reactant equals product"))
        if not (rxn.rate > 0 and math.isfinite(rxn.rate)):
            add((i, f"rate {rxn.rate!r} is not positive and finite"))
        key = (rxn.reactant, rxn.product)
        if key in seen:
            add((i, f"duplicate of reaction {seen[key]}"))
        else:
            seen[key] = i
    return report


def _check_state(net: ReactionNetwork, x) -> tuple[int, ...]:
    x = tuple(int(v) for v in x)
    if len(x) != net.n_species:
        raise ValidationError(f"state length {len(x)} != species count {net.n_species}")
    return x


def propensity(net: ReactionNetwork, reaction_index: int, x: Sequence[int]) -> float:
    """Mass-action propensity of one reaction at state ``x``."""
    if not 0 <= reaction_index < net.n_reactions:
        raise IndexError(f"reaction index {reaction_index} out of range")
    x = _check_state(net, x)
    rxn = net.reactions[reaction_index]
    logmode = False
    p = 1.0
    lp = 0.0
    for xs, y in zip(x, rxn.reactant):
        if xs < y:
            return 0.0
        for j in range(y):
            f = float(xs - j)
            if logmode:
                lp += math.log(f)
            else:
                p *= f
                if p > LOG_SWITCH:
                    logmode = True
                    lp = math.log(p)
    if logmode:
        return math.exp(math.log(rxn.rate) + lp)
    return rxn.rate * p


def propensities_at(net: ReactionNetwork, states: np.ndarray) -> np.ndarray:
    """Vectorized propensities for many states; returns shape ``(N, R)``.

    Intended for moderate counts (no log-space fallback).
    """
    states = np.asarray(states, dtype=np.int64)
    if states.ndim == 1:
        states = states[None, :]
    out = np.empty((states.shape[0], net.n_reactions), dtype=np.float64)
    for r, rxn in enumerate(net.reactions):
        a = np.full(states.shape[0], rxn.rate)
        for s, y in enumerate(rxn.reactant):
            for j in range(y):
                a *= np.maximum(states[:, s] - j, 0)
        out[:, r] = a
    return out


def transition_map(net: ReactionNetwork, x: Sequence[int]) -> dict[tuple[int, ...], float]:
    """Outgoing CTMC rates from ``x``, summed per target state."""
    x = _check_state(net, x)
    out: dict[tuple[int, ...], float] = {}
    for r, rxn in enumerate(net.reactions):
        if rxn.reactant == rxn.product:
            continue
        a = propensity(net, r, x)
        if a <= 0.0:
            continue
        target = tuple(xi + ci for xi, ci in zip(x, rxn.change))
        out[target] = out.get(target, 0.0) + a
    return out
