"""Detailed-balance certificates and the product-form stationary law."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from ..dist import FiniteDistribution
from ..errors import CapExceededError, ValidationError
from ..network import ReactionNetwork, transition_map
from .tables import StationaryTable

DB_TOL = 1e-9


@dataclass(frozen=True)
class DetailedBalanceCertificate:
    """Positive ``c`` with ``k_f c^y = k_r c^y'`` for every reversible pair."""

    c: tuple[float, ...]
    max_residual: float

    @property
    def valid(self) -> bool:
        return self.max_residual <= DB_TOL and all(v > 0 for v in self.c)

    @property
    def log_c(self) -> np.ndarray:
        return np.log(np.asarray(self.c))

    def to_dict(self) -> dict:
        return {"c": list(self.c), "max_residual": self.max_residual, "valid": self.valid}


def reversible_pairs(net: ReactionNetwork) -> list[tuple[int, int]] | None:
    """Index pairs ``(forward, reverse)``, or ``None`` if some reaction lacks a reverse."""
    index = {(r.reactant, r.product): i for i, r in enumerate(net.reactions)}
    pairs = []
    for i, r in enumerate(net.reactions):
        j = index.get((r.product, r.reactant))
        if j is None:
            return None
        if i < j:
            pairs.append((i, j))
    return pairs


def certificate_residual(net: ReactionNetwork, c: Sequence[float]) -> float:
    """Worst relative violation of ``k_f c^y = k_r c^y'`` over reversible pairs."""
    pairs = reversible_pairs(net)
    if pairs is None:
        return math.inf
    logc = np.log(np.asarray(c, dtype=np.float64))
    worst = 0.0
    for i, j in pairs:
        f, r = net.reactions[i], net.reactions[j]
        gap = (math.log(f.rate) + float(np.dot(f.reactant, logc))) - (
            math.log(r.rate) + float(np.dot(r.reactant, logc))
        )
        worst = max(worst, abs(math.expm1(gap)))
    return worst


def solve_detailed_balance(net: ReactionNetwork) -> DetailedBalanceCertificate | None:
    """Find a detailed-balance equilibrium ``c`` or return ``None``.

    Solves ``(y' - y) . log c = log(k_f / k_r)`` over all reversible pairs in
    the least-squares sense (minimum-norm, so species fixed by no constraint
    get ``log c = 0``) and accepts the result if every pair balances to
    relative ``1e-9``.
    """
    pairs = reversible_pairs(net)
    if pairs is None:
        return None
    n = net.n_species
    if not pairs:
        return DetailedBalanceCertificate((1.0,) * n, 0.0)
    A = np.array([np.subtract(net.reactions[i].product, net.reactions[i].reactant) for i, _ in pairs],
                 dtype=np.float64)
    rhs = np.array([math.log(net.reactions[i].rate / net.reactions[j].rate) for i, j in pairs])
    logc, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    c = tuple(float(v) for v in np.exp(logc))
    cert = DetailedBalanceCertificate(c, certificate_residual(net, c))
    return cert if cert.valid else None


def _bfs(net: ReactionNetwork, x0, cap: int, allow_truncation: bool):
    x0 = tuple(int(v) for v in x0)
    if len(x0) != net.n_species:
        raise ValidationError("x0 length differs from species count")
    if min(x0, default=0) < 0:
        raise ValidationError("x0 has negative counts")
    if cap < 1:
        raise ValidationError("cap must be >= 1")
    order = [x0]
    seen = {x0}
    queue = deque([x0])
    while queue:
        x = queue.popleft()
        for y in transition_map(net, x):
            if y in seen:
                continue
            if len(seen) >= cap:
                if allow_truncation:
                    return order, True
                raise CapExceededError(
                    f"reachability class exceeds cap={cap} states (likely infinite)", cap
                )
            seen.add(y)
            order.append(y)
            queue.append(y)
    return order, False


def reachability_class(net: ReactionNetwork, x0: Sequence[int], cap: int = 100_000) -> set:
    """All states reachable from ``x0``; raises :class:`CapExceededError` past ``cap``."""
    return set(_bfs(net, x0, cap, False)[0])


def db_stationary(
    net: ReactionNetwork,
    cert: DetailedBalanceCertificate,
    x0: Sequence[int],
    cap: int = 100_000,
    allow_truncation: bool = False,
) -> StationaryTable:
    """Product-form law ``c^x / x!`` normalized over the class of ``x0``.

    With ``allow_truncation`` the first ``cap`` states in BFS order are used
    and renormalized instead of raising on an over-large class.
    """
    if not cert.valid:
        raise ValidationError("certificate is not valid")
    states, truncated = _bfs(net, x0, cap, allow_truncation)
    X = np.array(states, dtype=np.float64)
    logw = X @ cert.log_c - gammaln(X + 1.0).sum(axis=1)
    logM = float(logsumexp(logw))
    probs = np.exp(logw - logM)
    dist = FiniteDistribution.normalized(dict(zip(states, probs)), net.n_species)
    diagnostics = {"log_M": logM, "n_states": len(states), "truncated": truncated}
    M = math.exp(logM) if logM < 700 else math.inf
    return StationaryTable(dist, M, "class", None, diagnostics)
