"""Truncated-generator oracle for stationary laws.

The CTMC is restricted to a box ``[0, box]``; transitions leaving the box are
deleted (not reflected) and their rate, weighted by the computed law, is
reported as ``boundary_outflow`` so truncation error stays visible.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse import csgraph
from scipy.sparse.linalg import spsolve

from ..dist import FiniteDistribution
from ..errors import BoxTooLargeError, NumericalError, ReducibleTruncationError, ValidationError
from ..network import ReactionNetwork, propensities_at
from .tables import StationaryTable

MAX_BOX_STATES = 500_000
DENSE_LIMIT = 2_000
RESIDUAL_TOL = 1e-12


def _box_states(box):
    axes = [np.arange(b + 1, dtype=np.int64) for b in box]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def truncated_generator(net: ReactionNetwork, box: Sequence[int]):
    """Return ``(states, Q, deleted)`` for the box-restricted chain.

    ``Q`` is a CSR generator (rows sum to zero) and ``deleted[i]`` the total
    rate of transitions from state ``i`` that would leave the box.
    """
    box = np.asarray([int(b) for b in box], dtype=np.int64)
    if box.shape != (net.n_species,) or (box < 0).any():
        raise ValidationError("box must give one non-negative bound per species")
    volume = int(np.prod(box + 1, dtype=object))
    if volume > MAX_BOX_STATES:
        raise BoxTooLargeError(f"box holds {volume} states (limit {MAX_BOX_STATES})")
    states = _box_states(box)
    n = len(states)
    strides = np.ones(net.n_species, dtype=np.int64)
    for k in range(net.n_species - 2, -1, -1):
        strides[k] = strides[k + 1] * (box[k + 1] + 1)
    props = propensities_at(net, states)
    rows, cols, vals = [], [], []
    deleted = np.zeros(n)
    src = np.arange(n)
    for r in range(net.n_reactions):
        change = net.change_matrix[r]
        if not change.any():
            continue
        a = props[:, r]
        live = a > 0
        target = states + change
        inside = live & np.all((target >= 0) & (target <= box), axis=1)
        out = live & ~inside
        deleted[out] += a[out]
        rows.append(src[inside])
        cols.append(target[inside] @ strides)
        vals.append(a[inside])
    if rows:
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0)
    off = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    exit_rates = np.asarray(off.sum(axis=1)).ravel()
    Q = (off - sp.diags(exit_rates)).tocsr()
    return states, Q, deleted, strides


def closed_classes(adjacency: sp.csr_matrix):
    """Labels of strongly connected components and the set of closed ones."""
    n_comp, labels = csgraph.connected_components(adjacency, directed=True, connection="strong")
    coo = adjacency.tocoo()
    leaking = labels[coo.row] != labels[coo.col]
    open_ = np.zeros(n_comp, dtype=bool)
    open_[labels[coo.row[leaking]]] = True
    return labels, [k for k in range(n_comp) if not open_[k]]


def _solve_stationary(Qc: sp.csr_matrix) -> np.ndarray:
    n = Qc.shape[0]
    if n == 1:
        return np.ones(1)
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    if n <= DENSE_LIMIT:
        A = Qc.T.toarray()
        A[-1, :] = 1.0
        pi = scipy.linalg.solve(A, rhs)
    else:
        A = Qc.T.tolil()
        A[-1, :] = np.ones(n)
        pi = spsolve(A.tocsc(), rhs)
    pi = np.where(pi < 0, 0.0, pi)
    return pi / pi.sum()


def oracle_stationary(
    net: ReactionNetwork,
    box: Sequence[int],
    x0: Sequence[int] | None = None,
) -> StationaryTable:
    """Stationary law of the box-truncated chain.

    Without ``x0`` the truncated chain must have exactly one closed
    communicating class; with ``x0`` only classes reachable from ``x0`` count
    (needed for networks whose law depends on the initial condition).
    """
    states, Q, deleted, strides = truncated_generator(net, box)
    adjacency = Q.copy()
    adjacency.setdiag(0)
    adjacency.eliminate_zeros()
    candidates = np.arange(len(states))
    if x0 is not None:
        x0 = np.asarray([int(v) for v in x0], dtype=np.int64)
        if x0.shape != (net.n_species,) or (x0 < 0).any() or (x0 > np.asarray(box)).any():
            raise ValidationError("x0 must be a state inside the box")
        start = int(x0 @ strides)
        candidates = np.sort(csgraph.breadth_first_order(adjacency, start, directed=True,
                                                         return_predecessors=False))
        adjacency = adjacency[candidates][:, candidates]
    labels, closed = closed_classes(adjacency)
    if len(closed) != 1:
        raise ReducibleTruncationError(
            f"truncated chain has {len(closed)} closed communicating classes", len(closed)
        )
    members = candidates[labels == closed[0]]
    Qc = Q[members][:, members].tocsr()
    pi = _solve_stationary(Qc)
    residual = float(np.abs(Qc.T @ pi).max()) if len(pi) > 1 else 0.0
    scale = float(max(1.0, np.abs(Qc.diagonal()).max()))
    if residual > RESIDUAL_TOL * scale:
        raise NumericalError(f"stationary solve residual {residual:.3g} above tolerance")
    outflow = float(pi @ deleted[members])
    flux = float(pi @ (-Qc.diagonal() + deleted[members]))
    rel = outflow / flux if flux > 0 else 0.0
    mass = {tuple(int(v) for v in states[i]): p for i, p in zip(members, pi)}
    dist = FiniteDistribution(mass, net.n_species)
    diagnostics = {
        "boundary_outflow_relative": rel,
        "residual": residual,
        "n_states": int(len(members)),
        "box": [int(b) for b in box],
    }
    return StationaryTable(dist, None, "box", outflow, diagnostics)
