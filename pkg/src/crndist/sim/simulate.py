"""Exact stochastic simulation, occupancy estimation and verification reports."""

from __future__ import annotations

import io
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .._accel import resolve_backend
from ..analysis import db_stationary, oracle_stationary, solve_detailed_balance
from ..dist import DistributionSpec, FiniteDistribution, distance_to_spec, marginalize
from ..errors import ValidationError
from ..network import ReactionNetwork
from .kernels import CHUNK_FULL, run_chunk, ssa_chunk_nb
from .rng import MASK64, stream_key

CHUNK = 1 << 16
DEFAULT_MAX_EVENTS = 10**9


class PerturbationWarning(UserWarning):
    """A perturbation would have driven a count negative and was clamped."""


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``backend`` selects the SSA kernel (``"numba"``, ``"python"`` or
    ``None`` for the process default); both produce identical output.
    """

    t_end: float
    seed: int = 0
    burn_in_fraction: float = 0.1
    max_events: int = DEFAULT_MAX_EVENTS
    backend: str | None = None

    def __post_init__(self):
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValidationError("t_end must be a positive finite time")
        if not (isinstance(self.seed, (int, np.integer)) and 0 <= int(self.seed) <= MASK64):
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if not 0 <= self.burn_in_fraction < 1:
            raise ValidationError("burn_in_fraction must lie in [0, 1)")
        if int(self.max_events) < 1:
            raise ValidationError("max_events must be >= 1")
        try:
            resolve_backend(self.backend)
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc

    def with_seed(self, seed: int) -> "SimConfig":
        return SimConfig(self.t_end, int(seed) & MASK64, self.burn_in_fraction, self.max_events,
                         self.backend)


@dataclass(frozen=True)
class Perturbation:
    at_time: float
    delta: tuple[int, ...]

    def __post_init__(self):
        if not (math.isfinite(self.at_time) and self.at_time >= 0):
            raise ValidationError("perturbation time must be finite and >= 0")
        object.__setattr__(self, "delta", tuple(int(v) for v in self.delta))


@dataclass
class OccupancyEstimate:
    """Time-weighted empirical law.

    ``weights`` holds the raw time spent per state; ``spread`` is the
    largest per-state deviation of any replicate from the pooled estimate.
    """

    dist: FiniteDistribution
    total_time: float
    events: int
    truncated_by_cap: bool = False
    weights: dict = field(default_factory=dict, repr=False)
    replicates: int = 1
    spread: float = 0.0

    def to_dict(self) -> dict:
        return {"total_time": self.total_time, "events": self.events,
                "truncated_by_cap": self.truncated_by_cap, "replicates": self.replicates,
                "spread": self.spread, "dist": self.dist.to_dict()}


@dataclass
class SimulationResult:
    occupancy: OccupancyEstimate
    final_state: tuple[int, ...]
    end_time: float
    times: np.ndarray | None = None
    states: np.ndarray | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def trajectory(self):
        if self.times is None:
            return None
        return list(zip(self.times.tolist(), map(tuple, self.states.tolist())))


def _check_x0(net: ReactionNetwork, x0) -> np.ndarray:
    x = np.asarray([int(v) for v in x0], dtype=np.int64)
    if x.shape != (net.n_species,):
        raise ValidationError(f"x0 needs {net.n_species} entries")
    if (x < 0).any():
        raise ValidationError("x0 has negative counts")
    return x


def _accumulate(acc: dict, starts, ends, states, lo: float, hi: float):
    w = np.minimum(ends, hi) - np.maximum(starts, lo)
    keep = w > 0
    if not keep.any():
        return
    w = w[keep]
    states = states[keep]
    mins = states.min(axis=0)
    spans = states.max(axis=0) - mins + 1
    if float(np.prod(spans.astype(np.float64))) < 2.0**62:
        strides = np.ones(len(spans), dtype=np.int64)
        for k in range(len(spans) - 2, -1, -1):
            strides[k] = strides[k + 1] * spans[k + 1]
        codes = (states - mins) @ strides
        uniq, inv = np.unique(codes, return_inverse=True)
        sums = np.bincount(inv, weights=w)
        rows = mins + (uniq[:, None] // strides) % spans
    else:
        rows, inv = np.unique(states, axis=0, return_inverse=True)
        sums = np.bincount(inv.ravel(), weights=w)
    for row, s in zip(rows.tolist(), sums.tolist()):
        key = tuple(row)
        acc[key] = acc.get(key, 0.0) + s


def _run(net, x0, cfg, perts, burn, record):
    backend = resolve_backend(cfg.backend)
    reactants = np.ascontiguousarray(net.reactant_matrix, dtype=np.int64)
    change = np.ascontiguousarray(net.change_matrix, dtype=np.int64)
    rates = np.ascontiguousarray(net.rates, dtype=np.float64)
    state = x0.copy()
    key = np.uint64(stream_key(int(cfg.seed)))
    counter = np.uint64(0)
    out_t = np.empty(CHUNK)
    out_x = np.empty((CHUNK, net.n_species), dtype=np.int64)
    acc: dict = {}
    notes: list[str] = []
    t_times = [np.zeros(1)] if record else None
    t_states = [state[None, :].copy()] if record else None
    cur_state = state.copy()
    cur_t = 0.0
    events = 0
    truncated = False
    hi = cfg.t_end
    stops = [(p.at_time, p) for p in perts] + [(cfg.t_end, None)]
    t = 0.0
    for stop, pert in stops:
        while True:
            steps = min(CHUNK, int(cfg.max_events) - events)
            if steps <= 0:
                truncated = True
                break
            n, t, counter, status = run_chunk(backend, reactants, change, rates, state, t, stop,
                                              key, counter, steps, out_t, out_x)
            if n:
                starts = np.empty(n)
                starts[0] = cur_t
                starts[1:] = out_t[: n - 1]
                held = np.empty((n, net.n_species), dtype=np.int64)
                held[0] = cur_state
                held[1:] = out_x[: n - 1]
                _accumulate(acc, starts, out_t[:n], held, burn, hi)
                cur_state = out_x[n - 1].copy()
                cur_t = float(out_t[n - 1])
                if record:
                    t_times.append(out_t[:n].copy())
                    t_states.append(out_x[:n].copy())
                events += n
            if status != CHUNK_FULL:
                break
        if truncated:
            break
        _accumulate(acc, np.array([cur_t]), np.array([stop]), cur_state[None, :], burn, hi)
        cur_t = stop
        t = stop
        if pert is None:
            break
        new = state + np.asarray(pert.delta, dtype=np.int64)
        if (new < 0).any():
            msg = f"perturbation at t={stop!r} clamped at zero for species {np.flatnonzero(new < 0).tolist()}"
            notes.append(msg)
            warnings.warn(msg, PerturbationWarning, stacklevel=3)
            new = np.maximum(new, 0)
        state[:] = new
        cur_state = state.copy()
        if record:
            t_times.append(np.array([stop]))
            t_states.append(state[None, :].copy())
    end_time = cur_t
    out = (acc, events, end_time, truncated, tuple(int(v) for v in state), notes)
    if record:
        return out + (np.concatenate(t_times), np.concatenate(t_states))
    return out + (None, None)


def simulate(
    net: ReactionNetwork,
    x0: Sequence[int],
    cfg: SimConfig,
    perturbations: Iterable[Perturbation] | None = None,
    record_trajectory: bool = False,
) -> SimulationResult:
    """Simulate the CTMC from ``x0`` up to ``cfg.t_end`` with the direct method.

    Occupancy weights each visited full state by its holding time after the
    first ``burn_in_fraction`` of the simulated horizon. If ``max_events``
    stops the run early the horizon is the time of the last event and the
    estimate is flagged ``truncated_by_cap``.
    """
    x0 = _check_x0(net, x0)
    perts = sorted(perturbations or [], key=lambda p: p.at_time)
    for p in perts:
        if len(p.delta) != net.n_species:
            raise ValidationError("perturbation delta length differs from species count")
    late = [p for p in perts if p.at_time >= cfg.t_end]
    perts = [p for p in perts if p.at_time < cfg.t_end]
    b = cfg.burn_in_fraction
    acc, events, end_time, truncated, final, notes, times, states = _run(
        net, x0, cfg, perts, b * cfg.t_end, record_trajectory
    )
    if truncated and b > 0:
        # the horizon shrank, so the burn-in window does too; the rerun is
        # deterministic and stops at the same event
        acc = _run(net, x0, cfg, perts, b * end_time, False)[0]
    if late:
        notes.append(f"{len(late)} perturbation(s) at or after t_end ignored")
    total = end_time - b * end_time
    if acc and total > 0:
        dist = FiniteDistribution.normalized(acc, net.n_species)
    else:
        dist = FiniteDistribution({final: 1.0}, net.n_species)
        total = 0.0
    occ = OccupancyEstimate(dist, total, events, truncated, acc)
    if truncated:
        warnings.warn(f"max_events={cfg.max_events} reached at t={end_time!r}", RuntimeWarning,
                      stacklevel=2)
    return SimulationResult(occ, final, end_time, times, states, notes)


def warmup(backend: str | None = None):
    """Compile the numba kernel ahead of timing-sensitive or threaded use."""
    if resolve_backend(backend) == "numba":
        r = np.zeros((1, 1), dtype=np.int64)
        ssa_chunk_nb(r, r, np.ones(1), np.zeros(1, dtype=np.int64), 0.0, 1.0, np.uint64(1),
                     np.uint64(0), 1, np.empty(1), np.empty((1, 1), dtype=np.int64))


def _pool(weights: list[dict], n_species: int) -> FiniteDistribution:
    pooled: dict = {}
    for w in weights:
        for k, v in w.items():
            pooled[k] = pooled.get(k, 0.0) + v
    return FiniteDistribution.normalized(pooled, n_species)


def estimate_limit(
    net: ReactionNetwork,
    x0: Sequence[int],
    cfg: SimConfig,
    visible: Sequence[int] | None = None,
    replicates: int = 1,
    perturbations: Iterable[Perturbation] | None = None,
    workers: int | None = None,
) -> OccupancyEstimate:
    """Pooled occupancy over replicates seeded ``seed, seed+1, ...``, marginalized.

    Replicates run on a thread pool (the compiled kernel releases the GIL)
    and are pooled in replicate order, so the result does not depend on
    scheduling.
    """
    if int(replicates) < 1:
        raise ValidationError("replicates must be >= 1")
    visible = tuple(net.visible if visible is None else visible)
    perts = list(perturbations or [])
    warmup(cfg.backend)
    cfgs = [cfg.with_seed(int(cfg.seed) + k) for k in range(int(replicates))]
    workers = workers or min(len(cfgs), os.cpu_count() or 1)

    def one(c):
        return simulate(net, x0, c, perts).occupancy

    if workers > 1 and len(cfgs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(one, cfgs))
    else:
        runs = [one(c) for c in cfgs]
    weights = [r.weights for r in runs if r.total_time > 0]
    if weights:
        full = _pool(weights, net.n_species)
    else:
        full = runs[0].dist
    pooled = marginalize(full, visible)
    spread = 0.0
    if len(runs) > 1:
        margs = [marginalize(r.dist, visible) for r in runs]
        states = set(pooled.support)
        for m in margs:
            states.update(m.support)
        for x in states:
            p = pooled.pmf(x)
            spread = max(spread, max(abs(m.pmf(x) - p) for m in margs))
    return OccupancyEstimate(
        pooled,
        math.fsum(r.total_time for r in runs),
        sum(r.events for r in runs),
        any(r.truncated_by_cap for r in runs),
        {},
        len(runs),
        spread,
    )


@dataclass
class VerifyReport:
    distance: float
    method: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"distance": self.distance, "method": self.method, "diagnostics": self.diagnostics}


def _start_state(net, params):
    x0 = params.get("x0")
    if x0 is None:
        x0 = net.init
    return x0


def verify(
    net: ReactionNetwork,
    target: DistributionSpec,
    visible: Sequence[int] | None = None,
    mode: str = "exact",
    **params,
) -> VerifyReport:
    """Sup-norm distance between the network's visible limit law and ``target``.

    ``mode="exact"`` uses the detailed-balance product form (``x0``,
    ``cap``); ``"oracle"`` the truncated generator (``box``, optional
    ``x0``); ``"sim"`` pooled simulation (``cfg``, ``x0``, ``replicates``).
    ``x0`` defaults to the network's recorded initial state.
    """
    visible = tuple(net.visible if visible is None else visible)
    if target.dim != len(visible):
        raise ValidationError("target dimension differs from the number of visible species")
    if mode == "exact":
        cert = solve_detailed_balance(net)
        if cert is None:
            raise ValidationError("exact mode needs a detailed-balanced network")
        x0 = _start_state(net, params)
        if x0 is None:
            raise ValidationError("exact mode needs x0 (or a network init state)")
        table = db_stationary(net, cert, x0, int(params.get("cap", 100_000)))
        diag = {"M": table.normalization, "log_M": table.diagnostics["log_M"],
                "n_states": table.diagnostics["n_states"], "c": list(cert.c)}
    elif mode == "oracle":
        box = params.get("box")
        if box is None:
            raise ValidationError("oracle mode needs a box")
        table = oracle_stationary(net, box, params.get("x0"))
        diag = {"boundary_outflow": table.boundary_outflow,
                "boundary_outflow_relative": table.diagnostics["boundary_outflow_relative"],
                "n_states": table.diagnostics["n_states"], "box": table.diagnostics["box"]}
    elif mode == "sim":
        cfg = params.get("cfg")
        if cfg is None:
            raise ValidationError("sim mode needs a SimConfig")
        x0 = _start_state(net, params)
        if x0 is None:
            x0 = (0,) * net.n_species
        est = estimate_limit(net, x0, cfg, visible, int(params.get("replicates", 1)))
        dist = distance_to_spec(est.dist, target)
        diag = {"spread": est.spread, "replicates": est.replicates, "total_time": est.total_time,
                "events": est.events, "truncated_by_cap": est.truncated_by_cap,
                "x0": [int(v) for v in x0], "seed": int(cfg.seed), "t_end": cfg.t_end}
        return VerifyReport(dist, "sim", diag)
    else:
        raise ValidationError(f"unknown verify mode {mode!r}")
    marg = marginalize(table.dist, visible)
    return VerifyReport(distance_to_spec(marg, target), mode, diag)


def tune_delta(
    q: DistributionSpec,
    eps: float,
    mode: str = "oracle",
    delta0: float | None = None,
    max_halvings: int = 8,
    **params,
):
    """Halve ``delta`` for the robust route until ``verify`` reports distance < ``eps``.

    Starts from ``delta0`` (default ``eps / (4 m d)``) and returns the last
    :class:`SynthesisResult` with the ``(delta, distance)`` history; the
    result's ``meta["tuned"]`` records whether the target was met.
    """
    from ..synth import compile_auto

    delta = delta0
    history = []
    res = None
    for _ in range(int(max_halvings) + 1):
        res = compile_auto(q, eps, "robust", delta)
        delta = res.meta["delta"]
        dist = verify(res.net, q, None, mode, **params).distance
        history.append((delta, dist))
        if dist < eps:
            res.meta["tuned"] = True
            return res, history
        delta = delta / 2
    res.meta["tuned"] = False
    return res, history


def trajectory_tsv(result: SimulationResult, species: Sequence[str]) -> str:
    """Trajectory as TSV: ``time`` then one column per species, one row per jump."""
    if result.times is None:
        raise ValidationError("trajectory was not recorded")
    buf = io.StringIO()
    buf.write("\t".join(["time", *species]) + "\n")
    for t, row in zip(result.times.tolist(), result.states.tolist()):
        buf.write("\t".join([repr(float(t)), *map(str, row)]) + "\n")
    return buf.getvalue()


def occupancy_tsv(dist: FiniteDistribution, names: Sequence[str]) -> str:
    """Occupancy as TSV: coordinates then ``p``, rows sorted lexicographically."""
    if len(names) != dist.dim:
        raise ValidationError("need one column name per coordinate")
    buf = io.StringIO()
    buf.write("\t".join([*names, "p"]) + "\n")
    for x in sorted(dist.support):
        buf.write("\t".join([*map(str, x), repr(dist.pmf(x))]) + "\n")
    return buf.getvalue()


def read_occupancy_tsv(text: str) -> tuple[list[str], FiniteDistribution]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValidationError("empty occupancy table")
    header = lines[0].split("\t")
    if header[-1] != "p":
        raise ValidationError("occupancy header must end with 'p'")
    mass = {}
    try:
        for ln in lines[1:]:
            cells = ln.split("\t")
            mass[tuple(int(c) for c in cells[:-1])] = float(cells[-1])
    except ValueError as exc:
        raise ValidationError(f"malformed occupancy row: {exc}") from exc
    return header[:-1], FiniteDistribution(mass, len(header) - 1)


def read_trajectory_tsv(text: str) -> tuple[list[str], np.ndarray, np.ndarray]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split("\t")
    if header[0] != "time":
        raise ValidationError("trajectory header must start with 'time'")
    rows = [ln.split("\t") for ln in lines[1:]]
    times = np.array([float(r[0]) for r in rows])
    states = np.array([[int(c) for c in r[1:]] for r in rows], dtype=np.int64).reshape(len(rows), -1)
    return header[1:], times, states
