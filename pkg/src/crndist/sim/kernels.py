"""Direct-method SSA kernel.

One source, two backends: :func:`ssa_chunk_py` runs under CPython and
:data:`ssa_chunk_nb` is the same function compiled by numba. The random
stream is inlined SplitMix64 (see :mod:`crndist.sim.rng`).
"""

from __future__ import annotations

import math

import numpy as np

from .._accel import jit

CHUNK_FULL = 0
REACHED_STOP = 1
ABSORBED = 2


def ssa_chunk_py(reactants, change, rates, state, t, t_stop, key, counter, max_steps,
                 out_times, out_states):
    """Advance ``state`` in place by up to ``max_steps`` events before ``t_stop``.

    Returns ``(n, t, counter, status)``: ``n`` events were written to the
    output buffers, ``t`` is the new clock (``t_stop`` unless the chunk
    filled up) and ``counter`` the next unused draw index.
    """
    gamma = np.uint64(0x9E3779B97F4A7C15)
    m1 = np.uint64(0xBF58476D1CE4E5B9)
    m2 = np.uint64(0x94D049BB133111EB)
    s30 = np.uint64(30)
    s27 = np.uint64(27)
    s31 = np.uint64(31)
    s11 = np.uint64(11)
    one = np.uint64(1)
    scale = 2.0**-53
    n_rx = reactants.shape[0]
    n_sp = reactants.shape[1]
    props = np.empty(n_rx)
    n = 0
    while n < max_steps:
        total = 0.0
        for r in range(n_rx):
            a = rates[r]
            for s in range(n_sp):
                y = reactants[r, s]
                if y > 0:
                    xs = state[s]
                    if xs < y:
                        a = 0.0
                        break
                    for j in range(y):
                        a *= xs - j
            props[r] = a
            total += a
        if total <= 0.0:
            return n, t_stop, counter, ABSORBED
        z = key + (counter + one) * gamma
        z = (z ^ (z >> s30)) * m1
        z = (z ^ (z >> s27)) * m2
        z = z ^ (z >> s31)
        u = float(z >> s11) * scale
        counter += one
        t = t - math.log(1.0 - u) / total
        if t >= t_stop:
            return n, t_stop, counter, REACHED_STOP
        z = key + (counter + one) * gamma
        z = (z ^ (z >> s30)) * m1
        z = (z ^ (z >> s27)) * m2
        z = z ^ (z >> s31)
        target = float(z >> s11) * scale * total
        counter += one
        chosen = -1
        acc = 0.0
        for r in range(n_rx):
            if props[r] > 0.0:
                chosen = r
                acc += props[r]
                if target < acc:
                    break
        for s in range(n_sp):
            state[s] += change[chosen, s]
            out_states[n, s] = state[s]
        out_times[n] = t
        n += 1
    return n, t, counter, CHUNK_FULL


ssa_chunk_nb = jit(ssa_chunk_py)


def run_chunk(backend, reactants, change, rates, state, t, t_stop, key, counter, max_steps,
              out_times, out_states):
    if backend == "numba":
        n, t, counter, status = ssa_chunk_nb(reactants, change, rates, state, float(t),
                                             float(t_stop), key, counter, max_steps,
                                             out_times, out_states)
    else:
        with np.errstate(over="ignore"):
            n, t, counter, status = ssa_chunk_py(reactants, change, rates, state, float(t),
                                                 float(t_stop), key, counter, max_steps,
                                                 out_times, out_states)
    return int(n), float(t), np.uint64(counter), int(status)
