"""Brute-force trajectory oracles, independent of the synthesis path.

These replay the raw dynamics on grids of initial states and check region
membership step by step; they know nothing about certificates or LPs, so a
verified certificate can be cross-examined against them.
"""
from __future__ import annotations

import itertools

import numpy as np

from .quantum import Dynamics
from .regions import Region, sample_states


def initial_grid(region: Region, count: int, seed: int) -> np.ndarray:
    """Initial states for the oracle: region samples from an independent seed
    stream plus pseudorandom sphere points filtered by membership."""
    states = [sample_states(region, count, seed + 90001).states]
    rng = np.random.default_rng(seed + 4242)
    raw = rng.normal(size=(4 * count, region.dim)) + 1j * rng.normal(
        size=(4 * count, region.dim)
    )
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    ok = region.membership_batch(raw)
    if ok.any():
        states.append(raw[ok])
    return np.vstack(states)


def _param_choices(dyn: Dynamics, t: int):
    m = dyn.map_at(t)
    if m.n_params == 0:
        return [None]
    corners = [
        tuple(pt) for pt in itertools.product(*[(lo, hi) for lo, hi in m.param_domain])
    ]
    mids = [tuple((lo + hi) / 2.0 for lo, hi in m.param_domain)]
    return corners + mids


def count_unsafe_visits(
    dyn: Dynamics,
    initial_states: np.ndarray,
    unsafe: Region,
    steps: int,
    max_branches: int = 256,
) -> int:
    """Number of trajectory points inside the unsafe region within `steps`.

    Uncertain maps branch over their parameter-box corners (and midpoint),
    capped at max_branches live branches per initial state.
    """
    initial_states = np.atleast_2d(initial_states)
    if not dyn.is_uncertain:
        states = initial_states
        visits = int(unsafe.membership_batch(states).sum())
        for t in range(steps):
            states = states @ dyn.map_at(t).matrix().T
            visits += int(unsafe.membership_batch(states).sum())
        return visits
    visits = 0
    for amps in initial_states:
        frontier = [amps]
        if unsafe.membership_batch(amps.reshape(1, -1))[0]:
            visits += 1
        for t in range(steps):
            choices = _param_choices(dyn, t)
            nxt = []
            for state in frontier:
                for params in choices:
                    mat = dyn.map_at(t).matrix(params)
                    nxt.append(mat @ state)
            if len(nxt) > max_branches:
                nxt = nxt[:max_branches]
            batch = np.vstack([s.reshape(1, -1) for s in nxt])
            visits += int(unsafe.membership_batch(batch).sum())
            frontier = nxt
    return visits


def trajectory_safe(
    dyn: Dynamics,
    init_region: Region,
    unsafe_region: Region,
    steps: int,
    grid: int = 1000,
    seed: int = 11,
) -> bool:
    """True iff no sampled trajectory reaches the unsafe region in `steps`."""
    states = initial_grid(init_region, grid, seed)
    return count_unsafe_visits(dyn, states, unsafe_region, steps) == 0
