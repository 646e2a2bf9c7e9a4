"""Synthetic observation generator for the linearized network model.

Observations are observed-minus-computed residuals about the linearization
point, which is exactly the regime the estimators and bounds operate in:

    code_r  = H_r dx_r + (sat_clock + tropo + iono)   + noise
    phase_r = H_r dx_r + (sat_clock + tropo - iono) + wavelength * N_r + noise'

with H_r the design matrix restricted to receiver r's visible satellites and
dx_r its position/clock increment (zero for the base).

Each observation keeps its physical components (geometry, receiver clock,
common per-satellite terms, ambiguity, noise) alongside the materialized
sums.  The differencing transforms operate on components, so terms that the
algebra cancels exactly (satellite clock / troposphere / ionosphere under
receiver differencing, receiver clocks under pivot differencing) vanish
*bit-exactly* — the differenced residuals are bit-identical to those of a
re-simulation with the cancelled terms zeroed, not merely close.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .geometry import SatelliteGeometry, VisibilitySplit, observation_matrix
from .netmodel import NetworkSpec

__all__ = [
    "TruthState",
    "ObservationSet",
    "sample_truth",
    "synthesize_raw",
    "to_sd",
    "to_dd",
    "observation_rows",
    "dump_observations",
    "default_views",
]


def as_generator(seed) -> np.random.Generator:
    """Normalize an int / SeedSequence / Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class TruthState:
    """Ground truth for one trial, stored as increments about the
    linearization point (so the base entries are exactly zero).

    positions: (N+1, 3) m, index 0 = base; clock_offsets: (N+1,) m;
    ambiguities: (N+1, K) integer cycles (base included — differencing uses
    them); sat_clock / tropo / iono: (K,) m, common to every receiver.
    """

    positions: np.ndarray
    clock_offsets: np.ndarray
    ambiguities: np.ndarray
    sat_clock: np.ndarray
    tropo: np.ndarray
    iono: np.ndarray

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=float)
        clk = np.asarray(self.clock_offsets, dtype=float)
        amb = np.asarray(self.ambiguities)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "clock_offsets", clk)
        object.__setattr__(self, "sat_clock", np.asarray(self.sat_clock, dtype=float))
        object.__setattr__(self, "tropo", np.asarray(self.tropo, dtype=float))
        object.__setattr__(self, "iono", np.asarray(self.iono, dtype=float))
        if not np.issubdtype(amb.dtype, np.integer):
            rounded = np.rint(np.asarray(amb, dtype=float)).astype(np.int64)
            if np.any(rounded != np.asarray(amb, dtype=float)):
                raise ValueError("ambiguities must be integers")
            amb = rounded
        object.__setattr__(self, "ambiguities", amb)
        if np.any(pos[0] != 0.0) or clk[0] != 0.0:
            raise ValueError("base increment must be exactly zero (surveyed base)")

    @property
    def N(self) -> int:
        return self.positions.shape[0] - 1

    @property
    def K(self) -> int:
        return self.ambiguities.shape[1]


@dataclass(frozen=True)
class ObservationSet:
    """Stacked code/phase residual vectors at one differencing level.

    ``level`` is one of raw | sd | dd.  Raw stacks the base block first and
    then users 1..N; sd/dd stack users only.  ``views`` holds each user's
    visible satellite indices (global numbering); ``pivot`` is the global
    pivot index for dd sets.  ``parts_code``/``parts_phase`` carry the
    physical decomposition (see module docstring); ``code``/``phase`` are
    their materialized sums and are what estimators consume.
    """

    level: str
    code: np.ndarray
    phase: np.ndarray
    dims: tuple
    seed: object
    views: tuple
    pivot: int | None = None
    parts_code: dict | None = None
    parts_phase: dict | None = None

    def __post_init__(self) -> None:
        if self.level not in ("raw", "sd", "dd"):
            raise ValueError(f"unknown level {self.level!r}")
        object.__setattr__(self, "code", np.asarray(self.code, dtype=float))
        object.__setattr__(self, "phase", np.asarray(self.phase, dtype=float))
        object.__setattr__(self, "views", tuple(tuple(int(s) for s in v) for v in self.views))
        n = sum(self.counts)
        if self.code.shape != (n,) or self.phase.shape != (n,):
            raise ValueError(
                f"{self.level} observation length must be {n}, got {self.code.shape}"
            )

    @property
    def counts(self) -> tuple:
        """Per-block entry counts (base first for raw, then users)."""
        N, K = self.dims
        if self.level == "raw":
            return (K,) + tuple(len(v) for v in self.views)
        if self.level == "sd":
            return tuple(len(v) for v in self.views)
        return tuple(len(v) - 1 for v in self.views)

    @property
    def stacked(self) -> np.ndarray:
        """Code stacked over phase — the estimator-facing measurement order."""
        return np.concatenate([self.code, self.phase])


def default_views(spec: NetworkSpec, split: VisibilitySplit | None = None) -> tuple:
    """Per-user visible-satellite index tuples implied by a network spec.

    Constrained users (the first N_c) see the common satellites; aiding
    users see everything.  Without an explicit split, the first K_c global
    indices are the common set.
    """
    if split is None:
        split = VisibilitySplit(tuple(range(spec.K_c)), tuple(range(spec.K_c, spec.K)))
    if split.K_c != spec.K_c or split.K_o != spec.K_o:
        raise ValueError("visibility split sizes disagree with the network spec")
    common = split.common_indices
    full = split.common_indices + split.exclusive_indices
    return tuple([common] * spec.N_c + [full] * spec.N_o)


def _weights(spec: NetworkSpec, g: SatelliteGeometry, view) -> np.ndarray:
    if spec.weighting == "elevation":
        return np.sin(g.elevations[list(view)]) ** 2
    return np.ones(len(view))


@lru_cache(maxsize=128)
def _stack_plan(all_views: tuple, K: int):
    """Gather arrays for vectorized raw assembly: per-entry receiver index
    and satellite index over the stacked (base-first) layout."""
    rec = np.concatenate([np.full(len(v), r) for r, v in enumerate(all_views)])
    idx = np.concatenate([np.asarray(v, dtype=np.intp) for v in all_views])
    return rec, idx


@lru_cache(maxsize=128)
def _sd_plan(views: tuple, K: int):
    """For each stacked user entry, the offset of the matching base entry."""
    return np.concatenate([np.asarray(v, dtype=np.intp) for v in views])


@lru_cache(maxsize=128)
def _dd_plan(views: tuple, pivot: int):
    """Row selectors for pivot differencing of a stacked sd vector: the kept
    (non-pivot) entry offsets and, aligned with them, each user's pivot
    entry offset."""
    keep, piv = [], []
    offset = 0
    for view in views:
        p = view.index(pivot)
        for i in range(len(view)):
            if i != p:
                keep.append(offset + i)
                piv.append(offset + p)
        offset += len(view)
    return np.asarray(keep, dtype=np.intp), np.asarray(piv, dtype=np.intp)


def sample_truth(spec: NetworkSpec, g: SatelliteGeometry, seed) -> TruthState:
    """Draw one trial's ground truth: user position increments uniform in a
    10 m cube, clock offsets uniform in +-100 m, ambiguities integer uniform
    in [-100, 100] (base included), and common-mode per-satellite terms at
    representative magnitudes.  Deterministic per seed."""
    rng = as_generator(seed)
    N = spec.N
    K = g.K
    positions = np.zeros((N + 1, 3))
    positions[1:] = rng.uniform(-5.0, 5.0, size=(N, 3))
    clocks = np.zeros(N + 1)
    clocks[1:] = rng.uniform(-100.0, 100.0, size=N)
    ambiguities = rng.integers(-100, 101, size=(N + 1, K), dtype=np.int64)
    sat_clock = rng.uniform(-300.0, 300.0, size=K)
    tropo = rng.uniform(2.0, 25.0, size=K)
    iono = rng.uniform(1.0, 15.0, size=K)
    return TruthState(positions, clocks, ambiguities, sat_clock, tropo, iono)


def synthesize_raw(
    g: SatelliteGeometry,
    spec: NetworkSpec,
    truth: TruthState,
    seed,
    split: VisibilitySplit | None = None,
    include_noise: bool = True,
) -> ObservationSet:
    """Generate raw code/phase residuals for the whole network (base first).

    Noise is zero-mean Gaussian, per receiver, with variance sigma^2 / w_s
    per satellite (w from the spec's weighting model) and the base at
    ``alpha`` times the user variance.  Draw order is fixed (code then phase,
    base then users) so results are reproducible per seed.
    """
    if truth.K != g.K:
        raise ValueError("truth and geometry disagree on satellite count")
    if truth.N != spec.N:
        raise ValueError("truth and spec disagree on user count")
    rng = as_generator(seed)
    views = default_views(spec, split)
    lam = spec.wavelength

    base_view = tuple(range(g.K))
    all_views = (base_view,) + views
    rec, idx = _stack_plan(all_views, g.K)
    n = rec.size

    geom = np.sum(-g.los[idx] * truth.positions[rec], axis=1)
    clock = truth.clock_offsets[rec]
    disp = truth.sat_clock[idx] + truth.tropo[idx]
    iono = truth.iono[idx]
    amb = lam * truth.ambiguities[rec, idx].astype(float)

    # Per-entry noise scale: sigma / sqrt(w), base entries at sqrt(alpha)
    # times the user level; one draw per side in stacking order.
    if spec.weighting == "elevation":
        w = np.sin(g.elevations[idx]) ** 2
    else:
        w = np.ones(n)
    sqrt_w = np.sqrt(w)
    base = rec == 0
    if include_noise:
        scale_code = np.where(base, np.sqrt(spec.alpha) * spec.sigma_rho, spec.sigma_rho)
        scale_phase = np.where(base, np.sqrt(spec.alpha) * spec.sigma_phi, spec.sigma_phi)
        noise_code = rng.normal(0.0, 1.0, size=n) * (scale_code / sqrt_w)
        noise_phase = rng.normal(0.0, 1.0, size=n) * (scale_phase / sqrt_w)
    else:
        noise_code = np.zeros(n)
        noise_phase = np.zeros(n)

    parts_code = {
        "geom": geom,
        "clock": clock,
        "common": disp + iono,
        "ambiguity": np.zeros(n),
        "noise": noise_code,
    }
    parts_phase = {
        "geom": geom,
        "clock": clock,
        "common": disp - iono,
        "ambiguity": amb,
        "noise": noise_phase,
    }
    return ObservationSet(
        level="raw",
        code=_materialize(parts_code),
        phase=_materialize(parts_phase),
        dims=(spec.N, g.K),
        seed=seed,
        views=views,
        parts_code=parts_code,
        parts_phase=parts_phase,
    )


def _materialize(parts: dict) -> np.ndarray:
    return parts["geom"] + parts["clock"] + parts["common"] + parts["ambiguity"] + parts["noise"]


def _block_slices(counts):
    offsets = np.concatenate([[0], np.cumsum(counts)])
    return [slice(int(a), int(b)) for a, b in zip(offsets[:-1], offsets[1:])]


def to_sd(raw: ObservationSet) -> ObservationSet:
    """Difference each user against the base (per shared satellite).

    Per-satellite common terms cancel exactly: the output's common component
    is identically zero rather than a float difference of large numbers.
    Phase keeps wavelength * (N_user - N_base); both receivers' noise
    survives, which is where the differenced covariance's off-diagonal
    blocks come from.
    """
    if raw.level != "raw":
        raise ValueError(f"expected raw observations, got {raw.level}")
    N, K = raw.dims
    base_idx = _sd_plan(raw.views, K)

    def diff(parts: dict) -> dict:
        out = {}
        for key in ("geom", "clock", "ambiguity", "noise"):
            user = parts[key][K:]
            out[key] = user - parts[key][base_idx]
        out["common"] = np.zeros(base_idx.size)  # exact cancellation
        return out

    parts_code = diff(raw.parts_code)
    parts_phase = diff(raw.parts_phase)
    return ObservationSet(
        level="sd",
        code=_materialize(parts_code),
        phase=_materialize(parts_phase),
        dims=(N, K),
        seed=raw.seed,
        views=raw.views,
        parts_code=parts_code,
        parts_phase=parts_phase,
    )


def to_dd(sd: ObservationSet, pivot: int) -> ObservationSet:
    """Difference each user's single differences against the pivot satellite.

    The receiver-clock component cancels exactly (it is constant within a
    user's block).  Phase carries the double-differenced integer ambiguities
    times the wavelength.  ``pivot`` is a global satellite index and must be
    visible to every user.
    """
    if sd.level != "sd":
        raise ValueError(f"expected sd observations, got {sd.level}")
    N, K = sd.dims
    for view in sd.views:
        if pivot not in view:
            raise ValueError(f"pivot satellite {pivot} not visible to every user")
    keep, piv = _dd_plan(sd.views, int(pivot))

    def diff(parts: dict) -> dict:
        out = {}
        for key in ("geom", "ambiguity", "noise"):
            out[key] = parts[key][keep] - parts[key][piv]
        out["clock"] = np.zeros(keep.size)  # exact cancellation
        out["common"] = np.zeros(keep.size)
        return out

    parts_code = diff(sd.parts_code)
    parts_phase = diff(sd.parts_phase)
    return ObservationSet(
        level="dd",
        code=_materialize(parts_code),
        phase=_materialize(parts_phase),
        dims=(N, K),
        seed=sd.seed,
        views=sd.views,
        pivot=int(pivot),
        parts_code=parts_code,
        parts_phase=parts_phase,
    )


def observation_rows(obs: ObservationSet):
    """Yield one (level, receiver, satellite, code_str, phase_str) row per
    entry of an observation set.

    Raw rows list the base as receiver 0 and users from 1; sd/dd rows use
    user numbering from 1.  dd rows name the non-pivot satellite.
    """
    slices = _block_slices(obs.counts)
    if obs.level == "raw":
        blocks = [(0, tuple(range(obs.dims[1])))] + [
            (r + 1, v) for r, v in enumerate(obs.views)
        ]
    else:
        blocks = [(r + 1, v) for r, v in enumerate(obs.views)]
    for (receiver, view), sl in zip(blocks, slices):
        sats = [s for s in view if not (obs.level == "dd" and s == obs.pivot)]
        for s, c, p in zip(sats, obs.code[sl], obs.phase[sl]):
            yield (obs.level, receiver, s, f"{c:.9e}", f"{p:.9e}")


def dump_observations(sets, path) -> None:
    """Write one or more observation sets as CSV rows
    (level, receiver, satellite, code_m, phase_m)."""
    if isinstance(sets, ObservationSet):
        sets = [sets]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "receiver", "satellite", "code_m", "phase_m"])
        for obs in sets:
            writer.writerows(observation_rows(obs))


def zeroed_common_truth(truth: TruthState) -> TruthState:
    """The same truth with satellite-clock/tropo/iono terms zeroed (for
    cancellation-exactness checks)."""
    K = truth.K
    return replace(
        truth, sat_clock=np.zeros(K), tropo=np.zeros(K), iono=np.zeros(K)
    )


def zeroed_clock_truth(truth: TruthState) -> TruthState:
    """The same truth with receiver clock offsets zeroed."""
    return replace(truth, clock_offsets=np.zeros(truth.N + 1))
