"""Satellite geometry: constellation synthesis, design matrices, DOP.

Everything downstream (operators, covariances, estimators, bounds) consumes
the line-of-sight geometry built here.  Satellites live on the unit sphere in
a local ENU frame; no orbit propagation is involved — constellations are
drawn directly in (azimuth, elevation) above an elevation mask, which is all
the estimation model needs since receivers in one network share the same
line-of-sight vectors.

Conventions:
    * ``los[s]`` is the unit vector from the receiver towards satellite ``s``.
    * The geometry matrix ``E`` has rows ``-los[s]`` (range decreases when the
      receiver moves towards the satellite).
    * The pivot satellite is the differencing reference; by default the
      highest-elevation satellite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import SingularGeometryError

__all__ = [
    "SatelliteGeometry",
    "VisibilitySplit",
    "generate_constellation",
    "geometry_matrix",
    "observation_matrix",
    "gdop",
    "dd_geometry",
    "load_fixture",
    "save_fixture",
]

#: Condition-number ceiling beyond which a normal matrix is treated as
#: singular rather than inverted.
COND_LIMIT = 1e12

_UNIT_TOL = 1e-12


@dataclass(frozen=True)
class SatelliteGeometry:
    """Unit line-of-sight vectors and elevations for K visible satellites.

    ``los`` is a (K, 3) array of receiver-to-satellite unit vectors in ENU;
    ``elevations`` the matching elevation angles in radians; ``pivot_index``
    the satellite used as differencing reference.
    """

    los: np.ndarray
    elevations: np.ndarray
    pivot_index: int

    def __post_init__(self) -> None:
        los = np.atleast_2d(np.asarray(self.los, dtype=float))
        elev = np.atleast_1d(np.asarray(self.elevations, dtype=float))
        object.__setattr__(self, "los", los)
        object.__setattr__(self, "elevations", elev)
        if los.ndim != 2 or los.shape[1] != 3:
            raise ValueError(f"los must be (K, 3), got {los.shape}")
        if elev.shape != (los.shape[0],):
            raise ValueError("one elevation per satellite required")
        norms = np.linalg.norm(los, axis=1)
        if np.any(np.abs(norms - 1.0) > _UNIT_TOL):
            worst = float(np.max(np.abs(norms - 1.0)))
            raise ValueError(f"los vectors must be unit norm (worst dev {worst:.2e})")
        if not 0 <= self.pivot_index < los.shape[0]:
            raise ValueError(f"pivot_index {self.pivot_index} out of range")

    @property
    def K(self) -> int:
        return self.los.shape[0]

    def subset(self, indices) -> "SatelliteGeometry":
        """Geometry restricted to ``indices``; pivot reset to the
        highest-elevation surviving satellite."""
        idx = np.asarray(indices, dtype=int)
        elev = self.elevations[idx]
        return SatelliteGeometry(self.los[idx], elev, int(np.argmax(elev)))


@dataclass(frozen=True)
class VisibilitySplit:
    """Partition of satellite indices into commonly- and exclusively-visible.

    ``common`` satellites are seen by every receiver including the
    constrained users; ``exclusive`` satellites only by the aiding users and
    the base.  The two sets must be disjoint and together cover all K.
    """

    common_indices: tuple = field(default_factory=tuple)
    exclusive_indices: tuple = field(default_factory=tuple)

    def __post_init__(self) -> None:
        common = tuple(int(i) for i in self.common_indices)
        exclusive = tuple(int(i) for i in self.exclusive_indices)
        object.__setattr__(self, "common_indices", common)
        object.__setattr__(self, "exclusive_indices", exclusive)
        overlap = set(common) & set(exclusive)
        if overlap:
            raise ValueError(f"common/exclusive sets overlap: {sorted(overlap)}")
        if len(set(common)) != len(common) or len(set(exclusive)) != len(exclusive):
            raise ValueError("duplicate satellite index in visibility split")

    @property
    def K_c(self) -> int:
        return len(self.common_indices)

    @property
    def K_o(self) -> int:
        return len(self.exclusive_indices)

    @property
    def K(self) -> int:
        return self.K_c + self.K_o


def generate_constellation(K: int, mask: float, seed: int) -> SatelliteGeometry:
    """Draw K satellites uniformly in azimuth/elevation above ``mask``.

    Azimuth is uniform on [0, 2*pi), elevation uniform on [mask, pi/2).  The
    pivot is the highest-elevation satellite.  Deterministic for a given
    seed.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if not 0 <= mask < np.pi / 2:
        raise ValueError("mask must lie in [0, pi/2)")
    rng = np.random.default_rng(seed)
    azimuth = rng.uniform(0.0, 2.0 * np.pi, size=K)
    elevation = rng.uniform(mask, np.pi / 2, size=K)
    los = np.column_stack(
        [
            np.cos(elevation) * np.sin(azimuth),  # east
            np.cos(elevation) * np.cos(azimuth),  # north
            np.sin(elevation),  # up
        ]
    )
    return SatelliteGeometry(los, elevation, int(np.argmax(elevation)))


def geometry_matrix(g: SatelliteGeometry) -> np.ndarray:
    """(K, 3) matrix with row s equal to ``-los[s]``."""
    return -g.los.copy()


def observation_matrix(g: SatelliteGeometry) -> np.ndarray:
    """(K, 4) design matrix: geometry columns plus an all-ones clock column."""
    E = geometry_matrix(g)
    return np.hstack([E, np.ones((g.K, 1))])


def gdop(H: np.ndarray) -> float:
    """Geometric dilution of precision, sqrt(trace((H^T H)^-1)).

    Raises SingularGeometryError when H^T H has condition number above
    ``COND_LIMIT`` (fewer than 4 satellites, coplanar geometry, ...).
    """
    H = np.asarray(H, dtype=float)
    normal = H.T @ H
    if H.shape[0] < H.shape[1] or np.linalg.cond(normal) > COND_LIMIT:
        raise SingularGeometryError(
            f"normal matrix singular or ill-conditioned for GDOP ({H.shape[0]} rows)"
        )
    return float(np.sqrt(np.trace(np.linalg.inv(normal))))


def dd_geometry(E: np.ndarray, pivot: int) -> np.ndarray:
    """Between-satellite differenced geometry: row per non-pivot satellite.

    Output row for satellite s is ``E[s] - E[pivot]`` with rows kept in
    original order, pivot row removed; the all-ones clock column of the full
    design matrix would map to zero under the same differencing.
    """
    E = np.asarray(E, dtype=float)
    K = E.shape[0]
    if K < 2:
        raise ValueError("differencing needs at least 2 satellites")
    if not 0 <= pivot < K:
        raise ValueError(f"pivot {pivot} out of range for K={K}")
    keep = [s for s in range(K) if s != pivot]
    return E[keep] - E[pivot]


# ---------------------------------------------------------------------------
# Fixture I/O — canonical geometries are checked in as JSON so regression and
# acceptance runs are deterministic.
# ---------------------------------------------------------------------------

def save_fixture(g: SatelliteGeometry, path) -> None:
    """Serialize a geometry as {"los": [[x,y,z],...], "elevations_rad": [...], "pivot": i}."""
    payload = {
        "los": [[float(x) for x in row] for row in g.los],
        "elevations_rad": [float(e) for e in g.elevations],
        "pivot": int(g.pivot_index),
    }
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")


def _from_payload(payload: dict) -> SatelliteGeometry:
    return SatelliteGeometry(
        np.asarray(payload["los"], dtype=float),
        np.asarray(payload["elevations_rad"], dtype=float),
        int(payload["pivot"]),
    )


def load_fixture(name_or_path) -> SatelliteGeometry:
    """Load a geometry fixture.

    ``name_or_path`` is either a filesystem path to a fixture JSON or the
    bare name (no extension) of one of the fixtures shipped with the package
    (e.g. ``"k4_gdop2p5"``).
    """
    p = Path(str(name_or_path))
    if p.suffix == ".json" and p.exists():
        return _from_payload(json.loads(p.read_text()))
    ref = resources.files("coopdgnss") / "fixtures" / f"{name_or_path}.json"
    if not ref.is_file():
        raise FileNotFoundError(f"no geometry fixture named {name_or_path!r}")
    return _from_payload(json.loads(ref.read_text()))
