"""Step 1 of the recovery scheme: peak hunting on the smoothed phaseless
pattern, conversion of critical observation directions to face normals and
areas, and merging of duplicate normals across incident directions.

The backscattering peak of face ``j`` sits at the specular direction
``xhat_j = d - 2 (d . nu_j) nu_j``; inverting that relation gives

    ``nu_j = (xhat_j - d) / sqrt(2 (1 - xhat_j . d))``

and the peak magnitude yields the face area ``A = lambda |E| / |d . nu|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from .geometry import unit_vector
from .sphgrid import HarmonicExpansion, synthesize


class DegenerateDirection(ValueError):
    """Peak direction coincides with the incident direction."""


class GrazingNormal(ValueError):
    """Recovered normal is nearly orthogonal to the incident direction."""


@dataclass(frozen=True)
class PeakSet:
    """Local maxima of the smoothed pattern, sorted by descending value."""

    directions: np.ndarray  # (n, 3) unit vectors
    values: np.ndarray  # (n,)
    incident_direction: np.ndarray | None = None
    wavelength: float | None = None
    failed_starts: int = 0

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class RecoveredFaceSet:
    """Face normals with areas, peak values and source direction indices."""

    normals: np.ndarray  # (k, 3)
    areas: np.ndarray  # (k,)
    peak_values: np.ndarray  # (k,)
    source_indices: np.ndarray  # (k,) int

    def __len__(self) -> int:
        return len(self.areas)


@dataclass(frozen=True)
class RecoveryThresholds:
    """Knobs of the peak-selection stage.

    ``e_tol`` deletes weak maxima, ``exclusion_radius`` (radians) removes
    peaks too close to the incident direction, ``cluster_angle`` (radians)
    merges near-duplicate normals, ``cutoff`` is the harmonic band limit and
    ``multistart`` the (theta, phi) start-grid shape.
    """

    e_tol: float = 0.5
    exclusion_radius: float = 0.3
    cluster_angle: float = math.radians(5.0)
    cutoff: int = 10
    multistart: tuple = (5, 11)

    def __post_init__(self):
        if min(self.e_tol, self.exclusion_radius, self.cluster_angle) < 0:
            raise ValueError("thresholds must be nonnegative")


def angular_distance(u, v) -> float:
    return float(np.arccos(np.clip(np.dot(u, v), -1.0, 1.0)))


def specular_direction(nu, d) -> np.ndarray:
    """Critical observation direction: the mirror image of ``d`` in the face
    plane, ``d - 2 (d . nu) nu``."""
    nu = np.asarray(nu, dtype=float)
    d = np.asarray(d, dtype=float)
    return d - 2.0 * float(d @ nu) * nu


def normal_and_area_from_peak(xhat, value, d, wavelength):
    """Invert a critical-direction peak into a face normal and area.

    Raises
    ------
    DegenerateDirection
        If ``xhat`` coincides with ``d`` (inversion undefined).
    GrazingNormal
        If ``|d . nu|`` is too small for the area to be meaningful.
    """
    xhat = np.asarray(xhat, dtype=float)
    d = np.asarray(d, dtype=float)
    delta = xhat - d
    # |xhat - d| equals sqrt(2 (1 - xhat . d)) but has no cancellation
    chord = float(np.linalg.norm(delta))
    if chord**2 <= 2e-12:
        raise DegenerateDirection("peak direction coincides with the incident one")
    nu = delta / chord
    grazing = abs(float(d @ nu))
    if grazing < 1e-6:
        raise GrazingNormal("face nearly parallel to the incident direction")
    area = wavelength * value / grazing
    return nu, area


def _spherical(theta, phi) -> np.ndarray:
    st = math.sin(theta)
    return np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])


def find_local_maxima(
    expansion: HarmonicExpansion,
    incident_direction=None,
    wavelength=None,
    starts=(5, 11),
    dedup_angle=math.radians(1.0),
) -> PeakSet:
    """Multistart ascent of the band-limited pattern in ``(theta, phi)``.

    Every start on the uniform ``starts`` mesh of ``[0, pi] x [0, 2 pi]``
    runs a Nelder-Mead ascent; converged end points closer than
    ``dedup_angle`` are merged keeping the higher value.  Non-converged
    starts are only counted, never fatal.
    """
    n_theta, n_phi = starts
    thetas = np.linspace(0.0, math.pi, n_theta)
    phis = np.linspace(0.0, 2.0 * math.pi, n_phi)

    def negf(x):
        return -float(synthesize(expansion, _spherical(x[0], x[1])))

    found = []
    failed = 0
    for t0 in thetas:
        for p0 in phis:
            res = minimize(
                negf,
                np.array([t0, p0]),
                method="Nelder-Mead",
                options=dict(xatol=1e-7, fatol=1e-13, maxiter=400),
            )
            if not res.success:
                failed += 1
                continue
            found.append((_spherical(res.x[0], res.x[1]), -res.fun))

    found.sort(key=lambda item: -item[1])
    kept_dirs, kept_vals = [], []
    for xhat, val in found:
        if all(angular_distance(xhat, other) > dedup_angle for other in kept_dirs):
            kept_dirs.append(xhat)
            kept_vals.append(val)
    dirs = np.array(kept_dirs) if kept_dirs else np.zeros((0, 3))
    vals = np.array(kept_vals)
    if incident_direction is not None:
        incident_direction = unit_vector(incident_direction, "incident direction")
    return PeakSet(
        directions=dirs,
        values=vals,
        incident_direction=incident_direction,
        wavelength=wavelength,
        failed_starts=failed,
    )


def select_critical_directions(
    peaks: PeakSet, thresholds: RecoveryThresholds
) -> PeakSet:
    """Filter a peak set down to critical observation directions.

    Removes peaks within ``exclusion_radius`` of the incident direction,
    peaks below ``e_tol``, and peaks whose inversion would not yield a
    front-face normal.  Idempotent.
    """
    if peaks.incident_direction is None:
        raise ValueError("peak set lacks its incident direction")
    d = peaks.incident_direction
    keep = []
    for i in range(len(peaks)):
        xhat = peaks.directions[i]
        if angular_distance(xhat, d) < thresholds.exclusion_radius:
            continue
        if peaks.values[i] < thresholds.e_tol:
            continue
        delta = xhat - d
        chord = float(np.linalg.norm(delta))
        if chord**2 <= 2e-12:
            continue
        if float(delta @ d) >= 0.0:  # inverted normal would not face d
            continue
        keep.append(i)
    return replace(
        peaks, directions=peaks.directions[keep], values=peaks.values[keep]
    )


def peaks_to_faces(peaks: PeakSet, source_index: int = 0) -> RecoveredFaceSet:
    """Convert selected peaks of one incident direction into face entries."""
    if peaks.incident_direction is None or peaks.wavelength is None:
        raise ValueError("peak set lacks incident direction or wavelength")
    normals, areas, values = [], [], []
    for xhat, val in zip(peaks.directions, peaks.values):
        try:
            nu, area = normal_and_area_from_peak(
                xhat, val, peaks.incident_direction, peaks.wavelength
            )
        except (DegenerateDirection, GrazingNormal):
            continue
        normals.append(nu)
        areas.append(area)
        values.append(val)
    k = len(areas)
    return RecoveredFaceSet(
        normals=np.array(normals) if k else np.zeros((0, 3)),
        areas=np.array(areas),
        peak_values=np.array(values),
        source_indices=np.full(k, source_index, dtype=int),
    )


def merge_face_sets(sets) -> RecoveredFaceSet:
    """Concatenate per-direction face sets."""
    sets = list(sets)
    return RecoveredFaceSet(
        normals=np.concatenate([s.normals for s in sets])
        if sets
        else np.zeros((0, 3)),
        areas=np.concatenate([s.areas for s in sets]) if sets else np.zeros(0),
        peak_values=np.concatenate([s.peak_values for s in sets])
        if sets
        else np.zeros(0),
        source_indices=np.concatenate([s.source_indices for s in sets]).astype(int)
        if sets
        else np.zeros(0, dtype=int),
    )


def cluster_effective_normals(
    entries: RecoveredFaceSet, cluster_angle: float
) -> RecoveredFaceSet:
    """Merge near-duplicate normals, keeping the strongest peak per cluster.

    Greedy: entries are visited in order of descending peak value; each
    unclaimed entry seeds a cluster and claims everything within
    ``cluster_angle`` of it.  The seed is the cluster's representative.
    """
    if len(entries) == 0:
        return entries
    order = np.argsort(-entries.peak_values, kind="stable")
    claimed = np.zeros(len(entries), dtype=bool)
    reps = []
    for i in order:
        if claimed[i]:
            continue
        claimed[i] = True
        for j in order:
            if not claimed[j] and angular_distance(
                entries.normals[i], entries.normals[j]
            ) <= cluster_angle:
                claimed[j] = True
        reps.append(i)
    reps = np.array(reps, dtype=int)
    return RecoveredFaceSet(
        normals=entries.normals[reps],
        areas=entries.areas[reps],
        peak_values=entries.peak_values[reps],
        source_indices=entries.source_indices[reps],
    )
