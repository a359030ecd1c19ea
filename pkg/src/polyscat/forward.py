"""Physical-optics far fields for convex polyhedral perfect conductors.

Only illuminated (front) faces carry surface current; each face contributes
a closed-form Fourier integral over its polygon.  The magnetic far field is

    ``H(xhat) = (i k / 2 pi) sum_front xhat x [nu x (d x p)] * I(k(d - xhat))``

with ``I`` the polygon integral of ``exp(i q . y)``, and ``E = H x xhat``.
The polygon integral reduces by the in-plane divergence theorem to a sum of
stable per-edge sinc terms; a per-triangle power series takes over when the
tangential wavevector is small and the edge sum would cancel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .geometry import ConvexPolyhedron, DegenerateFace, unit_vector
from .sphgrid import SphericalGrid, flat_triangle_areas

MODULUS = "modulus"
COMPLEX_E = "complex-E"
COMPLEX_H = "complex-H"
_KINDS = (MODULUS, COMPLEX_E, COMPLEX_H)

# switch from the edge sum to the series once |w| * radius drops below this
_SERIES_RADIUS = 0.5
_SERIES_TERMS = 18
_FACTORIALS = np.array([math.factorial(k) for k in range(_SERIES_TERMS + 3)])


class WrongKind(ValueError):
    """Operation applied to far-field samples of an incompatible kind."""


@dataclass(frozen=True)
class PlaneWave:
    """Normalized incident plane wave.

    Attributes
    ----------
    d : (3,) unit incident direction
    p : (3,) unit polarization, orthogonal to ``d``
    k : positive wavenumber
    """

    d: np.ndarray
    p: np.ndarray
    k: float

    def __post_init__(self):
        object.__setattr__(self, "d", _frozen3(self.d))
        object.__setattr__(self, "p", _frozen3(self.p))
        for name in ("d", "p"):
            if abs(np.linalg.norm(getattr(self, name)) - 1.0) > 1e-12:
                raise ValueError(f"{name} must be a unit vector")
        if abs(float(self.d @ self.p)) > 1e-12:
            raise ValueError("polarization must be orthogonal to the direction")
        if self.k <= 0:
            raise ValueError("wavenumber must be positive")

    @property
    def wavelength(self) -> float:
        return 2.0 * math.pi / self.k


@dataclass(frozen=True)
class NoiseModel:
    """Multiplicative relative noise ``(1 + delta * r)`` with seeded gaussians."""

    delta: float
    seed: int = 0

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("relative noise level must be nonnegative")


@dataclass(frozen=True)
class FarFieldSamples:
    """Far-field data on a spherical grid.

    ``values`` holds nonnegative moduli (shape ``(N,)``) for kind
    ``modulus`` or complex tangential vectors (shape ``(N, 3)``) for the
    complex kinds.
    """

    grid: SphericalGrid
    values: np.ndarray
    wave: PlaneWave
    kind: str

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown far-field kind {self.kind!r}")
        vals = np.asarray(self.values)
        if self.kind == MODULUS:
            vals = vals.astype(float)
            if vals.shape != (self.grid.size,):
                raise ValueError("modulus samples must be one value per grid point")
            if vals.min() < 0.0:
                raise ValueError("moduli must be nonnegative")
        else:
            vals = vals.astype(complex)
            if vals.shape != (self.grid.size, 3):
                raise ValueError("complex samples must be one 3-vector per point")
            radial = np.abs(np.einsum("ij,ij->i", self.grid.points, vals))
            limit = 1e-9 * max(1.0, float(np.abs(vals).max()))
            if radial.max() > limit:
                raise ValueError("complex far fields must be tangential")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def is_complex(self) -> bool:
        return self.kind != MODULUS


def _frozen3(v) -> np.ndarray:
    v = np.ascontiguousarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError("expected a 3-vector")
    v.flags.writeable = False
    return v


def _polygon_integrals(vertices, normal, Q) -> np.ndarray:
    """``integral exp(i q . y) ds`` over one planar polygon, for each row of Q.

    The area integral is orientation-free, so the winding-consistent Newell
    normal is used internally; ``normal`` only identifies the plane.
    """
    V = np.asarray(vertices, dtype=float)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    nvec = np.cross(V, np.roll(V, -1, axis=0)).sum(axis=0)
    area2 = np.linalg.norm(nvec)
    if 0.5 * area2 < 1e-12:
        raise DegenerateFace("polygon area below 1e-12")
    nu = nvec / area2
    if normal is not None and abs(float(np.asarray(normal, dtype=float) @ nu)) < 0.99:
        raise ValueError("supplied normal is not perpendicular to the polygon")

    offset = float(nu @ V[0])
    qn = Q @ nu
    W = Q - qn[:, None] * nu
    center = V.mean(axis=0)
    Vrel = V - center
    radius = float(np.linalg.norm(Vrel, axis=1).max())
    wnorm = np.linalg.norm(W, axis=1)
    small = wnorm * radius <= _SERIES_RADIUS

    out = np.empty(len(Q), dtype=complex)
    if small.any():
        out[small] = _series_integral(Vrel, nu, W[small])
    if (~small).any():
        out[~small] = _edge_integral(Vrel, nu, W[~small], wnorm[~small])
    out *= np.exp(1j * (qn * offset + W @ center))
    return out


def _series_integral(Vrel, nu, W) -> np.ndarray:
    """Power series over fan triangles; stable for small tangential |w|."""
    acc = np.zeros(len(W), dtype=complex)
    p0 = Vrel[0]
    x = 1j * (W @ p0)
    for a, b in zip(Vrel[1:-1], Vrel[2:]):
        two_area = float(np.cross(a - p0, b - p0) @ nu)  # signed
        y = 1j * (W @ a)
        z = 1j * (W @ b)
        g = np.ones_like(x)
        h = np.ones_like(x)
        zp = np.ones_like(x)
        series = h / _FACTORIALS[2]
        for k in range(1, _SERIES_TERMS + 1):
            zp = zp * z
            g = y * g + zp
            h = x * h + g
            series += h / _FACTORIALS[k + 2]
        acc += two_area * series
    return acc


def _edge_integral(Vrel, nu, W, wnorm) -> np.ndarray:
    """In-plane divergence theorem: one analytic sinc term per edge."""
    acc = np.zeros(len(W), dtype=complex)
    inv = 1.0 / (1j * wnorm**2)
    for a, b in zip(Vrel, np.roll(Vrel, -1, axis=0)):
        edge = b - a
        length = float(np.linalg.norm(edge))
        if length < 1e-15:
            continue
        n_edge = np.cross(edge / length, nu)
        beta = W @ edge
        acc += (
            (W @ n_edge)
            * inv
            * np.exp(1j * (W @ a + 0.5 * beta))
            * length
            * np.sinc(beta / (2.0 * math.pi))
        )
    return acc


def polygon_fourier_integral(vertices, q, normal=None) -> complex:
    """Closed-form ``integral exp(i q . y) ds`` over a planar polygon.

    Parameters
    ----------
    vertices : (nv, 3) array_like
        Simple planar polygon; either winding is accepted.
    q : (3,) array_like
    normal : optional plane normal used only as a cross-check.
    """
    V = np.asarray(vertices, dtype=float)
    return complex(_polygon_integrals(V, normal, np.asarray(q, dtype=float))[0])


def po_far_field_grid(poly: ConvexPolyhedron, wave: PlaneWave, points):
    """Electric and magnetic far-field vectors at many observation directions.

    Returns ``(E, H)`` arrays of shape ``(M, 3)``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    Q = wave.k * (wave.d - pts)
    H = np.zeros((len(pts), 3), dtype=complex)
    cross_dp = np.cross(wave.d, wave.p)
    front = np.flatnonzero(poly.normals @ wave.d < 0.0)
    for j in front:
        integral = _polygon_integrals(poly.face_vertices(j), poly.normals[j], Q)
        lever = np.cross(poly.normals[j], cross_dp)
        H += integral[:, None] * np.cross(pts, lever)
    H *= 1j * wave.k / (2.0 * math.pi)
    E = np.cross(H, pts)
    return E, H


def po_far_field(poly: ConvexPolyhedron, wave: PlaneWave, xhat):
    """Far-field pair ``(E, H)`` at a single unit observation direction."""
    xhat = unit_vector(xhat, "observation direction")
    E, H = po_far_field_grid(poly, wave, xhat[None, :])
    return E[0], H[0]


def sample_phaseless(
    poly: ConvexPolyhedron, wave: PlaneWave, grid: SphericalGrid
) -> FarFieldSamples:
    """Phaseless samples ``|E(xhat)|`` over a full spherical grid."""
    E, _ = po_far_field_grid(poly, wave, grid.points)
    return FarFieldSamples(
        grid=grid, values=np.linalg.norm(E, axis=1), wave=wave, kind=MODULUS
    )


def sample_complex(
    poly: ConvexPolyhedron, wave: PlaneWave, grid: SphericalGrid, kind: str = COMPLEX_E
) -> FarFieldSamples:
    """Complex far-field samples of the requested kind over a grid."""
    if kind not in (COMPLEX_E, COMPLEX_H):
        raise WrongKind(f"cannot sample complex data of kind {kind!r}")
    E, H = po_far_field_grid(poly, wave, grid.points)
    values = E if kind == COMPLEX_E else H
    return FarFieldSamples(grid=grid, values=values, wave=wave, kind=kind)


def apply_translation_phase(samples: FarFieldSamples, z) -> FarFieldSamples:
    """Far field of the obstacle translated by ``z``: multiply by the
    unimodular factor ``exp(i k (d - xhat) . z)``."""
    if not samples.is_complex:
        raise WrongKind("translation phase applies to complex far fields only")
    z = np.asarray(z, dtype=float)
    phase = np.exp(
        1j * samples.wave.k * ((samples.wave.d - samples.grid.points) @ z)
    )
    return FarFieldSamples(
        grid=samples.grid,
        values=samples.values * phase[:, None],
        wave=samples.wave,
        kind=samples.kind,
    )


def add_noise(samples: FarFieldSamples, noise: NoiseModel) -> FarFieldSamples:
    """Multiply each modulus by ``(1 + delta r)``, clamping negatives to zero.

    ``r`` are i.i.d. standard normals drawn in grid order from the seeded
    generator, so output is reproducible.
    """
    if samples.is_complex:
        raise WrongKind("the noise model applies to modulus samples")
    rng = np.random.default_rng(noise.seed)
    factors = 1.0 + noise.delta * rng.standard_normal(samples.grid.size)
    return FarFieldSamples(
        grid=samples.grid,
        values=np.maximum(samples.values * factors, 0.0),
        wave=samples.wave,
        kind=MODULUS,
    )


def save_far_field(samples: FarFieldSamples, path) -> None:
    """Write the far-field text format (header plus one line per point)."""
    w = samples.wave
    lines = [
        f"# kind={samples.kind}",
        "# k={:.17g} d={:.17g} {:.17g} {:.17g} p={:.17g} {:.17g} {:.17g}".format(
            w.k, *w.d, *w.p
        ),
    ]
    for pt, val in zip(samples.grid.points, samples.values):
        coords = " ".join(f"{c:.17g}" for c in pt)
        if samples.kind == MODULUS:
            lines.append(f"{coords}  {val:.17g}")
        else:
            comps = " ".join(f"{v.real:.17g} {v.imag:.17g}" for v in val)
            lines.append(f"{coords}  {comps}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_far_field(path) -> FarFieldSamples:
    """Parse the far-field text format; the grid is re-triangulated."""
    kind = None
    wave = None
    rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("kind="):
                    kind = body[5:].strip()
                elif body.startswith("k="):
                    tokens = body.replace("k=", "").replace("d=", "").replace(
                        "p=", ""
                    ).split()
                    vals = [float(t) for t in tokens]
                    wave = PlaneWave(d=np.array(vals[1:4]), p=np.array(vals[4:7]), k=vals[0])
                continue
            try:
                rows.append([float(t) for t in line.split()])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    if kind is None or wave is None:
        raise ValueError(f"{path}: missing kind/wave header lines")
    data = np.array(rows)
    pts = data[:, :3]
    norms = np.linalg.norm(pts, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise ValueError(f"{path}: grid points must be unit vectors")
    hull = ConvexHull(pts)
    tris = hull.simplices.copy()
    det = np.einsum(
        "ij,ij->i", pts[tris[:, 0]], np.cross(pts[tris[:, 1]], pts[tris[:, 2]])
    )
    flip = det < 0
    tris[flip, 1], tris[flip, 2] = tris[flip, 2], tris[flip, 1].copy()
    grid = SphericalGrid(
        points=pts, triangles=tris, triangle_areas=flat_triangle_areas(pts, tris)
    )
    if kind == MODULUS:
        if data.shape[1] != 4:
            raise ValueError(f"{path}: modulus rows need 4 columns")
        values = data[:, 3]
    else:
        if data.shape[1] != 9:
            raise ValueError(f"{path}: complex rows need 9 columns")
        values = data[:, 3::2] + 1j * data[:, 4::2]
    return FarFieldSamples(grid=grid, values=values, wave=wave, kind=kind)
