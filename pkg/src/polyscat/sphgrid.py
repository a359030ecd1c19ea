"""Sphere sampling grids, real spherical harmonics and the forward
transform used to turn scattered sphere data into a smooth band-limited
surrogate.

The scalar basis is real and orthonormal: ``Y(n,0) = Pbar(n,0)`` and
``Y(n,+-m) = sqrt(2) Pbar(n,m) {cos,sin}(m phi)`` with fully normalized
associated Legendre functions ``Pbar`` evaluated by stable three-term
recurrences.  Tangential vector harmonics come from the surface gradient,
``U = Grad Y / sqrt(n(n+1))`` and ``V = xhat x U``; the ``1/sin(theta)``
factors are carried through scaled recurrences, so poles need no special
handling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.spatial import ConvexHull, SphericalVoronoi

FOUR_PI = 4.0 * math.pi
_P00 = 1.0 / math.sqrt(FOUR_PI)


@dataclass(frozen=True)
class SphericalGrid:
    """Near-uniform direction set with a covering triangulation.

    Attributes
    ----------
    points : (N, 3) ndarray of unit vectors
    triangles : (T, 3) int ndarray, outward-oriented vertex triples
    triangle_areas : (T,) ndarray
        Flat or spherical triangle areas, fixed at construction.
    """

    points: np.ndarray
    triangles: np.ndarray
    triangle_areas: np.ndarray

    @property
    def size(self) -> int:
        return len(self.points)

    @cached_property
    def point_weights(self) -> np.ndarray:
        """Quadrature weight per point: a third of each incident triangle."""
        w = np.zeros(self.size)
        np.add.at(w, self.triangles.ravel(), np.repeat(self.triangle_areas / 3.0, 3))
        w.flags.writeable = False
        return w

    def integrate(self, values: np.ndarray):
        """Vertex-sum triangle quadrature of per-point samples."""
        return np.tensordot(self.point_weights, values, axes=(0, 0))


def fibonacci_points(n: int) -> np.ndarray:
    """``n`` quasi-uniform points on the unit sphere (golden-angle lattice)."""
    i = np.arange(n, dtype=float) + 0.5
    z = 1.0 - 2.0 * i / n
    theta = np.arccos(np.clip(z, -1.0, 1.0))
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    phi = 2.0 * math.pi * i / golden
    st = np.sin(theta)
    return np.column_stack((st * np.cos(phi), st * np.sin(phi), z))


def flat_triangle_areas(points: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    a = points[triangles[:, 0]]
    b = points[triangles[:, 1]]
    c = points[triangles[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def spherical_triangle_areas(points: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Spherical excess per triangle (Van Oosterom-Strackee solid angle)."""
    a = points[triangles[:, 0]]
    b = points[triangles[:, 1]]
    c = points[triangles[:, 2]]
    num = np.abs(np.einsum("ij,ij->i", a, np.cross(b, c)))
    den = 1.0 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + np.einsum(
        "ij,ij->i", c, a
    )
    return 2.0 * np.arctan2(num, den)


def lloyd_relax(points: np.ndarray, iterations: int, omega: float = 1.9) -> np.ndarray:
    """Move each point toward the centroid of its spherical Voronoi cell.

    A few dozen over-relaxed sweeps (``omega > 1`` accelerates the linear
    convergence) turn the Fibonacci lattice into a centroidal mesh with
    nearly equal, nearly equilateral triangles, which the vertex-sum
    quadrature needs for its leading error terms to cancel globally.
    Fully deterministic.
    """
    pts = np.asarray(points, dtype=float).copy()
    for _ in range(iterations):
        sv = SphericalVoronoi(pts, radius=1.0)
        sv.sort_vertices_of_regions()
        lens = np.array([len(r) for r in sv.regions])
        owner = np.repeat(np.arange(len(pts)), lens)
        ring = np.concatenate(sv.regions)
        ring_next = np.concatenate([np.roll(r, -1) for r in sv.regions])
        a = sv.vertices[ring]
        b = sv.vertices[ring_next]
        c = pts[owner]
        tri_area = 0.5 * np.linalg.norm(np.cross(a - c, b - c), axis=1)
        tri_cen = (a + b + c) / 3.0
        acc = np.zeros_like(pts)
        tot = np.zeros(len(pts))
        np.add.at(acc, owner, tri_area[:, None] * tri_cen)
        np.add.at(tot, owner, tri_area)
        good = tot > 0
        target = pts.copy()
        target[good] = acc[good] / tot[good, None]
        pts = pts + omega * (target - pts)
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return pts


def _triangulate(pts: np.ndarray) -> np.ndarray:
    """Outward-oriented convex-hull triangulation of unit points."""
    hull = ConvexHull(pts)
    tris = hull.simplices.copy()
    det = np.einsum(
        "ij,ij->i", pts[tris[:, 0]], np.cross(pts[tris[:, 1]], pts[tris[:, 2]])
    )
    flip = det < 0
    tris[flip, 1], tris[flip, 2] = tris[flip, 2], tris[flip, 1].copy()
    return tris


@lru_cache(maxsize=8)
def _build_grid_cached(n: int, spherical_areas: bool, smoothing: int) -> SphericalGrid:
    pts = fibonacci_points(n)
    if smoothing > 0:
        pts = lloyd_relax(pts, smoothing)
    tris = _triangulate(pts)
    areas = (
        spherical_triangle_areas(pts, tris)
        if spherical_areas
        else flat_triangle_areas(pts, tris)
    )
    pts.flags.writeable = False
    tris.flags.writeable = False
    areas.flags.writeable = False
    return SphericalGrid(points=pts, triangles=tris, triangle_areas=areas)


def build_grid(n: int, spherical_areas: bool = False, smoothing: int = 60) -> SphericalGrid:
    """Near-uniform grid of ``n`` points triangulated by its convex hull.

    Points start on a Fibonacci lattice and are relaxed by ``smoothing``
    Lloyd sweeps (``smoothing=0`` gives the raw lattice).  Construction is
    deterministic; results are cached per parameter triple.

    Parameters
    ----------
    n : int
        Number of points, at least 12.
    spherical_areas : bool
        Attach spherical-excess areas instead of flat triangle areas.
    smoothing : int
        Lloyd relaxation sweeps applied to the lattice.
    """
    if n < 12:
        raise ValueError("need at least 12 grid points")
    return _build_grid_cached(int(n), bool(spherical_areas), int(smoothing))


# ---------------------------------------------------------------------------
# associated Legendre recurrences (fully normalized, no Condon-Shortley)


def _tri_index(n: int, m: int) -> int:
    return n * (n + 1) // 2 + m


@lru_cache(maxsize=16)
def _recurrence_coeffs(n_max: int):
    """Constant factors of the normalized Legendre recurrences up to n_max."""
    diag = [0.0] * (n_max + 1)  # P(m,m) from P(m-1,m-1)
    step = [0.0] * (n_max + 1)  # P(m+1,m) from P(m,m)
    a = np.zeros((n_max + 1, n_max + 1))
    b = np.zeros((n_max + 1, n_max + 1))
    for m in range(1, n_max + 1):
        diag[m] = math.sqrt((2 * m + 1) / (2.0 * m))
    for m in range(n_max):
        step[m] = math.sqrt(2 * m + 3)
        for n in range(m + 2, n_max + 1):
            a[n, m] = math.sqrt((4.0 * n * n - 1.0) / (n * n - m * m))
            b[n, m] = math.sqrt(((n - 1.0) ** 2 - m * m) / (4.0 * (n - 1.0) ** 2 - 1.0))
    return tuple(diag), tuple(step), a, b


def _legendre_tables(n_max, ct, st, want_deriv=False, want_over_sin=False):
    """Normalized ``Pbar(n,m)`` tables at ``cos/sin(theta)`` arrays.

    Returns ``(P, dP, Pi)`` where rows are packed by ``n(n+1)/2 + m``; ``dP``
    is the theta derivative and ``Pi = Pbar / sin(theta)`` (rows m >= 1 only,
    computed without dividing so poles stay finite).  Unrequested tables are
    None.
    """
    ct = np.asarray(ct, dtype=float)
    st = np.asarray(st, dtype=float)
    diag, step, a, b = _recurrence_coeffs(n_max)
    rows = _tri_index(n_max, n_max) + 1
    shape = (rows,) + ct.shape
    P = np.empty(shape)
    dP = np.empty(shape) if want_deriv else None
    Pi = np.empty(shape) if want_over_sin else None

    P[0] = _P00
    if want_deriv:
        dP[0] = 0.0
    for m in range(0, n_max + 1):
        im = _tri_index(m, m)
        if m >= 1:
            prev = _tri_index(m - 1, m - 1)
            P[im] = diag[m] * st * P[prev]
            if want_deriv:
                dP[im] = diag[m] * (ct * P[prev] + st * dP[prev])
            if want_over_sin:
                Pi[im] = diag[m] * (Pi[prev] * st if m >= 2 else _P00)
        if m == n_max:
            break
        i1 = _tri_index(m + 1, m)
        P[i1] = step[m] * ct * P[im]
        if want_deriv:
            dP[i1] = step[m] * (ct * dP[im] - st * P[im])
        if want_over_sin and m >= 1:
            Pi[i1] = step[m] * ct * Pi[im]
        for n in range(m + 2, n_max + 1):
            i0 = _tri_index(n - 2, m)
            i1 = _tri_index(n - 1, m)
            i2 = _tri_index(n, m)
            P[i2] = a[n, m] * (ct * P[i1] - b[n, m] * P[i0])
            if want_deriv:
                dP[i2] = a[n, m] * (ct * dP[i1] - st * P[i1] - b[n, m] * dP[i0])
            if want_over_sin and m >= 1:
                Pi[i2] = a[n, m] * (ct * Pi[i1] - b[n, m] * Pi[i0])
    return P, dP, Pi


def _sphere_coords(points):
    """Return ``(ct, st, cphi, sphi)`` with the ``phi = 0`` chart at poles."""
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    ct = pts[:, 2]
    st = np.hypot(pts[:, 0], pts[:, 1])
    safe = np.where(st > 0.0, st, 1.0)
    cphi = np.where(st > 0.0, pts[:, 0] / safe, 1.0)
    sphi = np.where(st > 0.0, pts[:, 1] / safe, 0.0)
    return ct, st, cphi, sphi, single


def harmonic_basis(points, n_c: int) -> np.ndarray:
    """Design matrix of real orthonormal harmonics, column ``n^2 + n + m``.

    Parameters
    ----------
    points : (N, 3) array_like of unit vectors
    n_c : int
        Cut-off degree; the matrix has ``(n_c + 1)^2`` columns.
    """
    ct, st, cphi, sphi, single = _sphere_coords(points)
    P, _, _ = _legendre_tables(n_c, ct, st)
    npts = len(ct)
    B = np.empty((npts, (n_c + 1) ** 2))
    cos_m = np.ones(npts)
    sin_m = np.zeros(npts)
    for n in range(n_c + 1):
        B[:, n * n + n] = P[_tri_index(n, 0)]
    sq2 = math.sqrt(2.0)
    for m in range(1, n_c + 1):
        cos_m, sin_m = cos_m * cphi - sin_m * sphi, sin_m * cphi + cos_m * sphi
        for n in range(m, n_c + 1):
            pnm = P[_tri_index(n, m)]
            B[:, n * n + n + m] = sq2 * pnm * cos_m
            B[:, n * n + n - m] = sq2 * pnm * sin_m
    return B[0] if single else B


def eval_scalar_harmonic(n: int, m: int, points):
    """Real orthonormal spherical harmonic of degree ``n`` and order ``m``."""
    if abs(m) > n:
        raise ValueError("need |m| <= n")
    B = harmonic_basis(points, n)
    return B[..., n * n + n + m]


def eval_vector_harmonics(n: int, m: int, points):
    """Tangential vector harmonics ``(U, V)`` at one or many directions.

    ``U = Grad Y / sqrt(n(n+1))`` and ``V = xhat x U``; both are unit-norm in
    the tangential L2 sense and pointwise orthogonal to each other and to
    ``xhat``.
    """
    if n < 1:
        raise ValueError("vector harmonics need degree n >= 1")
    if abs(m) > n:
        raise ValueError("need |m| <= n")
    ct, st, cphi, sphi, single = _sphere_coords(points)
    P, dP, Pi = _legendre_tables(n, ct, st, want_deriv=True, want_over_sin=True)
    idx = _tri_index(n, abs(m))
    mm = abs(m)
    if mm == 0:
        g_theta = dP[idx]
        g_phi = np.zeros_like(g_theta)
    else:
        cos_m = np.cos(mm * np.arctan2(sphi, cphi))
        sin_m = np.sin(mm * np.arctan2(sphi, cphi))
        sq2 = math.sqrt(2.0)
        if m > 0:
            g_theta = sq2 * dP[idx] * cos_m
            g_phi = -sq2 * mm * Pi[idx] * sin_m
        else:
            g_theta = sq2 * dP[idx] * sin_m
            g_phi = sq2 * mm * Pi[idx] * cos_m
    theta_hat = np.stack((ct * cphi, ct * sphi, -st), axis=-1)
    phi_hat = np.stack((-sphi, cphi, np.zeros_like(ct)), axis=-1)
    scale = 1.0 / math.sqrt(n * (n + 1.0))
    U = scale * (g_theta[..., None] * theta_hat + g_phi[..., None] * phi_hat)
    V = scale * (g_theta[..., None] * phi_hat - g_phi[..., None] * theta_hat)
    if single:
        return U[0], V[0]
    return U, V


# ---------------------------------------------------------------------------
# forward transform and band-limited synthesis


@dataclass(frozen=True)
class HarmonicExpansion:
    """Real spherical-harmonic coefficients up to a cut-off degree.

    ``coefficients[n^2 + n + m]`` stores the (n, m) coefficient.
    """

    cutoff: int
    coefficients: np.ndarray

    def __post_init__(self):
        expected = (self.cutoff + 1) ** 2
        if len(self.coefficients) != expected:
            raise ValueError(f"expected {expected} coefficients")

    def coefficient(self, n: int, m: int) -> float:
        if n > self.cutoff or abs(m) > n:
            raise ValueError("coefficient outside the expansion")
        return float(self.coefficients[n * n + n + m])


def _grid_and_values(samples):
    if isinstance(samples, tuple) and len(samples) == 2:
        grid, values = samples
    else:
        grid, values = samples.grid, samples.values
    return grid, np.asarray(values, dtype=float)


def sht_forward(samples, cutoff: int) -> HarmonicExpansion:
    """Coefficients of per-point sphere data via vertex-sum triangle quadrature.

    ``samples`` is either phaseless far-field samples (anything exposing
    ``grid`` and scalar ``values``) or an explicit ``(grid, values)`` pair.
    """
    grid, values = _grid_and_values(samples)
    B = harmonic_basis(grid.points, cutoff)
    coeffs = B.T @ (grid.point_weights * values)
    coeffs.flags.writeable = False
    return HarmonicExpansion(cutoff=cutoff, coefficients=coeffs)


def synthesize(expansion: HarmonicExpansion, points):
    """Evaluate the band-limited expansion at one or many unit directions."""
    B = harmonic_basis(points, expansion.cutoff)
    return B @ expansion.coefficients


def dump_expansion(expansion: HarmonicExpansion, path) -> None:
    """Write ``n m c`` lines."""
    with open(path, "w") as fh:
        for n in range(expansion.cutoff + 1):
            for m in range(-n, n + 1):
                fh.write(f"{n} {m} {expansion.coefficient(n, m):.17g}\n")


def load_expansion(path) -> HarmonicExpansion:
    entries = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            n_s, m_s, c_s = line.split()
            entries[(int(n_s), int(m_s))] = float(c_s)
    cutoff = max(n for n, _ in entries)
    coeffs = np.zeros((cutoff + 1) ** 2)
    for (n, m), c in entries.items():
        coeffs[n * n + n + m] = c
    return HarmonicExpansion(cutoff=cutoff, coefficients=coeffs)
