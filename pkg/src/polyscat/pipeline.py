"""Batch experiment driver: dataset synthesis and the full three-step
recovery (normals/areas -> offsets/polyhedron -> location), reproducing the
published tetrahedron/cube/prism experiments from flat text configs.

Config files are flat ``key = value`` text with one repeated key::

    obstacle = tetrahedron.obs
    incident = 1 0 0  0 0 1      # d then p, one line per incident wave
    lambda_shape = 0.5
    lambda_loc = 50
    grid_shape = 7518
    grid_loc = 1878
    cutoff = 10
    e_tol = 0.5
    exclusion_radius = 0.3
    cluster_angle_deg = 5
    multistart = 5 11
    noise_delta = 0
    noise_seed = 7
    location = 50 50 50
    region = 0 100 0 100 0 100
    region_resolution = 11 11 11
    step3_oracle = true
    indicator_polarity = max
    merge_vertices = 0
    output_dir = out

All stages are deterministic for a fixed config and seed; report files are
byte-identical across runs.  ``POLYSCAT_THREADS`` controls the number of
worker threads for the per-direction stage (default 1).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import forward, geometry, locator, maxima, minkowski, sphgrid


class PipelineError(RuntimeError):
    """A pipeline stage failed; the message carries the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description (see module docstring for keys)."""

    obstacle: Path
    incident: tuple  # of (d, p) pairs
    output_dir: Path
    lambda_shape: float = 0.5
    lambda_loc: float = 50.0
    grid_shape: int = 7518
    grid_loc: int = 1878
    thresholds: maxima.RecoveryThresholds = field(
        default_factory=maxima.RecoveryThresholds
    )
    noise: forward.NoiseModel = field(
        default_factory=lambda: forward.NoiseModel(delta=0.0, seed=7)
    )
    location: np.ndarray = field(default_factory=lambda: np.zeros(3))
    region: locator.SampleRegion = field(
        default_factory=lambda: locator.SampleRegion(
            lower=[0.0, 0.0, 0.0], upper=[100.0, 100.0, 100.0]
        )
    )
    step3_oracle: bool = True
    maximize_indicator: bool = True
    merge_vertices: float = 0.0

    def __post_init__(self):
        if not self.incident:
            raise ValueError("config needs at least one incident direction")
        if self.lambda_shape <= 0 or self.lambda_loc <= 0:
            raise ValueError("wavelengths must be positive")
        for d, p in self.incident:
            if abs(float(np.dot(d, p))) > 1e-12:
                raise ValueError("incident polarization must be orthogonal to d")

    def shape_waves(self):
        k = 2.0 * math.pi / self.lambda_shape
        return [forward.PlaneWave(d=d, p=p, k=k) for d, p in self.incident]

    def loc_wave(self):
        d, p = self.incident[0]
        return forward.PlaneWave(d=d, p=p, k=2.0 * math.pi / self.lambda_loc)


def _parse_bool(text: str) -> bool:
    if text.lower() in ("true", "yes", "1", "on"):
        return True
    if text.lower() in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def parse_config(path) -> ExperimentConfig:
    """Read and validate a flat ``key = value`` experiment config."""
    path = Path(path)
    raw: dict = {}
    incident = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in body.split("=", 1))
            if key == "incident":
                nums = [float(t) for t in value.split()]
                if len(nums) != 6:
                    raise ValueError(
                        f"{path}:{lineno}: incident needs 6 numbers (d then p)"
                    )
                incident.append(
                    (
                        geometry.unit_vector(nums[:3], "incident direction"),
                        geometry.unit_vector(nums[3:], "polarization"),
                    )
                )
            else:
                raw[key] = value

    def take(key, default=None):
        return raw.pop(key, default)

    base = path.parent
    obstacle = take("obstacle")
    if obstacle is None:
        raise ValueError(f"{path}: missing 'obstacle'")
    output_dir = take("output_dir", "out")
    thresholds = maxima.RecoveryThresholds(
        e_tol=float(take("e_tol", 0.5)),
        exclusion_radius=float(take("exclusion_radius", 0.3)),
        cluster_angle=math.radians(float(take("cluster_angle_deg", 5.0))),
        cutoff=int(take("cutoff", 10)),
        multistart=tuple(int(t) for t in take("multistart", "5 11").split()),
    )
    noise = forward.NoiseModel(
        delta=float(take("noise_delta", 0.0)), seed=int(take("noise_seed", 7))
    )
    region_nums = [float(t) for t in take("region", "0 100 0 100 0 100").split()]
    if len(region_nums) != 6:
        raise ValueError(f"{path}: region needs 6 numbers (x0 x1 y0 y1 z0 z1)")
    region = locator.SampleRegion(
        lower=region_nums[0::2],
        upper=region_nums[1::2],
        resolution=tuple(int(t) for t in take("region_resolution", "11 11 11").split()),
    )
    polarity = take("indicator_polarity", "max")
    if polarity not in ("max", "min"):
        raise ValueError(f"{path}: indicator_polarity must be 'max' or 'min'")
    config = ExperimentConfig(
        obstacle=(base / obstacle).resolve(),
        incident=tuple(incident),
        output_dir=(base / output_dir).resolve(),
        lambda_shape=float(take("lambda_shape", 0.5)),
        lambda_loc=float(take("lambda_loc", 50.0)),
        grid_shape=int(take("grid_shape", 7518)),
        grid_loc=int(take("grid_loc", 1878)),
        thresholds=thresholds,
        noise=noise,
        location=np.array([float(t) for t in take("location", "0 0 0").split()]),
        region=region,
        step3_oracle=_parse_bool(take("step3_oracle", "true")),
        maximize_indicator=polarity == "max",
        merge_vertices=float(take("merge_vertices", 0.0)),
    )
    if raw:
        raise ValueError(f"{path}: unknown keys {sorted(raw)}")
    return config


# ---------------------------------------------------------------------------
# dataset synthesis


def _shape_data_path(config: ExperimentConfig, index: int) -> Path:
    return config.output_dir / "data" / f"shape_{index:02d}.txt"


def _loc_data_path(config: ExperimentConfig) -> Path:
    return config.output_dir / "data" / "location.txt"


def synthesize_dataset(config: ExperimentConfig) -> list:
    """Write one modulus far-field file per incident pair plus the complex
    low-frequency file for the locator.  Deterministic for a fixed seed."""
    try:
        poly = geometry.load_obstacle(config.obstacle)
    except (OSError, ValueError, geometry.GeometryError) as exc:
        raise PipelineError("synth", f"cannot load obstacle: {exc}") from exc
    (config.output_dir / "data").mkdir(parents=True, exist_ok=True)
    written = []

    grid = sphgrid.build_grid(config.grid_shape)
    for i, wave in enumerate(config.shape_waves()):
        samples = forward.sample_phaseless(poly, wave, grid)
        if config.noise.delta > 0:
            per_direction = forward.NoiseModel(
                delta=config.noise.delta, seed=config.noise.seed + i
            )
            samples = forward.add_noise(samples, per_direction)
        path = _shape_data_path(config, i)
        forward.save_far_field(samples, path)
        written.append(path)

    loc_grid = sphgrid.build_grid(config.grid_loc)
    loc_wave = config.loc_wave()
    if config.step3_oracle:
        samples = locator.degree_one_oracle(loc_grid, loc_wave, config.location)
    else:
        samples = forward.sample_complex(poly, loc_wave, loc_grid)
        samples = forward.apply_translation_phase(samples, config.location)
    path = _loc_data_path(config)
    forward.save_far_field(samples, path)
    written.append(path)
    return written


# ---------------------------------------------------------------------------
# recovery


@dataclass(frozen=True)
class RecoveryReport:
    """Everything the pipeline recovered, plus where it was written."""

    raw_faces: maxima.RecoveredFaceSet
    effective: maxima.RecoveredFaceSet
    fit: minkowski.OffsetFit
    reconstructed: geometry.ConvexPolyhedron
    location: np.ndarray
    indicator_value: float
    located: geometry.ConvexPolyhedron
    files: tuple


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("POLYSCAT_THREADS", "1")))
    except ValueError:
        return 1


def _step1_single(index, samples, thresholds, wavelength):
    expansion = sphgrid.sht_forward(samples, thresholds.cutoff)
    peaks = maxima.find_local_maxima(
        expansion,
        incident_direction=samples.wave.d,
        wavelength=wavelength,
        starts=thresholds.multistart,
    )
    selected = maxima.select_critical_directions(peaks, thresholds)
    return maxima.peaks_to_faces(selected, source_index=index)


def run_pipeline(config: ExperimentConfig) -> RecoveryReport:
    """Execute steps 1-3 and write the report tables.

    Pre-synthesized far-field files in the output directory are reused;
    missing ones are synthesized first.  Any stage failure aborts with a
    stage-tagged :class:`PipelineError`, keeping partial artifacts on disk.
    """
    needed = [_shape_data_path(config, i) for i in range(len(config.incident))]
    needed.append(_loc_data_path(config))
    if not all(p.exists() for p in needed):
        synthesize_dataset(config)

    try:
        shape_samples = [
            forward.load_far_field(_shape_data_path(config, i))
            for i in range(len(config.incident))
        ]
        loc_samples = forward.load_far_field(_loc_data_path(config))
    except (OSError, ValueError) as exc:
        raise PipelineError("load", str(exc)) from exc

    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    files = []

    # Step 1: peaks -> normals and areas, one incident direction at a time
    try:
        threads = _thread_count()
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                face_sets = list(
                    pool.map(
                        lambda item: _step1_single(
                            item[0], item[1], config.thresholds, config.lambda_shape
                        ),
                        enumerate(shape_samples),
                    )
                )
        else:
            face_sets = [
                _step1_single(i, s, config.thresholds, config.lambda_shape)
                for i, s in enumerate(shape_samples)
            ]
        raw_faces = maxima.merge_face_sets(face_sets)
        effective = maxima.cluster_effective_normals(
            raw_faces, config.thresholds.cluster_angle
        )
    except Exception as exc:
        raise PipelineError("step1", str(exc)) from exc
    files.append(_write_face_table(out / "recovered_faces.csv", raw_faces))
    files.append(_write_face_table(out / "effective_normals.csv", effective))
    if len(effective) < 4:
        raise PipelineError(
            "step1", f"only {len(effective)} effective normals; need at least 4"
        )

    # Step 2: balanced areas -> offsets -> polyhedron
    try:
        balanced = minkowski.balance_areas(effective.normals, effective.areas)
        fit = minkowski.fit_offsets(effective.normals, balanced)
        intersection = geometry.halfspace_intersection(effective.normals, fit.offsets)
        reconstructed = intersection.polyhedron
        if config.merge_vertices > 0:
            reconstructed = merge_close_vertices(
                reconstructed, config.merge_vertices * reconstructed.diameter
            )
    except Exception as exc:
        raise PipelineError("step2", str(exc)) from exc
    files.append(_write_offsets(out / "offsets.csv", fit))
    files.append(
        _write_areas(out / "areas.csv", effective, fit)
    )
    files.append(_write_vertices(out / "vertices.csv", reconstructed))
    files.append(_write_fit_report(out / "fit_report.txt", fit, intersection))

    # Step 3: low-frequency location
    try:
        z_star, ind_val = locator.locate(
            loc_samples, config.region, maximize=config.maximize_indicator
        )
        located = reconstructed.translated(z_star - reconstructed.centroid)
    except Exception as exc:
        raise PipelineError("step3", str(exc)) from exc
    files.append(_write_location(out / "location.csv", z_star, ind_val))
    scan_pts, scan_vals = locator.scan_indicator(loc_samples, config.region)
    files.append(_write_scan(out / "indicator_scan.txt", scan_pts, scan_vals))
    geometry.save_obstacle(reconstructed, out / "recovered.obs")
    files.append(out / "recovered.obs")
    geometry.save_obstacle(located, out / "recovered_located.obs")
    files.append(out / "recovered_located.obs")

    return RecoveryReport(
        raw_faces=raw_faces,
        effective=effective,
        fit=fit,
        reconstructed=reconstructed,
        location=z_star,
        indicator_value=ind_val,
        located=located,
        files=tuple(files),
    )


def merge_close_vertices(
    poly: geometry.ConvexPolyhedron, tolerance: float
) -> geometry.ConvexPolyhedron:
    """Optional cleanup: average vertices closer than ``tolerance`` and
    rebuild the convex hull (faces come back triangulated)."""
    from scipy.spatial import ConvexHull

    merged = geometry._merge_close_points(np.asarray(poly.vertices), tolerance)
    if len(merged) == len(poly.vertices):
        return poly
    hull = ConvexHull(merged)
    tris = hull.simplices.copy()
    center = merged.mean(axis=0)
    for t in tris:
        nvec = np.cross(merged[t[1]] - merged[t[0]], merged[t[2]] - merged[t[0]])
        if nvec @ (merged[t[0]] - center) < 0:
            t[1], t[2] = t[2], t[1]
    return geometry.build_polyhedron(merged, [tuple(t) for t in tris])


# ---------------------------------------------------------------------------
# report writers (fixed formatting keeps outputs byte-identical)


def _fmt(x: float) -> str:
    return f"{x:.9f}"


def _write_face_table(path: Path, faces: maxima.RecoveredFaceSet) -> Path:
    lines = ["source_d_index,nu_x,nu_y,nu_z,peak_value,area"]
    for i in range(len(faces)):
        nu = faces.normals[i]
        lines.append(
            ",".join(
                [str(int(faces.source_indices[i]))]
                + [_fmt(c) for c in nu]
                + [_fmt(faces.peak_values[i]), _fmt(faces.areas[i])]
            )
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_offsets(path: Path, fit: minkowski.OffsetFit) -> Path:
    lines = ["face,offset"]
    for j, a in enumerate(fit.offsets):
        lines.append(f"{j},{_fmt(a)}")
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_areas(
    path: Path, effective: maxima.RecoveredFaceSet, fit: minkowski.OffsetFit
) -> Path:
    fitted = minkowski.facet_areas(fit.normals, fit.offsets)
    lines = ["face,recovered_area,balanced_area,fitted_area"]
    for j in range(len(fit.offsets)):
        lines.append(
            f"{j},{_fmt(effective.areas[j])},{_fmt(fit.target_areas[j])},{_fmt(fitted[j])}"
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_vertices(path: Path, poly: geometry.ConvexPolyhedron) -> Path:
    lines = ["vertex,x,y,z"]
    for i, v in enumerate(poly.vertices):
        lines.append(f"{i}," + ",".join(_fmt(c) for c in v))
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_location(path: Path, z: np.ndarray, value: float) -> Path:
    lines = ["z_x,z_y,z_z,indicator", ",".join(_fmt(c) for c in z) + f",{_fmt(value)}"]
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_scan(path: Path, points: np.ndarray, values: np.ndarray) -> Path:
    lines = [
        " ".join([_fmt(c) for c in pt] + [_fmt(v)]) for pt, v in zip(points, values)
    ]
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_fit_report(
    path: Path, fit: minkowski.OffsetFit, intersection: geometry.IntersectionResult
) -> Path:
    lines = [
        f"residual = {fit.residual:.6e}",
        f"iterations = {fit.iterations}",
        f"converged = {fit.converged}",
        f"vanished_facets = {list(fit.vanished)}",
        f"intersection_vanished = {list(intersection.vanished)}",
    ]
    path.write_text("\n".join(lines) + "\n")
    return path
