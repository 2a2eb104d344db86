"""Contact-surface similarity metric and timing statistics.

The similarity metric samples points on the robot finger's contact surface
by Poisson disk sampling (sample elimination), takes each sample's distance
to the closest triangle of the corresponding model surface, and averages:
an asymmetric robot-to-model mean surface distance.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateTriangle, EmptyInput, EmptyMesh,
                     NonPositiveDuration)
from .hand_model import (FingerId, HandShape, HandState, TriangleMesh,
                         capsule_mesh, finger_surface_mesh)
from .robot import RobotHandModel, robot_link_poses
from .se3 import Transform

ELIMINATION_OVERSAMPLING = 4
ELIMINATION_ALPHA = 8.0


@dataclass(frozen=True)
class ContactSurface:
    mesh: TriangleMesh
    finger: FingerId

    def __post_init__(self):
        if len(self.mesh.triangles) == 0:
            raise EmptyMesh(f"contact surface for {FingerId(self.finger).name} is empty")
        object.__setattr__(self, "finger", FingerId(self.finger))


@dataclass(frozen=True)
class TimingStats:
    frames: int
    mean_hz: float
    min_hz: float

    def __post_init__(self):
        if self.frames < 1:
            raise ValueError("frames must be >= 1")
        if self.min_hz > self.mean_hz:
            raise ValueError("min_hz cannot exceed mean_hz")


def _closest_points_on_triangles(p: np.ndarray, a: np.ndarray, b: np.ndarray,
                                 c: np.ndarray) -> np.ndarray:
    """Closest point to ``p`` on each triangle (a[i], b[i], c[i]).

    Barycentric region classification; vectorized over triangles.
    """
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    with np.errstate(divide="ignore", invalid="ignore"):
        v_ab = np.where(d1 != d3, d1 / (d1 - d3), 0.0)
        w_ac = np.where(d2 != d6, d2 / (d2 - d6), 0.0)
        denom_bc = (d4 - d3) + (d5 - d6)
        w_bc = np.where(denom_bc != 0.0, (d4 - d3) / denom_bc, 0.0)
        denom = va + vb + vc
        v_face = np.where(denom != 0.0, vb / denom, 0.0)
        w_face = np.where(denom != 0.0, vc / denom, 0.0)

    candidates = [
        (d1 <= 0) & (d2 <= 0), a,
        (d3 >= 0) & (d4 <= d3), b,
        (d6 >= 0) & (d5 <= d6), c,
        (vc <= 0) & (d1 >= 0) & (d3 <= 0), a + v_ab[:, None] * ab,
        (vb <= 0) & (d2 >= 0) & (d6 <= 0), a + w_ac[:, None] * ac,
        (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0), b + w_bc[:, None] * (c - b),
    ]
    face = a + v_face[:, None] * ab + w_face[:, None] * ac
    closest = face.copy()
    taken = np.zeros(len(a), dtype=bool)
    for mask, points in zip(candidates[0::2], candidates[1::2]):
        use = mask & ~taken
        closest[use] = points[use]
        taken |= mask
    return closest


def point_triangle_distance(p, tri) -> float:
    """Euclidean distance from a point to the closed triangle."""
    p = np.asarray(p, dtype=float)
    tri = np.asarray(tri, dtype=float)
    if tri.shape != (3, 3):
        raise ValueError(f"triangle: expected shape (3, 3), got {tri.shape}")
    area = 0.5 * np.linalg.norm(np.cross(tri[1] - tri[0], tri[2] - tri[0]))
    if area <= 1e-12:
        raise DegenerateTriangle(f"triangle area {area:.3e} m^2 is degenerate")
    closest = _closest_points_on_triangles(p[None, :], tri[None, 0], tri[None, 1],
                                           tri[None, 2])[0]
    return float(np.linalg.norm(p - closest))


def min_distance_to_mesh(points, mesh: TriangleMesh) -> np.ndarray:
    """Minimum point-to-triangle distance per query point (brute force)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    a = mesh.vertices[mesh.triangles[:, 0]]
    b = mesh.vertices[mesh.triangles[:, 1]]
    c = mesh.vertices[mesh.triangles[:, 2]]
    out = np.empty(len(points))
    for i, p in enumerate(points):
        closest = _closest_points_on_triangles(p[None, :], a, b, c)
        out[i] = math.sqrt(float(np.min(np.sum((closest - p) ** 2, axis=1))))
    return out


def poisson_disk_radius(area: float, n: int) -> float:
    """Expected Poisson-disk radius for n samples on a surface of given area."""
    return math.sqrt(area / (2.0 * math.sqrt(3.0) * n))


def _area_weighted_samples(mesh: TriangleMesh, count: int, rng) -> np.ndarray:
    areas = 0.5 * np.linalg.norm(
        np.cross(mesh.vertices[mesh.triangles[:, 1]] - mesh.vertices[mesh.triangles[:, 0]],
                 mesh.vertices[mesh.triangles[:, 2]] - mesh.vertices[mesh.triangles[:, 0]]),
        axis=1)
    total = float(areas.sum())
    if total <= 0.0:
        raise EmptyMesh("mesh has zero surface area")
    tri = rng.choice(len(areas), size=count, p=areas / total)
    u = rng.random(count)
    v = rng.random(count)
    s = np.sqrt(u)
    w0 = 1.0 - s
    w1 = s * (1.0 - v)
    w2 = s * v
    return (w0[:, None] * mesh.vertices[mesh.triangles[tri, 0]]
            + w1[:, None] * mesh.vertices[mesh.triangles[tri, 1]]
            + w2[:, None] * mesh.vertices[mesh.triangles[tri, 2]])


def poisson_sample(mesh: TriangleMesh, n: int, seed: int) -> np.ndarray:
    """``n`` well-spread points on the mesh surface, deterministic per seed.

    Sample elimination: draw an area-weighted uniform oversampling, then
    repeatedly remove the point most crowded by its neighbors (weight
    ``(1 - d/(2 r_max))^8`` summed over neighbors within ``2 r_max``) until
    ``n`` points remain.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(mesh.triangles) == 0:
        raise EmptyMesh("cannot sample an empty mesh")
    rng = np.random.default_rng(seed)
    m = ELIMINATION_OVERSAMPLING * n
    points = _area_weighted_samples(mesh, m, rng)

    r2 = 2.0 * poisson_disk_radius(mesh.area(), n)
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    contrib = np.where(dist < r2, (1.0 - np.minimum(dist, r2) / r2) ** ELIMINATION_ALPHA, 0.0)
    np.fill_diagonal(contrib, 0.0)
    weights = contrib.sum(axis=1)

    alive = np.ones(m, dtype=bool)
    for _ in range(m - n):
        target = int(np.argmax(np.where(alive, weights, -np.inf)))
        alive[target] = False
        weights -= contrib[:, target]
    return points[alive]


def surface_distance(robot_surface: ContactSurface, model_surface: ContactSurface,
                     n: int = 100, seed: int = 0) -> float:
    """Mean distance from robot-surface samples to the model surface (meters)."""
    samples = poisson_sample(robot_surface.mesh, n, seed)
    return float(np.mean(min_distance_to_mesh(samples, model_surface.mesh)))


def timing_stats(durations) -> TimingStats:
    """Per-frame frequencies (1/duration): their mean and minimum in Hz."""
    durations = np.asarray(list(durations), dtype=float)
    if durations.size == 0:
        raise EmptyInput("no durations")
    if np.any(durations <= 0.0):
        raise NonPositiveDuration("durations must be positive")
    freq = 1.0 / durations
    return TimingStats(frames=int(durations.size),
                       mean_hz=float(freq.mean()),
                       min_hz=float(freq.min()))


def measure_frames(fn, items):
    """Run ``fn`` per item, returning (results, per-item wall-clock seconds)."""
    results = []
    durations = []
    for item in items:
        start = time.perf_counter()
        results.append(fn(item))
        durations.append(time.perf_counter() - start)
    return results, durations


# --- contact surface construction ------------------------------------------

def model_contact_surfaces(shape: HandShape, state: HandState,
                           segments: int = 16) -> dict:
    """Palmar half-capsule surfaces of the posed hand model, in world frame."""
    surfaces = {}
    for finger in FingerId:
        mesh = finger_surface_mesh(shape, finger, state.finger_q[finger - 1],
                                   segments_per_capsule=segments, contact_only=True)
        surfaces[finger] = ContactSurface(mesh=mesh.transformed(state.pose),
                                          finger=finger)
    return surfaces


def robot_contact_surfaces(model: RobotHandModel, actuated_values: dict,
                           base_pose: Transform | None = None,
                           segments: int = 16) -> dict:
    """Contact half-capsules of the posed robot hand, per configured finger."""
    poses = robot_link_poses(model, actuated_values)
    base = Transform.identity() if base_pose is None else base_pose
    surfaces = {}
    for finger, capsules in model.contact_capsules.items():
        meshes = []
        for spec in capsules:
            link_pose = poses[spec.link]
            p0 = base.apply(link_pose.apply(spec.start))
            p1 = base.apply(link_pose.apply(spec.end))
            palmar = base.rotation @ (link_pose.rotation @ spec.palmar)
            meshes.append(capsule_mesh(p0, p1, spec.radius, segments,
                                       half_direction=palmar))
        if meshes:
            surfaces[finger] = ContactSurface(mesh=TriangleMesh.merge(meshes),
                                              finger=finger)
    return surfaces
