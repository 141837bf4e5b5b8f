"""Rigid-plus-uniform-scale transforms and their randomized generation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .stl import TriangleMesh


@dataclass(frozen=True)
class RigidTransform:
    """p -> scale * R @ p + translation, with R orthonormal (det +1)."""

    rotation: np.ndarray
    translation: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64))
        object.__setattr__(self, "scale", float(self.scale))
        if self.rotation.shape != (3, 3):
            raise ValueError("rotation must be a 3x3 matrix")
        if self.translation.shape != (3,):
            raise ValueError("translation must be a 3-vector")
        if self.scale <= 0.0:
            raise ValueError("scale must be positive")


@dataclass(frozen=True)
class AngleJitterParams:
    """Bounded uniform jitter for attachment transforms (degrees, scale)."""

    azimuth_range: float = 0.0
    pitch_range: float = 0.0
    scale_range: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        if self.azimuth_range < 0 or self.pitch_range < 0:
            raise ValueError("jitter ranges must be non-negative")
        lo, hi = self.scale_range
        if not (0 < lo <= hi):
            raise ValueError("scale_range must satisfy 0 < min <= max")


def identity() -> RigidTransform:
    return RigidTransform(np.eye(3), np.zeros(3), 1.0)


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Transform equal to applying b first, then a."""
    rotation = a.rotation @ b.rotation
    translation = a.scale * (a.rotation @ b.translation) + a.translation
    return RigidTransform(rotation, translation, a.scale * b.scale)


def inverse(t: RigidTransform) -> RigidTransform:
    rot = t.rotation.T
    return RigidTransform(rot, -(rot @ t.translation) / t.scale, 1.0 / t.scale)


def apply_point(t: RigidTransform, p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    return t.scale * (t.rotation @ p) + t.translation


def apply_points(t: RigidTransform, pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=np.float64)
    return t.scale * (pts @ t.rotation.T) + t.translation


def apply_to_mesh(t: RigidTransform, mesh: TriangleMesh) -> TriangleMesh:
    """Map vertices through the full transform and normals through the
    rotation alone (re-normalized; zero normals stay zero)."""
    facets = mesh.facets.copy()
    if len(mesh) == 0:
        return TriangleMesh(facets, mesh.name)
    verts = facets[:, 1:, :]
    facets[:, 1:, :] = t.scale * (verts @ t.rotation.T) + t.translation
    normals = facets[:, 0, :] @ t.rotation.T
    norms = np.linalg.norm(normals, axis=1)
    nonzero = norms > 0
    normals[nonzero] /= norms[nonzero, None]
    facets[:, 0, :] = normals
    return TriangleMesh(facets, mesh.name)


def rotation_about_axis(axis, degrees: float) -> np.ndarray:
    """Rodrigues rotation matrix about a (non-zero) axis."""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    theta = math.radians(degrees)
    k = np.array([
        [0.0, -axis[2], axis[1]],
        [axis[2], 0.0, -axis[0]],
        [-axis[1], axis[0], 0.0],
    ])
    return np.eye(3) + math.sin(theta) * k + (1.0 - math.cos(theta)) * (k @ k)


def align_z_to(direction) -> RigidTransform:
    """Minimal rotation taking +Z onto ``direction`` (unit vector).

    Rotates about the mutual perpendicular; the antipodal case (-Z) uses a
    180 degree turn about +X.
    """
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)
    z = np.array([0.0, 0.0, 1.0])
    c = float(np.dot(z, d))
    if c >= 1.0 - 1e-15:
        return identity()
    if c <= -1.0 + 1e-15:
        return RigidTransform(rotation_about_axis([1.0, 0.0, 0.0], 180.0), np.zeros(3), 1.0)
    axis = np.cross(z, d)
    degrees = math.degrees(math.acos(max(-1.0, min(1.0, c))))
    return RigidTransform(rotation_about_axis(axis, degrees), np.zeros(3), 1.0)


def random_attachment_transform(frame, jitter: AngleJitterParams,
                                rng: np.random.Generator) -> RigidTransform:
    """Transform placing a +Z template at an attachment frame.

    ``frame`` is (point, unit direction). The template axis lands on the
    direction perturbed by azimuth ~ U(-azimuth_range, +azimuth_range) then
    pitch ~ U(-pitch_range, +pitch_range); scale ~ U(*scale_range). Exactly
    three uniforms are drawn (in that order) regardless of the ranges, so
    the stream layout is stable.
    """
    point, direction = frame
    azimuth = rng.uniform(-jitter.azimuth_range, jitter.azimuth_range)
    pitch = rng.uniform(-jitter.pitch_range, jitter.pitch_range)
    scale = rng.uniform(jitter.scale_range[0], jitter.scale_range[1])
    rotation = align_z_to(direction).rotation
    if azimuth != 0.0 or pitch != 0.0:
        rotation = rotation @ rotation_about_axis([0, 0, 1], azimuth) \
                            @ rotation_about_axis([0, 1, 0], pitch)
    return RigidTransform(rotation, np.asarray(point, dtype=np.float64), scale)
