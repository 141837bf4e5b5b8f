"""Procedurally built template meshes (no binary assets shipped).

All templates live in the canonical library frame: attachment base at the
origin, growth along +Z, height about 1. Branch and sub-branch templates are
pre-bent; rotating instances about their own axis is what varies the curl
direction from branch to branch.
"""

from __future__ import annotations

import math

import numpy as np

from .stl import MeshLibrary, TriangleMesh, recompute_normals

DETAIL_PRESETS = ("tiny", "normal", "fine")


def tapered_tube(base_radius: float, tip_radius: float, height: float,
                 segments: int, rings: int, bend_degrees: float = 0.0,
                 name: str = "tube") -> TriangleMesh:
    """Closed tube of ``rings`` stacked bands whose spine bends by
    ``bend_degrees`` in the x-z plane. Both caps are triangle fans around a
    center vertex; the base center sits exactly at the origin.

    Triangle count: 2 * segments * rings + 2 * segments.
    """
    if segments < 3 or rings < 1:
        raise ValueError("need at least 3 segments and 1 ring")
    step = height / rings
    spine = [np.zeros(3)]
    dirs = []
    for j in range(rings):
        theta = math.radians(bend_degrees) * (j + 0.5) / rings
        d = np.array([math.sin(theta), 0.0, math.cos(theta)])
        dirs.append(d)
        spine.append(spine[-1] + step * d)

    circles = []
    for j in range(rings + 1):
        frac = j / rings
        radius = base_radius + (tip_radius - base_radius) * frac
        d = dirs[min(j, rings - 1)] if j > 0 else np.array([0.0, 0.0, 1.0])
        u = np.array([d[2], 0.0, -d[0]])  # in-plane perpendicular to the spine
        v = np.array([0.0, 1.0, 0.0])
        angles = 2.0 * np.pi * np.arange(segments) / segments
        ring = spine[j] + radius * (np.outer(np.cos(angles), u) + np.outer(np.sin(angles), v))
        circles.append(ring)

    rows = []
    zero = np.zeros(3)

    def quad(a, b, c, d):
        rows.append([zero, a, b, c])
        rows.append([zero, a, c, d])

    for j in range(rings):
        lo, hi = circles[j], circles[j + 1]
        for k in range(segments):
            k2 = (k + 1) % segments
            quad(lo[k], lo[k2], hi[k2], hi[k])
    base_center, tip_center = spine[0], spine[-1]
    for k in range(segments):
        k2 = (k + 1) % segments
        rows.append([zero, base_center, circles[0][k2], circles[0][k]])
        rows.append([zero, tip_center, circles[-1][k], circles[-1][k2]])

    return recompute_normals(TriangleMesh(np.array(rows), name))


def leaf_triangle(width: float = 0.5, length: float = 1.0) -> TriangleMesh:
    """Single-triangle leaf: base tip at the origin, blade along +Z."""
    rows = [[
        np.zeros(3),
        np.zeros(3),
        np.array([width / 2.0, 0.0, length]),
        np.array([-width / 2.0, 0.0, length]),
    ]]
    return recompute_normals(TriangleMesh(np.array(rows), "leaf"))


def default_library(detail: str = "normal") -> MeshLibrary:
    """Built-in template set at one of three tessellation levels.

    "tiny" keeps tests fast, "normal" is the CLI default, "fine" pushes the
    trunk template to 10k triangles for load benchmarks.
    """
    if detail == "tiny":
        trunk = tapered_tube(0.05, 0.02, 1.0, 6, 2, 0.0, "trunk")
        branch = tapered_tube(0.035, 0.012, 1.0, 5, 2, 20.0, "branch")
        sub = tapered_tube(0.022, 0.008, 1.0, 4, 1, 28.0, "sub_branch")
    elif detail == "normal":
        trunk = tapered_tube(0.05, 0.02, 1.0, 12, 8, 0.0, "trunk")
        branch = tapered_tube(0.035, 0.012, 1.0, 10, 6, 22.0, "branch")
        sub = tapered_tube(0.022, 0.008, 1.0, 8, 4, 30.0, "sub_branch")
    elif detail == "fine":
        trunk = tapered_tube(0.05, 0.02, 1.0, 50, 99, 0.0, "trunk")
        branch = tapered_tube(0.035, 0.012, 1.0, 24, 20, 22.0, "branch")
        sub = tapered_tube(0.022, 0.008, 1.0, 16, 12, 30.0, "sub_branch")
    else:
        raise ValueError(f"unknown detail preset '{detail}', expected one of {DETAIL_PRESETS}")
    return MeshLibrary(trunk=trunk, branch=branch, sub_branch=sub, leaf=leaf_triangle())
