"""Staged tree assembly: skeleton, trunk+branches, +sub-branches, +leaves.

A tree is assembled by instancing template meshes onto a skeleton produced
by turtle interpretation of a synthesized derivation string. Stage meshes
grow by concatenation, so every stage is a prefix of the next and triangle
counts follow an exact ledger:

    branches     = trunk_tris + branch_count * branch_tris
    subbranches  = branches + branch_count * subs_per_branch * sub_tris
    leaves       = subbranches + leaf_anchor_count * leaves_each * leaf_tris

Randomness is split into one substream per stage (skeleton, branches,
sub-branches, leaves), so e.g. requesting leaves never perturbs the branch
geometry of an otherwise identical build.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import lsystem as lsys
from . import stl
from . import transform as tf
from .seeds import stream_seed

STAGES = ("skeleton", "branches", "subbranches", "leaves")

# substream indices of TreeParams.seed
_STREAM_SKELETON = 0
_STREAM_BRANCHES = 1
_STREAM_SUBBRANCHES = 2
_STREAM_LEAVES = 3

# leaf anchors cover the distal portion of their parent axis
_LEAF_STATION_LO = 0.30
# leaf template extent relative to the parent node length
_LEAF_FRACTION = 0.25

_DEFAULT_JITTER = tf.AngleJitterParams(
    azimuth_range=10.0, pitch_range=10.0, scale_range=(0.85, 1.15))


@dataclass
class TreeParams:
    branch_count: int = 8
    subbranches_per_branch: int = 3
    leaves_per_subbranch: int = 5
    trunk_height: float = 10.0
    jitter: tf.AngleJitterParams = field(default_factory=lambda: _DEFAULT_JITTER)
    depth_scale_decay: float = 0.5
    seed: int = 0

    def __post_init__(self):
        self.branch_count = int(self.branch_count)
        self.subbranches_per_branch = int(self.subbranches_per_branch)
        self.leaves_per_subbranch = int(self.leaves_per_subbranch)
        self.trunk_height = float(self.trunk_height)
        self.depth_scale_decay = float(self.depth_scale_decay)
        self.seed = int(self.seed)
        if self.branch_count < 1:
            raise ValueError("branch_count must be at least 1")
        if self.subbranches_per_branch < 0 or self.leaves_per_subbranch < 0:
            raise ValueError("per-level counts must be non-negative")
        if self.trunk_height <= 0.0:
            raise ValueError("trunk_height must be positive")
        if not 0.0 < self.depth_scale_decay <= 1.0:
            raise ValueError("depth_scale_decay must be in (0, 1]")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass
class TreeModel:
    skeleton: lsys.Skeleton
    mesh: stl.TriangleMesh            # trunk + branches + sub-branches
    leaf_mesh: stl.TriangleMesh
    leaf_centroids: np.ndarray        # (n_leaves, 3), one row per leaf triangle
    params: TreeParams
    stage_counts: dict = field(default_factory=dict)  # triangle count after each stage

    def stage_mesh(self, stage: str) -> stl.TriangleMesh:
        if stage == "skeleton":
            return skeleton_to_mesh(self.skeleton)
        if stage == "branches":
            return stl.TriangleMesh(self.mesh.facets[: self.stage_counts["branches"]],
                                    self.mesh.name)
        if stage == "subbranches":
            return self.mesh
        if stage == "leaves":
            return self.full_mesh()
        raise ValueError(f"unknown stage '{stage}', expected one of {STAGES}")

    def full_mesh(self) -> stl.TriangleMesh:
        return stl.concat_meshes([self.mesh, self.leaf_mesh], self.mesh.name)


def synthesize_derivation(branch_count: int, subbranches_per_branch: int) -> lsys.DerivationString:
    """Derivation equivalent to the printed production patterns for an
    arbitrary branch count: first-level branches separated by unclosed '['
    (sibling separators), each followed by an explicit [d...d] child group
    when sub-branches are requested."""
    group = "[" + lsys.BRANCH_SYMBOL * subbranches_per_branch + "]" if subbranches_per_branch else ""
    chunk = lsys.BRANCH_SYMBOL + group
    return lsys.DerivationString("[".join([chunk] * branch_count), level=1)


def turtle_config_for(params: TreeParams) -> lsys.TurtleConfig:
    jitter_range = params.jitter.azimuth_range
    policy = "jittered-uniform" if jitter_range > 0 else "uniform-spacing"
    return lsys.TurtleConfig(
        step_length=params.trunk_height * params.depth_scale_decay,
        yaw_angle=360.0 / params.branch_count,
        branch_pitch=40.0,
        azimuth_policy=policy,
        jitter_range=jitter_range,
    )


def build_skeleton(params: TreeParams) -> lsys.Skeleton:
    """Skeleton with exactly branch_count depth-1 nodes and
    branch_count * subbranches_per_branch depth-2 nodes."""
    derivation = synthesize_derivation(params.branch_count, params.subbranches_per_branch)
    cfg = turtle_config_for(params)
    rng = np.random.default_rng(stream_seed(params.seed, _STREAM_SKELETON))
    skeleton = lsys.interpret_turtle(derivation, cfg, (params.trunk_height, (0.0, 0.0, 0.0)), rng)
    for node in skeleton.nodes:
        if node.depth >= 2:
            node.length *= params.depth_scale_decay ** (node.depth - 1)
    return skeleton


def _instance(template: stl.TriangleMesh, extent: float, node: lsys.SkeletonNode,
              jitter: tf.AngleJitterParams, rng: np.random.Generator,
              length: float | None = None) -> stl.TriangleMesh:
    t = tf.random_attachment_transform(
        (node.attachment_point, node.direction), jitter, rng)
    base_scale = (length if length is not None else node.length) / extent
    t = tf.RigidTransform(t.rotation, t.translation, t.scale * base_scale)
    return tf.apply_to_mesh(t, template)


def attach_branches(skeleton: lsys.Skeleton, lib: stl.MeshLibrary,
                    params: TreeParams) -> stl.TriangleMesh:
    """Trunk template plus one branch instance per depth-1 node."""
    rng = np.random.default_rng(stream_seed(params.seed, _STREAM_BRANCHES))
    trunk_node = skeleton.trunk
    trunk_t = tf.RigidTransform(np.eye(3), trunk_node.attachment_point,
                                trunk_node.length / lib.extent("trunk"))
    parts = [tf.apply_to_mesh(trunk_t, lib.trunk)]
    for i in skeleton.at_depth(1):
        parts.append(_instance(lib.branch, lib.extent("branch"), skeleton.nodes[i],
                               params.jitter, rng))
    return stl.concat_meshes(parts, "tree")


def attach_subbranches(mesh: stl.TriangleMesh, skeleton: lsys.Skeleton,
                       lib: stl.MeshLibrary, params: TreeParams) -> stl.TriangleMesh:
    """Append one sub-branch instance per depth-2 node; node lengths already
    carry the per-depth scale decay."""
    indices = skeleton.at_depth(2)
    if not indices:
        return mesh
    rng = np.random.default_rng(stream_seed(params.seed, _STREAM_SUBBRANCHES))
    parts = [mesh]
    for i in indices:
        parts.append(_instance(lib.sub_branch, lib.extent("sub_branch"),
                               skeleton.nodes[i], params.jitter, rng))
    return stl.concat_meshes(parts, mesh.name)


def attach_leaves(skeleton: lsys.Skeleton, lib: stl.MeshLibrary,
                  params: TreeParams) -> tuple[stl.TriangleMesh, np.ndarray]:
    """Leaf instances along the distal portion of each anchor axis, plus the
    centroid of every placed leaf triangle (one row per triangle).

    Anchors are the depth-2 nodes, falling back to depth-1 branches when the
    tree has no sub-branches.
    """
    count = params.leaves_per_subbranch
    anchors = skeleton.at_depth(2) or skeleton.at_depth(1)
    if count == 0 or not anchors:
        return stl.empty_mesh("leaves"), np.zeros((0, 3))
    rng = np.random.default_rng(stream_seed(params.seed, _STREAM_LEAVES))
    stations = _LEAF_STATION_LO + (1.0 - _LEAF_STATION_LO) * (np.arange(count) + 1) / count
    parts = []
    for i in anchors:
        node = skeleton.nodes[i]
        for station in stations:
            anchor_point = node.attachment_point + station * node.length * node.direction
            frame_node = lsys.SkeletonNode(anchor_point, node.direction, node.depth + 1,
                                           node.length, i)
            parts.append(_instance(lib.leaf, lib.extent("leaf"), frame_node,
                                   params.jitter, rng,
                                   length=_LEAF_FRACTION * node.length))
    leaf_mesh = stl.concat_meshes(parts, "leaves")
    return leaf_mesh, stl.triangle_centroids(leaf_mesh)


def build_tree(params: TreeParams, lib: stl.MeshLibrary) -> TreeModel:
    """Run the full stage pipeline; per-stage meshes stay retrievable from
    the result via TreeModel.stage_mesh."""
    skeleton = build_skeleton(params)
    branches = attach_branches(skeleton, lib, params)
    with_subs = attach_subbranches(branches, skeleton, lib, params)
    leaf_mesh, centroids = attach_leaves(skeleton, lib, params)
    return TreeModel(
        skeleton=skeleton,
        mesh=with_subs,
        leaf_mesh=leaf_mesh,
        leaf_centroids=centroids,
        params=params,
        stage_counts={
            "branches": len(branches),
            "subbranches": len(with_subs),
            "leaves": len(with_subs) + len(leaf_mesh),
        },
    )


def skeleton_to_mesh(skeleton: lsys.Skeleton, width_fraction: float = 0.02) -> stl.TriangleMesh:
    """Thin rectangle (two triangles) per skeleton segment, for STL export
    of the bare branching structure."""
    rows = []
    for node in skeleton.nodes:
        a = node.attachment_point
        b = a + node.length * node.direction
        side = tf.align_z_to(node.direction).rotation @ np.array([1.0, 0.0, 0.0])
        half = 0.5 * width_fraction * node.length * side
        p0, p1, p2, p3 = a - half, a + half, b + half, b - half
        rows.append([np.zeros(3), p0, p1, p2])
        rows.append([np.zeros(3), p0, p2, p3])
    mesh = stl.TriangleMesh(np.array(rows) if rows else np.zeros((0, 4, 3)), "skeleton")
    return stl.recompute_normals(mesh)


def centroids_to_csv(centroids: np.ndarray) -> str:
    """Leaf centroid table: header plus one x,y,z row per leaf triangle."""
    lines = ["x,y,z"]
    for x, y, z in np.asarray(centroids, dtype=np.float64).reshape(-1, 3):
        lines.append(f"{x:.9g},{y:.9g},{z:.9g}")
    return "\n".join(lines) + "\n"


def params_to_dict(params: TreeParams) -> dict:
    return {
        "branch_count": params.branch_count,
        "subbranches_per_branch": params.subbranches_per_branch,
        "leaves_per_subbranch": params.leaves_per_subbranch,
        "trunk_height": params.trunk_height,
        "jitter": {
            "azimuth_range": params.jitter.azimuth_range,
            "pitch_range": params.jitter.pitch_range,
            "scale_range": [params.jitter.scale_range[0], params.jitter.scale_range[1]],
        },
        "depth_scale_decay": params.depth_scale_decay,
        "seed": params.seed,
    }


def params_from_dict(data: dict) -> TreeParams:
    jitter = data.get("jitter", {})
    scale_range = jitter.get("scale_range", (1.0, 1.0))
    return TreeParams(
        branch_count=data["branch_count"],
        subbranches_per_branch=data.get("subbranches_per_branch", 0),
        leaves_per_subbranch=data.get("leaves_per_subbranch", 0),
        trunk_height=data["trunk_height"],
        jitter=tf.AngleJitterParams(
            azimuth_range=float(jitter.get("azimuth_range", 0.0)),
            pitch_range=float(jitter.get("pitch_range", 0.0)),
            scale_range=(float(scale_range[0]), float(scale_range[1])),
        ),
        depth_scale_decay=data.get("depth_scale_decay", 1.0),
        seed=data.get("seed", 0),
    )


def with_seed(params: TreeParams, seed: int) -> TreeParams:
    return replace(params, seed=seed)
