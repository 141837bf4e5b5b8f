"""Forest scenes: sampled tree locations, per-tree builds, and export.

Locations come from the thinning sampler followed by the hard-core spacing
filter. Every tree is an independent rebuild: tree i is seeded with
substream i + 1 of the master seed (substream 0 drives location sampling),
so scenes are reproducible end to end and trees can build in parallel.

Per-tree STL files hold the tree in its local frame (base at the origin);
the placement offset lives in the ``scene.json`` manifest, and merged export
bakes the offsets in. The manifest records everything needed to rebuild the
identical scene.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ipp
from . import stl
from . import tree as treemod
from .seeds import stream_seed

MANIFEST_VERSION = 1
MANIFEST_NAME = "scene.json"
MERGED_NAME = "forest.stl"
EXPORT_MODES = ("per-tree", "merged")

# substream of a tree's own seed used for parameter jitter draws
_STREAM_PARAM_JITTER = 4


class SceneConfigError(Exception):
    """Invalid scene configuration or manifest."""


@dataclass
class ParameterJitter:
    """Optional per-tree variation; None leaves the template value alone."""

    branch_count: tuple[int, int] | None = None
    trunk_height: tuple[float, float] | None = None

    def __post_init__(self):
        if self.branch_count is not None:
            lo, hi = self.branch_count
            if not (1 <= lo <= hi):
                raise SceneConfigError("branch_count jitter must satisfy 1 <= min <= max")
        if self.trunk_height is not None:
            lo, hi = self.trunk_height
            if not (0 < lo <= hi):
                raise SceneConfigError("trunk_height jitter must satisfy 0 < min <= max")


@dataclass
class SceneConfig:
    region: ipp.Region
    intensity: object  # ConstantIntensity | RasterIntensity
    tree_params_template: treemod.TreeParams
    parameter_jitter: ParameterJitter | None = None
    min_spacing: float = 0.0
    master_seed: int = 0

    def __post_init__(self):
        self.min_spacing = float(self.min_spacing)
        self.master_seed = int(self.master_seed)
        if self.min_spacing < 0:
            raise SceneConfigError("min_spacing must be non-negative")
        if not 0 <= self.master_seed < 2 ** 64:
            raise SceneConfigError("master_seed must fit in 64 unsigned bits")


@dataclass
class Placement:
    index: int
    x: float
    y: float
    seed: int
    tree: treemod.TreeModel


@dataclass
class Scene:
    placements: list[Placement]
    config: SceneConfig

    def __len__(self) -> int:
        return len(self.placements)


@dataclass
class SceneStats:
    tree_count: int
    total_triangles: int
    bounds: tuple[np.ndarray, np.ndarray] | None
    nearest_neighbor_min_distance: float


def tree_seed_for(master_seed: int, index: int) -> int:
    """Seed of tree ``index``; substream 0 is reserved for locations."""
    return stream_seed(master_seed, index + 1)


def _tree_params_for(config: SceneConfig, seed: int) -> treemod.TreeParams:
    params = treemod.with_seed(config.tree_params_template, seed)
    jitter = config.parameter_jitter
    if jitter is None or (jitter.branch_count is None and jitter.trunk_height is None):
        return params
    rng = np.random.default_rng(stream_seed(seed, _STREAM_PARAM_JITTER))
    if jitter.branch_count is not None:
        lo, hi = jitter.branch_count
        params.branch_count = int(rng.integers(lo, hi + 1))
    if jitter.trunk_height is not None:
        lo, hi = jitter.trunk_height
        params.trunk_height = float(rng.uniform(lo, hi))
    return params


def compose_forest(config: SceneConfig, lib: stl.MeshLibrary) -> Scene:
    """Sample locations, then build one tree per kept location."""
    location_seed = stream_seed(config.master_seed, 0)
    pattern = ipp.sample_ipp_thinning(config.intensity, config.region, location_seed)
    pattern = ipp.min_distance_filter(pattern, config.min_spacing)
    placements = []
    for i, (x, y) in enumerate(pattern.points):
        seed = tree_seed_for(config.master_seed, i)
        params = _tree_params_for(config, seed)
        model = treemod.build_tree(params, lib)
        placements.append(Placement(i, float(x), float(y), seed, model))
    return Scene(placements, config)


def scene_stats(scene: Scene) -> SceneStats:
    """Exact aggregates over placed trees; nearest-neighbor distance is the
    brute-force minimum over all pairs (+inf for fewer than two trees)."""
    total = 0
    mins, maxs = [], []
    for p in scene.placements:
        mesh = p.tree.full_mesh()
        total += len(mesh)
        stats = stl.mesh_stats(mesh)
        if stats.bounds is not None:
            offset = np.array([p.x, p.y, 0.0])
            mins.append(stats.bounds[0] + offset)
            maxs.append(stats.bounds[1] + offset)
    bounds = None
    if mins:
        bounds = (np.min(mins, axis=0), np.max(maxs, axis=0))
    nn = float("inf")
    pts = [(p.x, p.y) for p in scene.placements]
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = float(np.hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]))
            nn = min(nn, d)
    return SceneStats(len(scene), total, bounds, nn)


# ---------------------------------------------------------------------------
# export / regeneration

def build_manifest(scene: Scene, mode: str) -> dict:
    trees = []
    for p in scene.placements:
        trees.append({
            "index": p.index,
            "x": p.x,
            "y": p.y,
            "seed": p.seed,
            "params": treemod.params_to_dict(p.tree.params),
            "file": f"tree_{p.index}.stl" if mode == "per-tree" else None,
            "triangles": len(p.tree.full_mesh()),
        })
    return {
        "version": MANIFEST_VERSION,
        "master_seed": scene.config.master_seed,
        "region": ipp.region_to_dict(scene.config.region),
        "intensity": ipp.intensity_to_dict(scene.config.intensity),
        "min_spacing": scene.config.min_spacing,
        "mode": mode,
        "trees": trees,
    }


def export_scene(scene: Scene, output_directory, mode: str = "per-tree") -> dict:
    """Write the scene and its manifest; returns the manifest dict.

    per-tree mode: one ``tree_<i>.stl`` per placement, in local frames.
    merged mode: a single ``forest.stl`` with every tree translated to its
    (x, y) location on the ground plane z = 0.
    """
    if mode not in EXPORT_MODES:
        raise ValueError(f"unknown export mode '{mode}', expected one of {EXPORT_MODES}")
    out = Path(output_directory)
    out.mkdir(parents=True, exist_ok=True)
    manifest = build_manifest(scene, mode)
    if mode == "per-tree":
        for p in scene.placements:
            mesh = p.tree.full_mesh()
            mesh.name = f"tree_{p.index}"
            (out / f"tree_{p.index}.stl").write_bytes(stl.write_stl(mesh, "binary"))
    else:
        parts = []
        for p in scene.placements:
            mesh = p.tree.full_mesh()
            shifted = mesh.facets.copy()
            shifted[:, 1:, :] += np.array([p.x, p.y, 0.0])
            parts.append(stl.TriangleMesh(shifted, mesh.name))
        merged = stl.concat_meshes(parts, "forest")
        (out / MERGED_NAME).write_bytes(stl.write_stl(merged, "binary"))
    (out / MANIFEST_NAME).write_text(dumps_manifest(manifest))
    return manifest


def dumps_manifest(manifest: dict) -> str:
    return json.dumps(manifest, indent=2, sort_keys=True) + "\n"


def regenerate_scene(manifest, lib: stl.MeshLibrary) -> Scene:
    """Rebuild the exact scene recorded in a manifest (dict or path).

    Trees are rebuilt from their recorded params and seeds, not re-sampled,
    so the result re-exports bit-identically given the same library.
    """
    if not isinstance(manifest, dict):
        try:
            manifest = json.loads(Path(manifest).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SceneConfigError(f"cannot read manifest: {exc}") from exc
    if manifest.get("version") != MANIFEST_VERSION:
        raise SceneConfigError(f"unsupported manifest version {manifest.get('version')}")
    try:
        config = SceneConfig(
            region=ipp.region_from_dict(manifest["region"]),
            intensity=ipp.intensity_from_dict(manifest["intensity"]),
            tree_params_template=treemod.TreeParams(),
            min_spacing=manifest["min_spacing"],
            master_seed=manifest["master_seed"],
        )
        placements = []
        for entry in manifest["trees"]:
            params = treemod.params_from_dict(entry["params"])
            model = treemod.build_tree(params, lib)
            placements.append(Placement(int(entry["index"]), float(entry["x"]),
                                        float(entry["y"]), int(entry["seed"]), model))
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneConfigError(f"malformed manifest: {exc}") from exc
    return Scene(placements, config)


def load_scene_config(source) -> tuple[SceneConfig, str | None]:
    """Parse a scene config JSON (dict or path); returns the config plus the
    optional template library path named in the file."""
    if not isinstance(source, dict):
        try:
            source = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SceneConfigError(f"cannot read scene config: {exc}") from exc
    try:
        jitter = None
        if source.get("parameter_jitter"):
            pj = source["parameter_jitter"]
            jitter = ParameterJitter(
                branch_count=tuple(pj["branch_count"]) if pj.get("branch_count") else None,
                trunk_height=tuple(pj["trunk_height"]) if pj.get("trunk_height") else None,
            )
        config = SceneConfig(
            region=ipp.region_from_dict(source["region"]),
            intensity=ipp.intensity_from_dict(source["intensity"]),
            tree_params_template=treemod.params_from_dict(source["tree_params"]),
            parameter_jitter=jitter,
            min_spacing=source.get("min_spacing", 0.0),
            master_seed=source.get("master_seed", 0),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneConfigError(f"malformed scene config: {exc}") from exc
    except ipp.IntensityError as exc:
        raise SceneConfigError(str(exc)) from exc
    return config, source.get("library")
