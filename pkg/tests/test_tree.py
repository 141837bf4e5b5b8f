import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forestgen import stl
from forestgen import transform as tf
from forestgen import tree as tm


def make_params(**kw):
    defaults = dict(branch_count=8, subbranches_per_branch=3, leaves_per_subbranch=5,
                    trunk_height=10.0, seed=17)
    defaults.update(kw)
    return tm.TreeParams(**defaults)


# ---------------------------------------------------------------------------
# skeleton

@pytest.mark.parametrize("branches", [8, 12, 16])
def test_skeleton_depth1_counts(branches):
    sk = tm.build_skeleton(make_params(branch_count=branches))
    assert len(sk.at_depth(0)) == 1
    assert len(sk.at_depth(1)) == branches
    assert len(sk.at_depth(2)) == branches * 3


def test_skeleton_no_subbranches():
    sk = tm.build_skeleton(make_params(branch_count=8, subbranches_per_branch=0))
    assert len(sk) == 1 + 8
    assert sk.at_depth(2) == []


def test_skeleton_deterministic():
    a = tm.build_skeleton(make_params(seed=123))
    b = tm.build_skeleton(make_params(seed=123))
    for na, nb in zip(a.nodes, b.nodes):
        assert np.array_equal(na.attachment_point, nb.attachment_point)
        assert np.array_equal(na.direction, nb.direction)


def test_skeleton_subbranch_lengths_decay():
    params = make_params(depth_scale_decay=0.5)
    sk = tm.build_skeleton(params)
    depth1 = sk.nodes[sk.at_depth(1)[0]].length
    depth2 = sk.nodes[sk.at_depth(2)[0]].length
    assert depth1 == pytest.approx(params.trunk_height * 0.5)
    assert depth2 == pytest.approx(depth1 * 0.5)


def test_synthesize_derivation_forms():
    assert tm.synthesize_derivation(4, 0).symbols == "d[d[d[d"
    assert tm.synthesize_derivation(2, 3).symbols == "d[ddd][d[ddd]"
    assert tm.synthesize_derivation(1, 0).symbols == "d"


# ---------------------------------------------------------------------------
# stage meshes

def test_branch_stage_triangle_ledger(tiny_library):
    params = make_params(branch_count=8)
    sk = tm.build_skeleton(params)
    mesh = tm.attach_branches(sk, tiny_library, params)
    expected = len(tiny_library.trunk) + 8 * len(tiny_library.branch)
    assert len(mesh) == expected


def test_subbranch_stage_counts(tiny_library):
    params = make_params(branch_count=8, subbranches_per_branch=3)
    sk = tm.build_skeleton(params)
    mesh = tm.attach_branches(sk, tiny_library, params)
    full = tm.attach_subbranches(mesh, sk, tiny_library, params)
    assert len(full) == len(mesh) + 24 * len(tiny_library.sub_branch)


def test_subbranch_stage_noop_when_zero(tiny_library):
    params = make_params(subbranches_per_branch=0)
    sk = tm.build_skeleton(params)
    mesh = tm.attach_branches(sk, tiny_library, params)
    full = tm.attach_subbranches(mesh, sk, tiny_library, params)
    assert np.array_equal(full.facets, mesh.facets)


def test_leaves_zero_gives_empty(tiny_library):
    params = make_params(leaves_per_subbranch=0)
    sk = tm.build_skeleton(params)
    leaf_mesh, centroids = tm.attach_leaves(sk, tiny_library, params)
    assert len(leaf_mesh) == 0
    assert centroids.shape == (0, 3)


def test_leaf_counts_and_centroids(tiny_library):
    # 8 branches x 3 sub-branches x 5 leaves with a 1-triangle template
    params = make_params()
    sk = tm.build_skeleton(params)
    leaf_mesh, centroids = tm.attach_leaves(sk, tiny_library, params)
    assert len(leaf_mesh) == 8 * 3 * 5
    assert centroids.shape == (len(leaf_mesh), 3)
    for i in range(len(leaf_mesh)):
        oracle = stl.triangle_centroid(leaf_mesh.triangle(i))
        assert np.allclose(centroids[i], oracle, atol=1e-9)


def test_leaves_fall_back_to_branches(tiny_library):
    params = make_params(subbranches_per_branch=0, leaves_per_subbranch=2)
    sk = tm.build_skeleton(params)
    leaf_mesh, centroids = tm.attach_leaves(sk, tiny_library, params)
    assert len(leaf_mesh) == 8 * 2


def test_branch_bases_land_on_attachment_points(tiny_library):
    params = make_params(seed=5)
    sk = tm.build_skeleton(params)
    mesh = tm.attach_branches(sk, tiny_library, params)
    per_branch = len(tiny_library.branch)
    offset = len(tiny_library.trunk)
    for rank, i in enumerate(sk.at_depth(1)):
        node = sk.nodes[i]
        verts = mesh.vertices[offset + rank * per_branch: offset + (rank + 1) * per_branch]
        nearest = np.linalg.norm(verts.reshape(-1, 3) - node.attachment_point, axis=1).min()
        assert nearest <= 1e-6 * params.trunk_height


def test_subbranch_attachments_on_parent_axes():
    params = make_params(seed=11)
    sk = tm.build_skeleton(params)
    for i in sk.at_depth(2):
        node = sk.nodes[i]
        parent = sk.nodes[node.parent]
        rel = node.attachment_point - parent.attachment_point
        along = float(np.dot(rel, parent.direction))
        off = np.linalg.norm(rel - along * parent.direction)
        assert off <= 1e-6 * params.trunk_height
        assert -1e-9 <= along <= parent.length + 1e-9


# ---------------------------------------------------------------------------
# full builds

def test_build_tree_stage_monotone_prefix(tiny_library):
    model = tm.build_tree(make_params(), tiny_library)
    branches = model.stage_mesh("branches")
    subs = model.stage_mesh("subbranches")
    leaves = model.stage_mesh("leaves")
    assert np.array_equal(subs.facets[: len(branches)], branches.facets)
    assert np.array_equal(leaves.facets[: len(subs)], subs.facets)
    assert model.stage_counts["leaves"] == len(leaves)


def test_build_tree_deterministic_export(tiny_library):
    params = make_params(seed=77)
    a = stl.write_stl(tm.build_tree(params, tiny_library).full_mesh(), "binary")
    b = stl.write_stl(tm.build_tree(params, tiny_library).full_mesh(), "binary")
    assert a == b


def test_leaf_request_does_not_disturb_branches(tiny_library):
    bare = tm.build_tree(make_params(leaves_per_subbranch=0), tiny_library)
    leafy = tm.build_tree(make_params(leaves_per_subbranch=5), tiny_library)
    assert np.array_equal(bare.mesh.facets, leafy.mesh.facets)


def test_zero_jitter_build_reproducible(tiny_library):
    params = make_params(jitter=tf.AngleJitterParams(0.0, 0.0, (1.0, 1.0)), seed=3)
    a = tm.build_tree(params, tiny_library)
    b = tm.build_tree(params, tiny_library)
    assert np.array_equal(a.full_mesh().facets, b.full_mesh().facets)


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=15, deadline=None)
def test_bounding_box_height_within_growth_envelope(seed, tiny_library):
    params = make_params(seed=seed)
    model = tm.build_tree(params, tiny_library)
    stats = stl.mesh_stats(model.full_mesh())
    assert np.all(np.isfinite(model.full_mesh().facets))
    height = stats.bounds[1][2] - stats.bounds[0][2]
    assert height >= params.trunk_height - 1e-9
    assert height <= params.trunk_height * (1 + 2 * params.depth_scale_decay) * 1.25


def test_stage_skeleton_mesh(tiny_library):
    model = tm.build_tree(make_params(branch_count=6), tiny_library)
    wire = model.stage_mesh("skeleton")
    # two triangles per node: trunk + 6 branches + 18 sub-branches
    assert len(wire) == 2 * (1 + 6 + 18)


def test_unknown_stage_rejected(tiny_library):
    model = tm.build_tree(make_params(), tiny_library)
    with pytest.raises(ValueError, match="unknown stage"):
        model.stage_mesh("flowers")


def test_params_validation():
    with pytest.raises(ValueError):
        make_params(branch_count=0)
    with pytest.raises(ValueError):
        make_params(trunk_height=-1.0)
    with pytest.raises(ValueError):
        make_params(depth_scale_decay=0.0)
    with pytest.raises(ValueError):
        make_params(subbranches_per_branch=-1)


def test_params_dict_round_trip():
    params = make_params(branch_count=12, seed=987654321)
    again = tm.params_from_dict(tm.params_to_dict(params))
    assert again == params


def test_centroids_csv_format():
    csv = tm.centroids_to_csv(np.array([[1.0, 2.0, 3.0], [0.5, 0.25, -1.0]]))
    lines = csv.strip().split("\n")
    assert lines[0] == "x,y,z"
    assert lines[1] == "1,2,3"
    assert lines[2] == "0.5,0.25,-1"
