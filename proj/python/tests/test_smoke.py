import numpy as np
import pytest

import nrtrack


@pytest.fixture(scope="module")
def slant():
    return nrtrack.generate("slant", seed=1, frames=5)


def test_sequence_arrays(slant):
    assert len(slant) == 5
    depth, color = slant.depth(0), slant.color(0)
    assert depth.dtype == np.uint16 and depth.ndim == 2
    assert color.shape == depth.shape + (3,)
    np.testing.assert_array_equal(slant.truth(0), slant.mesh.vertices)
    can, obs = slant.correspondences(0)
    assert can.shape == obs.shape and can.shape[1] == 3
    np.testing.assert_allclose(can, obs, atol=1e-9)


def test_mesh_from_mask():
    mask = np.zeros((80, 80), np.uint8)
    mask[20:60, 15:65] = 1
    depth = np.full((80, 80), 800, np.uint16)
    mesh = nrtrack.build_canonical_mesh(mask, depth, 10.0)
    assert len(mesh) == mesh.vertices.shape[0]
    assert mesh.triangles.max() < len(mesh)
    assert np.all(mesh.vertices[:, 2] == 800)
    with pytest.raises(nrtrack.Error) as info:
        nrtrack.build_canonical_mesh(np.zeros((80, 80), np.uint8), depth, 10.0)
    assert info.value.code == "EmptyMask"


def test_smoothness_nullspace(slant):
    K = slant.mesh.smoothness_matrix()
    v = slant.mesh.vertices
    affine = v @ np.array([[1.1, 0.2, 0.0], [-0.1, 0.9, 0.3], [0.0, 0.1, 1.0]]) + [4.0, -2.0, 7.0]
    assert np.abs(K @ affine).max() < 1e-8 * np.abs(affine).max()


def test_segmentation_and_sampling(slant):
    near, far = slant.z_band
    mask, boundary = nrtrack.segment_foreground(slant.depth(0), near, far)
    assert mask.shape == slant.depth(0).shape
    assert boundary.shape[1] == 2 and len(boundary) > 0
    assert nrtrack.sample_depth(np.full((4, 4), 700, np.uint16), 1.5, 2.25) == 700
    assert nrtrack.sample_depth(np.zeros((4, 4), np.uint16), 1.5, 2.25) is None


def test_energy_and_solve():
    seq = nrtrack.generate("translate", seed=2, frames=2, noisy=False)
    near, far = seq.z_band
    can, obs = seq.correspondences(1)
    params = nrtrack.EnergyParams()
    assert (params.lambda_c, params.lambda_d, params.lambda_b) == (1.3, 0.6, 0.8)
    start = seq.mesh.vertices
    e0 = nrtrack.energy(seq.mesh, start, seq.depth(1), near, far, can, obs, params)
    assert e0["total"] == pytest.approx(
        e0["smoothness"] + 1.3 * e0["correspondence"] + 0.6 * e0["depth"] + 0.8 * e0["boundary"])
    out = nrtrack.solve_frame(seq.mesh, start, seq.depth(1), near, far, can, obs, params, max_iterations=200)
    assert out["trace"][-1]["total"] < e0["total"]
    assert nrtrack.rmse(out["state"], seq.truth(1)) < nrtrack.rmse(start, seq.truth(1))


def test_track_in_memory(slant):
    result = nrtrack.track(slant, {"correspondences": "csv", "maxIterations": 60})
    states = result["states"]
    assert len(states) == len(slant)
    assert result["correspondence_counts"][0] == 0
    np.testing.assert_array_equal(states[0], result["mesh"].vertices)
    errors = [nrtrack.rmse(s, slant.truth(t)) for t, s in enumerate(states)]
    assert max(errors) < 2 * slant.mesh.spacing
    with pytest.raises(nrtrack.Error):
        nrtrack.track(slant, {"noSuchKey": 1})


def test_disk_round_trip(tmp_path):
    nrtrack.synth("translate", 3, tmp_path / "seq")
    result = nrtrack.track(tmp_path / "seq", {"maxIterations": 30, "correspondences": "csv"})
    assert len(result["states"]) == 10
    assert set(nrtrack.default_config()) >= {"lambdaC", "lambdaD", "lambdaB", "alpha"}
