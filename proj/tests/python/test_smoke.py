import math

import numpy as np
import pytest

import pyvfa


def test_projection_round_trip():
    cam = pyvfa.Camera.look_at(0, 640.0, [0.0, 0.0, 6.0], [19.5, 19.5, 0.0], 1280, 720)
    u, v = cam.project(10.0, 12.0, 0.8)
    x, y, z = cam.backproject(u, v, 0.8)
    assert (x, y, z) == pytest.approx((10.0, 12.0, 0.8), abs=1e-9)
    P = np.asarray(cam.projection)
    h = P @ np.array([10.0, 12.0, 0.8, 1.0])
    assert h[0] / h[2] == pytest.approx(u)
    assert cam.project(-10.0, -10.0, 0.0) is None


def test_table_and_pooling_match_numpy():
    scene = pyvfa.generate_scene(seed=2, n_objects=5)
    grid = pyvfa.Grid([0.0, 0.0, 0.0], 39, 39, 2, 1.0, 1.0, 0.8)
    table = pyvfa.build_projection_table(grid, scene.cameras, stride=4)
    maps = pyvfa.render_feature_views(scene, channels=4, stride=4)
    vox = pyvfa.aggregate_features(table, maps)
    assert len(vox) == 7 and vox[0].shape == (4, 2, 39, 39)
    boxes = table.boxes()
    cam, voxel = 0, int(np.flatnonzero(boxes[0, :, 4])[100])
    u0, v0, u1, v1, _ = boxes[cam, voxel]
    fu0, fv0 = u0 // 4, v0 // 4
    fu1, fv1 = min(-(-u1 // 4), 319), min(-(-v1 // 4), 179)
    want = maps[cam][:, fv0 : fv1 + 1, fu0 : fu1 + 1].mean(axis=(1, 2))
    got = vox[cam].reshape(4, -1)[:, voxel]
    np.testing.assert_allclose(got, want, rtol=1e-5, atol=1e-7)


def test_encode_decode_evaluate():
    scene = pyvfa.generate_scene(seed=4)
    grid = pyvfa.Grid.multiviewc()
    maps = pyvfa.encode_targets(scene.objects, grid, (2.63, 1.3, 1.3))
    assert maps["confidence"].shape == (1, 156, 156)
    assert maps["orientation"].shape == (360, 156, 156)
    dets = pyvfa.decode(maps, grid, (2.63, 1.3, 1.3), threshold=0.5)
    assert len(dets) == 15
    report = pyvfa.evaluate([dets], [scene.objects])
    assert report["moda"] == 1.0
    assert report["per_threshold"][0]["ap3d"] == pytest.approx(1.0)


def test_csl_and_iou():
    bins = pyvfa.encode_csl(math.radians(123.0))
    assert math.degrees(pyvfa.decode_csl(bins)) == pytest.approx(123.0, abs=0.5)
    a = pyvfa.Detection(0, 0, 1, 1, 1, 0, 1)
    b = pyvfa.Detection(0.5, 0, 1, 1, 1, 0, 1)
    assert pyvfa.rotated_iou_3d(a, b) == pytest.approx(1 / 3)


def test_errors_surface_as_value_errors():
    with pytest.raises(ValueError):
        pyvfa.Grid([0, 0, 0], 0, 1, 1, 1, 1, 1)
    with pytest.raises(pyvfa.Error):
        pyvfa.encode_csl(0.0, 360, 0)
