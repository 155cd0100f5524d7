import math

import numpy as np
import pytest

import nbvcalib as nc


def noiseless_scene():
    scene = nc.default_scene()
    scene.noise = nc.NoiseModel.none()
    return scene


def candidates(scene):
    return nc.generate_candidates(nc.CandidateGeometry(), scene.board, scene.intrinsics, scene.ground_truth)


def test_exp_log_round_trip():
    xi = np.array([0.1, -0.2, 0.3, 0.4, -0.1, 0.2])
    assert np.allclose(nc.log_se3(nc.exp_se3(xi)), xi, atol=1e-12)


def test_pose_quaternion_round_trip():
    p = nc.exp_se3(np.array([0.1, 0.2, 0.3, 0.3, 0.2, -0.5]))
    q = nc.Pose.from_quaternion(p.quaternion_wxyz, p.translation)
    assert q.is_approx(p, 1e-14)
    assert np.allclose((p * p.inverse()).matrix(), np.eye(4), atol=1e-14)


def test_calibrate_noiseless_views():
    scene = noiseless_scene()
    cands = candidates(scene)
    assert len(cands) == 48
    sets = [nc.simulate_measurement(scene, cands.poses[i], i) for i in (0, 11, 25, 38, 44)]
    init = nc.initialize_from_measurements(sets, scene.board, scene.intrinsics)
    report = nc.optimize(init, sets, scene.board, scene.intrinsics)
    assert report.converged()
    assert report.theta.cam_from_ee.is_approx(scene.ground_truth.cam_from_ee, 1e-8)
    assert report.theta.base_from_world.is_approx(scene.ground_truth.base_from_world, 1e-8)


def test_information_gain_and_selection():
    scene = nc.default_scene()
    cands = candidates(scene)
    sets = [nc.simulate_measurement(scene, cands.poses[i], i) for i in (3, 20, 41)]
    theta = nc.optimize(nc.initialize_from_measurements(sets, scene.board, scene.intrinsics),
                        sets, scene.board, scene.intrinsics).theta
    state = nc.information_state(theta, sets, scene.board, scene.intrinsics)
    assert state.covariance.shape == (12, 12)
    best, scores = nc.select_nbv(theta, sets, cands, scene.board, scene.intrinsics)
    gains = {s.index: s.information_gain for s in scores}
    assert best == max(gains, key=lambda i: (gains[i], -i))
    assert all(g >= -1e-9 for g in gains.values())
    single = nc.predict_information_gain(theta, sets, cands.poses[best], scene.board, scene.intrinsics)
    assert single.information_gain == pytest.approx(gains[best], abs=1e-12)


def test_entropy_of_identity():
    h = nc.entropy_from_information(np.eye(12))
    assert h == pytest.approx(6 * math.log(2 * math.pi * math.e), abs=1e-12)


def test_singular_information_raises_with_code():
    with pytest.raises(nc.CalibrationError) as err:
        nc.entropy_from_information(np.zeros((12, 12)))
    assert err.value.code == "SingularInformation"


def test_experiment_and_files(tmp_path):
    cfg = nc.default_experiment_config()
    cfg.seeds = [0]
    cfg.policies = ["nbv", "random"]
    result = nc.run_experiment(cfg)
    assert result.failures == []
    rows = result.curves_csv().strip().splitlines()
    assert len(rows) == 1 + 2 * 6
    result.write(tmp_path)
    assert (tmp_path / "summary.json").exists()

    scene = nc.default_scene()
    cands = candidates(scene)
    data = nc.Dataset(scene.intrinsics, scene.board,
                      [nc.simulate_measurement(scene, cands.poses[i], i) for i in (1, 17, 40)])
    nc.save_dataset(tmp_path / "data.json", data)
    back = nc.load_dataset(tmp_path / "data.json")
    assert len(back.sets) == 3
    theta, entropy, scores = nc.rank_candidates(back, cands)
    assert len(scores) == 48
    assert all(a.information_gain >= b.information_gain for a, b in zip(scores, scores[1:]))
