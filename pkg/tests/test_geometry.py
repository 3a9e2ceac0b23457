import numpy as np
import pytest

from anchorvo.camera import PinholeCamera
from anchorvo.config import FeatureConfig
from anchorvo.geometry import (
    AnchorPoint,
    anchor_logdepth_jacobians,
    anchor_pixel_jacobians,
    decode_dense,
    jacobian_dense_points_wrt_anchors,
    jacobian_dense_points_wrt_pose,
    project_anchor,
    project_anchors,
    reset_behind_camera,
)
from anchorvo.kernel import CovarianceModel, build_covariance, extract_features
from anchorvo.se3 import SE3


def simple_camera():
    return PinholeCamera(fx=100.0, fy=100.0, cx=50.0, cy=50.0, width=101, height=101)


def make_anchor(pos, host=0, pixel=(50.0, 50.0), s=0.0):
    return AnchorPoint(position_world=np.asarray(pos, dtype=float), host_keyframe_id=host,
                       host_pixel=np.asarray(pixel, dtype=float), median_logdepth_at_init=s)


def random_instance(seed, m=4, n=16):
    """Random pose, camera, anchors in front, and a kernel-built cond."""
    rng = np.random.default_rng(seed)
    cam = simple_camera()
    pose = SE3.exp(rng.normal(0, 0.3, 6))
    from scipy.ndimage import gaussian_filter
    img = gaussian_filter(rng.random((101, 101)), 2.0)
    model = CovarianceModel(extract_features(img, FeatureConfig()), 20.0, 1.0, 1.0)
    anchor_pix = rng.uniform(5, 95, size=(m, 2))
    query_pix = rng.uniform(5, 95, size=(n, 2))
    cov = build_covariance(model, model.pixel_features(anchor_pix),
                           model.pixel_features(query_pix), jitter=1e-8)
    depths = rng.uniform(0.8, 3.0, size=m)
    anchors_world = pose.transform(cam.unproject(anchor_pix, depths))
    return pose, cam, anchors_world, cov.cond, query_pix


def test_project_anchor_on_axis():
    cam = simple_camera()
    pix, d, ok = project_anchor(SE3(), cam, make_anchor([0, 0, 1.0]))
    assert ok
    assert np.allclose(pix, [50.0, 50.0])
    assert d == pytest.approx(0.0, abs=1e-15)


def test_project_anchor_log_depth_e():
    cam = simple_camera()
    _, d, ok = project_anchor(SE3(), cam, make_anchor([0, 0, np.e]))
    assert ok and d == pytest.approx(1.0, rel=1e-14)


def test_project_anchor_matches_homogeneous_oracle():
    cam = simple_camera()
    rng = np.random.default_rng(0)
    for _ in range(100):
        pose = SE3.exp(rng.normal(0, 0.5, 6))
        P = pose.transform(np.array([rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4),
                                     rng.uniform(0.5, 4.0)]))
        pix, d, ok = project_anchor(pose, cam, make_anchor(P))
        assert ok
        # independent path: 4x4 inverse matrix action then explicit pinhole
        Tinv = np.linalg.inv(pose.matrix())
        Pc = (Tinv @ np.append(P, 1.0))[:3]
        oracle = np.array([100.0 * Pc[0] / Pc[2] + 50.0, 100.0 * Pc[1] / Pc[2] + 50.0])
        assert np.max(np.abs(pix - oracle)) < 1e-12
        assert d == pytest.approx(np.log(Pc[2]), abs=1e-12)


def test_project_behind_camera_flagged():
    cam = simple_camera()
    _, _, ok = project_anchor(SE3(), cam, make_anchor([0, 0, -1.0]))
    assert not ok
    _, _, ok = project_anchor(SE3(), cam, make_anchor([0, 0, 5e-5]))
    assert not ok


def test_reset_behind_camera():
    cam = simple_camera()
    pose = SE3()
    behind = make_anchor([0.3, 0.1, -1.0], pixel=(60.0, 40.0))
    fixed = reset_behind_camera(behind, pose, cam, median_depth=2.0)
    Pc = pose.R.T @ (fixed.position_world - pose.t)
    assert Pc[2] == pytest.approx(2.0)
    assert np.allclose(cam.project(Pc), [60.0, 40.0], atol=1e-10)
    # z slightly above zero but under the threshold also resets
    near = make_anchor([0.0, 0.0, 5e-5], pixel=(50.0, 50.0))
    assert reset_behind_camera(near, pose, cam, 2.0).position_world[2] == pytest.approx(2.0)
    # in-front anchors come back unchanged
    front = make_anchor([0.0, 0.0, 1.0])
    assert reset_behind_camera(front, pose, cam, 2.0) is front


def test_decode_interpolates_anchor_depths():
    pose, cam, anchors, _, _ = random_instance(1, m=5, n=0)
    rng = np.random.default_rng(2)
    from scipy.ndimage import gaussian_filter
    img = gaussian_filter(rng.random((101, 101)), 2.0)
    model = CovarianceModel(extract_features(img, FeatureConfig()), 20.0, 1.0, 1.0)
    anchor_pix, _, ok = project_anchors(pose, cam, anchors)
    assert ok.all()
    pfs = model.pixel_features(anchor_pix)
    cov = build_covariance(model, pfs, pfs, jitter=1e-8)
    geom = decode_dense(anchors, pose, cam, cov.cond, anchor_pix)
    assert np.max(np.abs(geom.logdepth - geom.anchor_logdepth)) < 1e-6


def test_single_anchor_decode_closed_form():
    cam = simple_camera()
    pose = SE3()
    anchors = np.array([[0.0, 0.0, 2.0]])
    # constant-feature image: kernel depends on pixel distance only
    model = CovarianceModel(np.zeros((101, 101, 6)), 20.0, 1.0, 1.0)
    anchor_pix = np.array([[50.0, 50.0]])
    query_pix = np.array([[50.0, 50.0], [60.0, 50.0], [80.0, 50.0]])
    jitter = 1e-8
    cov = build_covariance(model, model.pixel_features(anchor_pix),
                           model.pixel_features(query_pix), jitter=jitter)
    geom = decode_dense(anchors, pose, cam, cov.cond, query_pix)
    d_m = np.log(2.0)
    for i, q in enumerate(query_pix):
        k = np.exp(-0.5 * np.sum((q - anchor_pix[0]) ** 2) / 20.0 ** 2)
        assert geom.logdepth[i] == pytest.approx(k / (1 + jitter) * d_m, rel=1e-9)


def test_decode_plane_scene_consistency():
    # anchors on a fronto-parallel plane: queries should decode near the plane,
    # and the deviation shrinks as the anchor set grows
    cam = simple_camera()
    pose = SE3()
    model = CovarianceModel(np.zeros((101, 101, 6)), 25.0, 1.0, 1.0)
    rng = np.random.default_rng(3)
    query_pix = rng.uniform(10, 90, size=(50, 2))
    errors = []
    for m in (4, 16, 36):
        side = int(np.sqrt(m))
        g = np.linspace(15, 85, side)
        anchor_pix = np.array([(u, v) for v in g for u in g])
        anchors = cam.unproject(anchor_pix, np.full(len(anchor_pix), 2.0))
        cov = build_covariance(model, model.pixel_features(anchor_pix),
                               model.pixel_features(query_pix), jitter=1e-8)
        geom = decode_dense(anchors, pose, cam, cov.cond, query_pix)
        errors.append(np.max(np.abs(geom.points_cam[:, 2] - 2.0)))
    assert errors[2] < errors[0]
    assert errors[2] < 0.05


def relative_error(J, J_fd):
    scale = max(np.max(np.abs(J_fd)), 1e-12)
    return np.max(np.abs(J - J_fd)) / scale


def fd_anchor_jacobian(anchors, pose, cam, cond, query_pix, h=1e-6):
    m = len(anchors)
    base = decode_dense(anchors, pose, cam, cond, query_pix)
    J = np.zeros((len(query_pix), 3, m, 3))
    for mm in range(m):
        for k in range(3):
            plus = anchors.copy()
            plus[mm, k] += h
            minus = anchors.copy()
            minus[mm, k] -= h
            gp = decode_dense(plus, pose, cam, cond, query_pix)
            gm = decode_dense(minus, pose, cam, cond, query_pix)
            J[:, :, mm, k] = (gp.points_world - gm.points_world) / (2 * h)
    return base, J


def fd_pose_jacobian(anchors, pose, cam, cond, query_pix, h=1e-7):
    J = np.zeros((len(query_pix), 3, 6))
    for k in range(6):
        xi = np.zeros(6)
        xi[k] = h
        gp = decode_dense(anchors, pose.retract(xi), cam, cond, query_pix)
        gm = decode_dense(anchors, pose.retract(-xi), cam, cond, query_pix)
        J[:, :, k] = (gp.points_world - gm.points_world) / (2 * h)
    return J


@pytest.mark.parametrize("seed", range(20))
def test_dense_anchor_jacobian_matches_fd(seed):
    pose, cam, anchors, cond, query_pix = random_instance(seed, m=4, n=16)
    geom, J_fd = fd_anchor_jacobian(anchors, pose, cam, cond, query_pix)
    J = jacobian_dense_points_wrt_anchors(geom, pose, cond)
    assert relative_error(J, J_fd) < 1e-5


@pytest.mark.parametrize("seed", range(20))
def test_dense_pose_jacobian_matches_fd(seed):
    pose, cam, anchors, cond, query_pix = random_instance(seed + 100, m=4, n=16)
    geom = decode_dense(anchors, pose, cam, cond, query_pix)
    J = jacobian_dense_points_wrt_pose(geom, pose, cond)
    J_fd = fd_pose_jacobian(anchors, pose, cam, cond, query_pix)
    assert relative_error(J, J_fd) < 1e-5


def test_zero_tangent_zero_change():
    pose, cam, anchors, cond, query_pix = random_instance(7)
    a = decode_dense(anchors, pose, cam, cond, query_pix)
    b = decode_dense(anchors, pose.retract(np.zeros(6)), cam, cond, query_pix)
    assert np.allclose(a.points_world, b.points_world, atol=0)


def test_anchor_coupling_is_dense_through_cond():
    # perturbing one anchor moves every dense point whose cond entry is nonzero
    pose, cam, anchors, cond, query_pix = random_instance(8, m=3, n=12)
    geom, J_fd = fd_anchor_jacobian(anchors, pose, cam, cond, query_pix)
    J = jacobian_dense_points_wrt_anchors(geom, pose, cond)
    norms = np.linalg.norm(J.reshape(len(query_pix), 3, 3, 3), axis=(1, 3))
    assert np.all((norms > 1e-12) == (np.abs(cond) > 1e-12))


def test_logdepth_prior_jacobians_match_fd():
    rng = np.random.default_rng(9)
    cam = simple_camera()
    for _ in range(20):
        pose = SE3.exp(rng.normal(0, 0.3, 6))
        P_W = pose.transform(np.array([rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                                       rng.uniform(0.5, 3.0)]))[None, :]
        Pc = pose.inverse_transform(P_W)
        J_point, J_pose = anchor_logdepth_jacobians(Pc, pose)

        def logdepth(pose_, P_):
            return np.log(pose_.inverse_transform(P_)[0, 2])

        h = 1e-6
        fd_point = np.zeros(3)
        for k in range(3):
            dP = np.zeros(3)
            dP[k] = h
            fd_point[k] = (logdepth(pose, P_W + dP) - logdepth(pose, P_W - dP)) / (2 * h)
        assert np.allclose(J_point[0], fd_point, rtol=1e-5, atol=1e-8)
        fd_pose = np.zeros(6)
        for k in range(6):
            xi = np.zeros(6)
            xi[k] = h
            fd_pose[k] = (logdepth(pose.retract(xi), P_W)
                          - logdepth(pose.retract(-xi), P_W)) / (2 * h)
        assert np.allclose(J_pose[0], fd_pose, rtol=1e-5, atol=1e-8)


def test_pixel_prior_jacobians_match_fd():
    rng = np.random.default_rng(10)
    cam = simple_camera()
    for _ in range(20):
        pose = SE3.exp(rng.normal(0, 0.3, 6))
        P_W = pose.transform(np.array([rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                                       rng.uniform(0.5, 3.0)]))[None, :]
        Pc = pose.inverse_transform(P_W)
        J_point, J_pose = anchor_pixel_jacobians(Pc, pose, cam)

        def pix(pose_, P_):
            return cam.project(pose_.inverse_transform(P_))[0]

        h = 1e-7
        for k in range(3):
            dP = np.zeros(3)
            dP[k] = h
            fd = (pix(pose, P_W + dP) - pix(pose, P_W - dP)) / (2 * h)
            assert np.allclose(J_point[0][:, k], fd, rtol=1e-5, atol=1e-7)
        for k in range(6):
            xi = np.zeros(6)
            xi[k] = h
            fd = (pix(pose.retract(xi), P_W) - pix(pose.retract(-xi), P_W)) / (2 * h)
            assert np.allclose(J_pose[0][:, k], fd, rtol=1e-5, atol=1e-7)
