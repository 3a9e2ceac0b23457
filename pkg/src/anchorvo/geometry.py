"""Anchor points, compact-to-dense decoding, and geometry Jacobians.

A keyframe's dense geometry is produced by projecting its visible
anchor points, conditioning the depth GP on the projected log-depths
(d_N = cond @ d_M with cond cached at keyframe creation), and
backprojecting each query pixel to a world point.  The conditioning
matrix is deliberately held constant during optimization, so every
Jacobian here treats `cond` and the query pixel grid as frozen.
"""

from dataclasses import dataclass, replace

import numpy as np

from .se3 import SE3, hat

Z_MIN_DEFAULT = 1e-4
EZ = np.array([0.0, 0.0, 1.0])


@dataclass
class AnchorPoint:
    """World-frame 3D point shared across the keyframes that view it."""

    position_world: np.ndarray      # (3,)
    host_keyframe_id: int
    host_pixel: np.ndarray          # (2,) pixel of first observation
    median_logdepth_at_init: float  # log median depth of the host at creation
    anchor_id: int = -1


@dataclass
class DenseGeometry:
    """Dense decode of one keyframe at its query pixels."""

    keyframe_id: int
    query_pixels: np.ndarray   # (N, 2)
    logdepth: np.ndarray       # (N,)
    points_world: np.ndarray   # (N, 3)
    points_cam: np.ndarray     # (N, 3)
    anchor_logdepth: np.ndarray  # (M,) current log-depths of the anchors
    anchor_z: np.ndarray         # (M,) camera-frame z of the anchors
    anchor_points_cam: np.ndarray  # (M, 3)


def project_anchor(pose: SE3, camera, anchor: AnchorPoint, z_min=Z_MIN_DEFAULT):
    """Project one anchor into a keyframe: (pixel, logdepth, in_front)."""
    P_C = pose.R.T @ (anchor.position_world - pose.t)
    in_front = P_C[2] > z_min
    if not in_front:
        return np.full(2, np.nan), np.nan, False
    pixel = camera.project(P_C)
    return pixel, float(np.log(P_C[2])), True


def project_anchors(pose: SE3, camera, positions_world, z_min=Z_MIN_DEFAULT):
    """Vectorized anchor projection: (pixels, logdepths, in_front mask)."""
    P_C = pose.inverse_transform(positions_world)
    z = P_C[:, 2]
    in_front = z > z_min
    pixels = np.full((len(P_C), 2), np.nan)
    logdepth = np.full(len(P_C), np.nan)
    if np.any(in_front):
        pixels[in_front] = camera.project(P_C[in_front])
        logdepth[in_front] = np.log(z[in_front])
    return pixels, logdepth, in_front


def reset_behind_camera(anchor: AnchorPoint, pose: SE3, camera, median_depth,
                        z_min=Z_MIN_DEFAULT):
    """Reinitialize an anchor that fell behind its host camera.

    The replacement sits on the host-pixel ray at the host keyframe's
    median scene depth; anchors still in front are returned unchanged.
    """
    P_C = pose.R.T @ (anchor.position_world - pose.t)
    if P_C[2] > z_min:
        return anchor
    P_C_new = camera.unproject(anchor.host_pixel, median_depth)
    return replace(anchor, position_world=pose.transform(P_C_new))


def decode_dense(anchor_positions, pose: SE3, camera, cond, query_pixels,
                 keyframe_id=-1):
    """Dense log-depth and world points from anchors and the cached cond.

    anchor_positions: (M, 3) world points, all in front of the camera.
    cond: (N, M) conditioning matrix frozen at keyframe creation.
    query_pixels: (N, 2) pixels the keyframe decodes at.
    """
    P_Cm = pose.inverse_transform(anchor_positions)
    z_m = P_Cm[:, 2]
    if np.any(z_m <= 0):
        raise ValueError("decode requires all anchors in front of the camera")
    d_M = np.log(z_m)
    d_N = cond @ d_M
    P_Cn = camera.unproject(query_pixels, np.exp(d_N))
    P_Wn = pose.transform(P_Cn)
    return DenseGeometry(
        keyframe_id=keyframe_id,
        query_pixels=np.asarray(query_pixels, dtype=float),
        logdepth=d_N,
        points_world=P_Wn,
        points_cam=P_Cn,
        anchor_logdepth=d_M,
        anchor_z=z_m,
        anchor_points_cam=P_Cm,
    )


def dense_point_jacobians(geom: DenseGeometry, pose: SE3, cond):
    """Factored Jacobians of dense world points.

    Returns (left, coeff, right, S) with:
      d P_W^n / d P_W^m = coeff[n, m] * outer(left[n], right)
      d P_W^n / d xi_r  = direct[n] + outer(left[n], cond[n] @ S)
    where left[n] = R @ P_cam_n, right = R @ e_z, coeff = cond / z_m,
    S[m] = (1 / z_m) e_z^T d P_cam_m / d xi_r, and `direct` is the
    right-perturbation Jacobian of transforming P_cam_n to the world.
    """
    left = geom.points_cam @ pose.R.T
    right = pose.R @ EZ
    coeff = cond / geom.anchor_z[None, :]
    S = np.zeros((len(geom.anchor_z), 6))
    S[:, 2] = -1.0
    # e_z^T hat(P_Cm) = (-y, x, 0)
    S[:, 3] = -geom.anchor_points_cam[:, 1]
    S[:, 4] = geom.anchor_points_cam[:, 0]
    S /= geom.anchor_z[:, None]
    return left, coeff, right, S


def jacobian_dense_points_wrt_anchors(geom: DenseGeometry, pose: SE3, cond):
    """Dense (N, 3, M, 3) anchor Jacobian; test/oracle form of the chain."""
    left, coeff, right, _ = dense_point_jacobians(geom, pose, cond)
    return np.einsum("nm,ni,j->nimj", coeff, left, right)


def jacobian_dense_points_wrt_pose(geom: DenseGeometry, pose: SE3, cond):
    """Dense (N, 3, 6) pose Jacobian for right-perturbed T * exp(xi).

    Sum of the direct transform term and the chained term through every
    anchor's camera-frame depth.
    """
    left, coeff, right, S = dense_point_jacobians(geom, pose, cond)
    n = len(left)
    direct = np.zeros((n, 3, 6))
    direct[:, :, :3] = pose.R[None, :, :]
    hats = np.zeros((n, 3, 3))
    P = geom.points_cam
    hats[:, 0, 1] = -P[:, 2]
    hats[:, 0, 2] = P[:, 1]
    hats[:, 1, 0] = P[:, 2]
    hats[:, 1, 2] = -P[:, 0]
    hats[:, 2, 0] = -P[:, 1]
    hats[:, 2, 1] = P[:, 0]
    direct[:, :, 3:] = -pose.R @ hats
    chained = np.einsum("ni,nk->nik", left, cond @ S)
    return direct + chained


def anchor_logdepth_jacobians(anchor_points_cam, pose: SE3):
    """Jacobians of each anchor's projected log-depth (depth priors).

    Returns (J_point, J_pose): J_point[m] = d d_m / d P_W^m (3,) and
    J_pose[m] = d d_m / d xi_r (6,) with right perturbation.
    """
    z = anchor_points_cam[:, 2]
    J_point = (pose.R @ EZ)[None, :] / z[:, None]
    J_pose = np.zeros((len(z), 6))
    J_pose[:, 2] = -1.0
    J_pose[:, 3] = -anchor_points_cam[:, 1]
    J_pose[:, 4] = anchor_points_cam[:, 0]
    J_pose /= z[:, None]
    return J_point, J_pose


def anchor_pixel_jacobians(anchor_points_cam, pose: SE3, camera):
    """Jacobians of each anchor's projected pixel (pixel prior).

    Returns (J_point, J_pose) with shapes (M, 2, 3) and (M, 2, 6).
    """
    Jproj = camera.projection_jacobian(anchor_points_cam)
    J_point = Jproj @ pose.R.T
    J_pose = np.einsum("mij,mjk->mik", Jproj,
                       camera_point_pose_jacobian(anchor_points_cam))
    return J_point, J_pose


def camera_point_pose_jacobian(points_cam):
    """d P_cam / d xi for the inverse action (T * exp(xi))^-1 P_W.

    Shape (N, 3, 6): [-I | hat(P_cam)] rows.
    """
    P = np.atleast_2d(points_cam)
    J = np.zeros((P.shape[0], 3, 6))
    J[:, :, :3] = -np.eye(3)
    J[:, 0, 4] = -P[:, 2]
    J[:, 0, 5] = P[:, 1]
    J[:, 1, 3] = P[:, 2]
    J[:, 1, 5] = -P[:, 0]
    J[:, 2, 3] = -P[:, 1]
    J[:, 2, 4] = P[:, 0]
    return J
