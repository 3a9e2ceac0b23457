"""Dense photometric residuals, robust weighting, and their Jacobians.

A photometric edge compares a reference keyframe (which hosts the
dense geometry and supplies the sampled pixels) against a target frame
(which supplies intensities).  Residuals follow the affine brightness
model

    r = I_t(p_t) + b_t - (exp(a_t - a_r) * I_r(p_r) + b_r)

and a projection that leaves the target image or lands behind the
target camera is marked invalid and contributes nothing to cost,
gradient, or Hessian.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import camera_point_pose_jacobian, dense_point_jacobians
from .errors import DegenerateEdgeError
from .image import bilinear, in_bounds_mask

HUBER_DELTA = 1.345
SIGMA_MIN = 1e-3
MAD_SCALE = 1.4826
BORDER_MARGIN = 1.0


@dataclass
class PhotometricEdge:
    """Directed edge: reference keyframe id -> target frame id."""

    reference_id: int
    target_id: int


@dataclass
class EdgeObservation:
    """Target-side lookups for one edge at the current state."""

    residuals: np.ndarray     # (S,)
    valid: np.ndarray         # (S,) bool
    pixels_target: np.ndarray  # (S, 2)
    points_cam_target: np.ndarray  # (S, 3)
    gain: float               # exp(a_t - a_r)


def edge_residuals(ref, tgt, camera, z_min=1e-4):
    """Residuals of one edge over the reference's sampled pixels."""
    P_W = ref.sampled_world_points
    P_Ct = tgt.pose.inverse_transform(P_W)
    in_front = P_Ct[:, 2] > z_min
    pixels = np.zeros((len(P_W), 2))
    if np.any(in_front):
        pixels[in_front] = camera.project(P_Ct[in_front])
    valid = in_front & in_bounds_mask(pixels, camera.width, camera.height,
                                      margin=BORDER_MARGIN)
    gain = float(np.exp(tgt.affine[0] - ref.affine[0]))
    residuals = np.zeros(len(P_W))
    if np.any(valid):
        I_t = bilinear(tgt.image, pixels[valid])
        residuals[valid] = (I_t + tgt.affine[1]
                            - (gain * ref.sampled_intensity[valid] + ref.affine[1]))
    return EdgeObservation(residuals=residuals, valid=valid, pixels_target=pixels,
                           points_cam_target=P_Ct, gain=gain)


def photometric_residual(ref, tgt, camera, index):
    """Scalar (residual, valid) for one sampled pixel of the edge."""
    obs = edge_residuals(ref, tgt, camera)
    return float(obs.residuals[index]), bool(obs.valid[index])


def robust_weights(residuals, valid=None, huber_delta=HUBER_DELTA, sigma_min=SIGMA_MIN):
    """Huber IRLS weights with MAD-scaled sigma.

    sigma = 1.4826 * median(|r|) over valid residuals, clamped below by
    sigma_min; weights are 1/sigma^2 inside the Huber region and
    delta / (|r/sigma| * sigma^2) outside.  Invalid entries get zero.
    """
    residuals = np.asarray(residuals, dtype=float)
    if valid is None:
        valid = np.ones(residuals.shape, dtype=bool)
    if not np.any(valid):
        raise DegenerateEdgeError("no valid residuals on edge")
    sigma = max(MAD_SCALE * float(np.median(np.abs(residuals[valid]))), sigma_min)
    x = np.abs(residuals) / sigma
    weights = np.where(x <= huber_delta, 1.0 / sigma**2,
                       huber_delta / np.maximum(x, 1e-300) / sigma**2)
    weights = np.where(valid, weights, 0.0)
    return weights, sigma


def huber_cost(residuals, valid, sigma, huber_delta=HUBER_DELTA):
    """Total robust cost of whitened residuals (quadratic core, linear tails)."""
    x = np.abs(residuals[valid]) / sigma
    quad = x <= huber_delta
    return float(np.sum(x[quad] ** 2) + np.sum(2 * huber_delta * x[~quad] - huber_delta**2))


@dataclass
class EdgeLinearization:
    """Per-pixel residuals and factored Jacobians of one edge.

    The geometry Jacobian of pixel n w.r.t. anchor m is the rank-one
    expansion G[n, m] * C, with C the shared world-to-reference depth
    row; frame Jacobians stack pose (6) then affine (2).
    """

    residuals: np.ndarray   # (S,)
    valid: np.ndarray       # (S,)
    weights: np.ndarray     # (S,)
    sigma: float
    J_ref: np.ndarray       # (S, 8)
    J_tgt: np.ndarray       # (S, 8)
    G: np.ndarray           # (S, M)
    C: np.ndarray           # (3,)


def linearize_edge(ref, tgt, camera, z_min=1e-4, huber_delta=HUBER_DELTA,
                   sigma_min=SIGMA_MIN):
    """Residuals, IRLS weights, and all Jacobians for one edge."""
    obs = edge_residuals(ref, tgt, camera, z_min=z_min)
    weights, sigma = robust_weights(obs.residuals, obs.valid,
                                    huber_delta=huber_delta, sigma_min=sigma_min)
    S = len(obs.residuals)
    sl = slice(ref.num_anchor_queries, None)
    geom = ref.geom
    cond = ref.sampled_cond
    # image gradient and projection chain on the target side
    grad = np.zeros((S, 2))
    v = obs.valid
    if np.any(v):
        gx, gy = tgt.gradients
        grad[v, 0] = bilinear(gx, obs.pixels_target[v])
        grad[v, 1] = bilinear(gy, obs.pixels_target[v])
    Jproj = camera.projection_jacobian(np.where(obs.points_cam_target[:, 2:3] > 0,
                                                obs.points_cam_target,
                                                np.array([0.0, 0.0, 1.0])))
    gamma = np.einsum("sk,skj->sj", grad, Jproj)          # (S, 3) dI/dP_Ct
    J_tgt = np.zeros((S, 8))
    J_tgt[:, :6] = np.einsum("sj,sjk->sk", gamma,
                             camera_point_pose_jacobian(obs.points_cam_target))
    J_tgt[:, 6] = -obs.gain * ref.sampled_intensity
    J_tgt[:, 7] = 1.0
    # reference side: transport the gradient direction into the world frame
    beta = gamma @ tgt.pose.R.T                            # (S, 3) dI/dP_W
    sampled_geom = _SampledGeometry(geom, sl)
    left, coeff, right, Sm = dense_point_jacobians(sampled_geom, ref.pose, cond)
    alpha = np.einsum("sj,sj->s", beta, left)              # (S,)
    G = alpha[:, None] * coeff                             # (S, M)
    J_ref = np.zeros((S, 8))
    direct = np.zeros((S, 6))
    direct[:, :3] = beta @ ref.pose.R
    Pr = sampled_geom.points_cam
    hat_beta = np.einsum("sj,sjk->sk", beta @ ref.pose.R, _hat_rows(Pr))
    direct[:, 3:] = -hat_beta
    J_ref[:, :6] = direct + alpha[:, None] * (cond @ Sm)
    J_ref[:, 6] = obs.gain * ref.sampled_intensity
    J_ref[:, 7] = -1.0
    # invalid pixels contribute nothing anywhere
    J_ref[~v] = 0.0
    J_tgt[~v] = 0.0
    G[~v] = 0.0
    residuals = np.where(v, obs.residuals, 0.0)
    return EdgeLinearization(residuals=residuals, valid=v, weights=weights,
                             sigma=sigma, J_ref=J_ref, J_tgt=J_tgt, G=G, C=right)


class _SampledGeometry:
    """View of a DenseGeometry restricted to the sampled query rows."""

    def __init__(self, geom, sl):
        self.points_cam = geom.points_cam[sl]
        self.anchor_z = geom.anchor_z
        self.anchor_points_cam = geom.anchor_points_cam


def _hat_rows(P):
    out = np.zeros((len(P), 3, 3))
    out[:, 0, 1] = -P[:, 2]
    out[:, 0, 2] = P[:, 1]
    out[:, 1, 0] = P[:, 2]
    out[:, 1, 2] = -P[:, 0]
    out[:, 2, 0] = -P[:, 1]
    out[:, 2, 1] = P[:, 0]
    return out


def expand_anchor_jacobian(lin: EdgeLinearization):
    """Dense (S, 3M) per-pixel anchor Jacobian from the factored pieces."""
    S, M = lin.G.shape
    return (lin.G[:, :, None] * lin.C[None, None, :]).reshape(S, 3 * M)


def residual_jacobians(ref, tgt, camera, index, z_min=1e-4):
    """Per-pixel Jacobians: (J_anchor (3M,), J_pose_ref, J_pose_tgt,
    J_affine_ref, J_affine_tgt) for one sampled pixel of the edge."""
    lin = linearize_edge(ref, tgt, camera, z_min=z_min)
    J_anchor = expand_anchor_jacobian(lin)[index]
    return (J_anchor, lin.J_ref[index, :6], lin.J_tgt[index, :6],
            lin.J_ref[index, 6:], lin.J_tgt[index, 6:])


def build_edges(keyframes, support_frames):
    """The photometric edge set for the current window.

    Consecutive keyframe pairs in both directions, plus each support
    frame as a target of its two temporally nearest keyframes.
    """
    edges = []
    kfs = sorted(keyframes, key=lambda k: k.timestamp)
    for a, b in zip(kfs[:-1], kfs[1:]):
        edges.append(PhotometricEdge(a.frame_id, b.frame_id))
        edges.append(PhotometricEdge(b.frame_id, a.frame_id))
    for sup in support_frames:
        if not kfs:
            continue
        by_dt = sorted(kfs, key=lambda k: (abs(k.timestamp - sup.timestamp), k.timestamp))
        for ref in by_dt[:2]:
            edges.append(PhotometricEdge(ref.frame_id, sup.frame_id))
    return edges
