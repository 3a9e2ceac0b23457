"""Shared builders for tests: rendered keyframes with exact geometry."""

import numpy as np

from anchorvo.config import FeatureConfig
from anchorvo.frames import Frame, Keyframe
from anchorvo.geometry import AnchorPoint, decode_dense
from anchorvo.image import ImagePyramid, sample_high_gradient_pixels
from anchorvo.kernel import CovarianceModel, build_covariance
from anchorvo.synth import render_frame


def anchor_grid_pixels(depth_map, side=4, border=12):
    """Grid of pixels with valid depth, roughly side x side."""
    h, w = depth_map.shape
    us = np.linspace(border, w - 1 - border, side)
    vs = np.linspace(border, h - 1 - border, side)
    pixels = []
    for v in vs:
        for u in us:
            if np.isfinite(depth_map[int(round(v)), int(round(u))]):
                pixels.append((float(round(u)), float(round(v))))
    return np.array(pixels)


def make_rendered_keyframe(frame_id, scene, pose, timestamp=0.0, anchor_side=4,
                           patch=8, use_gt_depth=False, jitter=1e-8,
                           feature_config=None, pixel_ls=24.0, feat_ls=1.5):
    """Keyframe over a rendered view with anchors taken from true depth.

    With use_gt_depth the sampled-pixel geometry rows are replaced by the
    exact backprojected ground truth (for residual-floor tests); otherwise
    they carry the GP decode.
    """
    camera = scene.camera
    image, depth = render_frame(scene, pose)
    kf = Keyframe(frame_id, timestamp, ImagePyramid(image, levels=3), pose.copy())
    config = feature_config or FeatureConfig(pixel_length_scale=pixel_ls,
                                             feature_length_scale=feat_ls)
    kf.model = CovarianceModel.from_image(image, config)
    anchor_px = anchor_grid_pixels(depth, side=anchor_side)
    anchor_depth = np.array([depth[int(v), int(u)] for u, v in anchor_px])
    anchors_world = pose.transform(camera.unproject(anchor_px, anchor_depth))
    sampled = sample_high_gradient_pixels(kf.pyramid, patch_size=patch)
    valid_depth = np.array([np.isfinite(depth[int(v), int(u)]) for u, v in sampled])
    sampled = sampled[valid_depth]
    kf.query_pixels = np.concatenate([anchor_px, sampled], axis=0)
    kf.num_anchor_queries = len(anchor_px)
    kf.cov = build_covariance(kf.model, kf.model.pixel_features(anchor_px),
                              kf.model.pixel_features(kf.query_pixels), jitter=jitter)
    kf.anchor_ids = list(range(len(anchor_px)))
    kf.geom = decode_dense(anchors_world, pose, camera, kf.cov.cond, kf.query_pixels,
                           keyframe_id=frame_id)
    if use_gt_depth:
        gt = np.array([depth[int(v), int(u)] for u, v in sampled])
        pts_cam = camera.unproject(sampled, gt)
        kf.geom.logdepth[len(anchor_px):] = np.log(gt)
        kf.geom.points_cam[len(anchor_px):] = pts_cam
        kf.geom.points_world[len(anchor_px):] = pose.transform(pts_cam)
    kf.median_logdepth = float(np.median(kf.geom.logdepth))
    kf.finish_setup()
    anchors = [AnchorPoint(position_world=p, host_keyframe_id=frame_id,
                           host_pixel=px, median_logdepth_at_init=kf.median_logdepth,
                           anchor_id=i)
               for i, (p, px) in enumerate(zip(anchors_world, anchor_px))]
    return kf, anchors, image, depth


def make_target_frame(frame_id, scene, pose, timestamp=0.0, affine=None):
    image, _ = render_frame(scene, pose)
    return Frame(frame_id, timestamp, ImagePyramid(image, levels=3), pose.copy(),
                 affine=affine)
