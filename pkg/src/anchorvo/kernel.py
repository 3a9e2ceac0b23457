"""Depth covariance function over feature-augmented pixels.

The covariance between two pixels is a product of RBFs over pixel
coordinates and per-pixel image features, so it is nonstationary:
similar-looking, nearby pixels get large covariance, which the dense
decoding stage interprets as similarity in log-depth.  Covariance
matrices are built once per keyframe and cached.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.ndimage import correlate, gaussian_filter

from .config import FeatureConfig
from .errors import DimensionError, EmptyAnchorError, SingularCovarianceError

_SCHARR_X = np.array([[-3.0, 0.0, 3.0],
                      [-10.0, 0.0, 10.0],
                      [-3.0, 0.0, 3.0]]) / 32.0


def scharr_gradients(image):
    """(gx, gy) via 3x3 Scharr filters with replicated borders."""
    image = np.asarray(image, dtype=float)
    gx = correlate(image, _SCHARR_X, mode="nearest")
    gy = correlate(image, _SCHARR_X.T, mode="nearest")
    return gx, gy


def extract_features(image, config: FeatureConfig):
    """Per-pixel descriptor map, shape (H, W, 2 * num_scales).

    Channels are blurred intensity and Scharr gradient magnitude at
    `num_scales` blur levels, each normalized to zero mean / unit
    variance over the image so the feature length scale is comparable
    across inputs.
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise DimensionError("feature extraction expects a 2-d grayscale image")
    h, w = image.shape
    if h < 16 or w < 16:
        raise DimensionError(f"image too small for feature extraction: {w}x{h}")
    channels = []
    for level in range(config.num_scales):
        sigma = config.base_sigma * (2.0 ** level)
        blurred = gaussian_filter(image, sigma, mode="nearest")
        gx, gy = scharr_gradients(blurred)
        channels.append(blurred)
        channels.append(np.hypot(gx, gy))
    feats = np.stack(channels, axis=-1)
    mean = feats.reshape(-1, feats.shape[-1]).mean(axis=0)
    std = feats.reshape(-1, feats.shape[-1]).std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return (feats - mean) / std


def sample_feature_map(feature_map, pixels):
    """Bilinear lookup of feature vectors at continuous (u, v) pixels."""
    pixels = np.asarray(pixels, dtype=float)
    single = pixels.ndim == 1
    p = np.atleast_2d(pixels)
    h, w = feature_map.shape[:2]
    u = np.clip(p[:, 0], 0.0, w - 1.0)
    v = np.clip(p[:, 1], 0.0, h - 1.0)
    u0 = np.clip(np.floor(u).astype(int), 0, w - 2)
    v0 = np.clip(np.floor(v).astype(int), 0, h - 2)
    fu = (u - u0)[:, None]
    fv = (v - v0)[:, None]
    f00 = feature_map[v0, u0]
    f01 = feature_map[v0, u0 + 1]
    f10 = feature_map[v0 + 1, u0]
    f11 = feature_map[v0 + 1, u0 + 1]
    out = (f00 * (1 - fu) * (1 - fv) + f01 * fu * (1 - fv)
           + f10 * (1 - fu) * fv + f11 * fu * fv)
    return out[0] if single else out


@dataclass(frozen=True)
class PixelFeature:
    """A pixel location paired with its descriptor."""

    pixel: np.ndarray    # (2,) u, v
    feature: np.ndarray  # (F,)


class CovarianceModel:
    """Feature map plus kernel hyperparameters for one image."""

    def __init__(self, feature_map, pixel_length_scale, feature_length_scale,
                 signal_variance):
        if pixel_length_scale <= 0 or feature_length_scale <= 0 or signal_variance <= 0:
            raise ValueError("kernel length scales and signal variance must be positive")
        self.feature_map = np.asarray(feature_map, dtype=float)
        self.pixel_length_scale = float(pixel_length_scale)
        self.feature_length_scale = float(feature_length_scale)
        self.signal_variance = float(signal_variance)

    @staticmethod
    def from_image(image, config: FeatureConfig):
        return CovarianceModel(extract_features(image, config),
                               config.pixel_length_scale,
                               config.feature_length_scale,
                               config.signal_variance)

    def pixel_features(self, pixels):
        """PixelFeature list for continuous (u, v) coordinates."""
        pixels = np.atleast_2d(np.asarray(pixels, dtype=float))
        feats = sample_feature_map(self.feature_map, pixels)
        return [PixelFeature(p.copy(), f.copy()) for p, f in zip(pixels, feats)]

    def gram(self, pixels_a, features_a, pixels_b, features_b):
        """Covariance matrix between two pixel/feature sets, shape (A, B)."""
        pa = np.atleast_2d(pixels_a)
        pb = np.atleast_2d(pixels_b)
        fa = np.atleast_2d(features_a)
        fb = np.atleast_2d(features_b)
        d_pix = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(-1)
        d_feat = ((fa[:, None, :] - fb[None, :, :]) ** 2).sum(-1)
        return self.signal_variance * np.exp(
            -0.5 * d_pix / self.pixel_length_scale ** 2
            - 0.5 * d_feat / self.feature_length_scale ** 2)


def kernel_eval(model, a: PixelFeature, b: PixelFeature):
    """Covariance between two feature-augmented pixels."""
    d_pix = float(np.sum((a.pixel - b.pixel) ** 2))
    d_feat = float(np.sum((a.feature - b.feature) ** 2))
    return model.signal_variance * np.exp(
        -0.5 * d_pix / model.pixel_length_scale ** 2
        - 0.5 * d_feat / model.feature_length_scale ** 2)


class CovarianceMatrices:
    """K_MM, K_NM and the cached conditioning matrix K_NM (K_MM + jI)^-1.

    Immutable after construction; `cho` is the Cholesky factor of the
    jittered K_MM for reuse in conditional solves.
    """

    __slots__ = ("K_MM", "K_NM", "cond", "jitter", "cho")

    def __init__(self, K_MM, K_NM, cond, jitter, cho):
        self.K_MM = K_MM
        self.K_NM = K_NM
        self.cond = cond
        self.jitter = jitter
        self.cho = cho

    @property
    def num_anchors(self):
        return self.K_MM.shape[0]


def _stack(pixel_features):
    pixels = np.array([pf.pixel for pf in pixel_features], dtype=float)
    features = np.array([pf.feature for pf in pixel_features], dtype=float)
    return pixels, features


def build_covariance(model, anchors, queries, jitter=None):
    """Covariance matrices for M anchor and N query pixel features.

    The conditioning matrix is solved against the jittered K_MM by
    Cholesky; a failed factorization retries with jitter * 10 up to
    three times before raising.
    """
    if len(anchors) == 0:
        raise EmptyAnchorError("at least one anchor pixel is required")
    if jitter is None:
        jitter = 1e-6 * model.signal_variance
    if jitter < 0:
        raise ValueError("jitter must be non-negative")
    pa, fa = _stack(anchors)
    K_MM = model.gram(pa, fa, pa, fa)
    K_MM = 0.5 * (K_MM + K_MM.T)
    if len(queries):
        pq, fq = _stack(queries)
        K_NM = model.gram(pq, fq, pa, fa)
    else:
        K_NM = np.zeros((0, len(anchors)))
    current = jitter
    cho = None
    for attempt in range(4):
        try:
            cho = cho_factor(K_MM + current * np.eye(K_MM.shape[0]), lower=True)
            break
        except np.linalg.LinAlgError:
            if attempt == 3:
                raise SingularCovarianceError(
                    f"anchor covariance not positive definite with jitter {current:g}")
            current = max(current, 1e-12 * model.signal_variance) * 10.0
    cond = cho_solve(cho, K_NM.T).T
    return CovarianceMatrices(K_MM=K_MM, K_NM=K_NM, cond=cond, jitter=current, cho=cho)


def conditional_variance(model, anchors, queries, jitter=None):
    """GP posterior variance of query pixels given the anchor set.

    Direct evaluation of prior variance minus the explained part; used
    as the brute-force reference for the incremental active sampler.
    """
    if jitter is None:
        jitter = 1e-6 * model.signal_variance
    prior = np.full(len(queries), model.signal_variance)
    if len(anchors) == 0:
        return prior
    cov = build_covariance(model, anchors, queries, jitter=jitter)
    explained = np.einsum("nm,nm->n", cov.cond, cov.K_NM)
    return prior - explained
