"""Frame containers shared by the frontend and the optimization window."""

import numpy as np

from .image import ImagePyramid, bilinear


class Frame:
    """A tracked frame: image pyramid plus pose and affine brightness.

    Support frames contribute photometric constraints and pose/affine
    variables but host no geometry.
    """

    def __init__(self, frame_id, timestamp, pyramid: ImagePyramid, pose, affine=None):
        self.frame_id = frame_id
        self.timestamp = timestamp
        self.pyramid = pyramid
        self.pose = pose
        self.affine = np.zeros(2) if affine is None else np.asarray(affine, dtype=float)

    @property
    def image(self):
        return self.pyramid.levels[0]

    @property
    def gradients(self):
        return self.pyramid.gradients[0]

    def __repr__(self):
        return f"{type(self).__name__}(id={self.frame_id}, t={self.timestamp:.3f})"


class Keyframe(Frame):
    """A frame that hosts dense geometry.

    Holds the kernel feature map, the ordered ids of its visible
    anchors, the covariance matrices built once at creation, and the
    query pixel set.  The first `num_anchor_queries` query pixels are
    the anchor projections at creation time, so decoded log-depth at
    those rows must reproduce the anchor log-depths; the remaining rows
    are the gradient-sampled pixels used for photometric error.
    """

    def __init__(self, frame_id, timestamp, pyramid, pose, affine=None):
        super().__init__(frame_id, timestamp, pyramid, pose, affine)
        self.model = None            # CovarianceModel
        self.anchor_ids = []         # ordered, matches covariance rows
        self.cov = None              # CovarianceMatrices
        self.query_pixels = None     # (N, 2)
        self.num_anchor_queries = 0
        self.median_logdepth = 0.0   # frozen at creation
        self.geom = None             # DenseGeometry, refreshed each update
        self.sampled_intensity = None  # reference intensities at sampled pixels

    @property
    def sampled_pixels(self):
        return self.query_pixels[self.num_anchor_queries:]

    @property
    def sampled_world_points(self):
        return self.geom.points_world[self.num_anchor_queries:]

    @property
    def sampled_cond(self):
        return self.cov.cond[self.num_anchor_queries:]

    def finish_setup(self):
        self.sampled_intensity = bilinear(self.image, self.sampled_pixels)

    def current_median_depth(self):
        """Median scene depth of the current decode."""
        return float(np.exp(np.median(self.geom.logdepth)))
