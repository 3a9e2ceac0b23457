"""Monocular odometry and dense mapping from shared 3D anchor points.

Scene geometry is encoded as a small set of world-frame anchor points.
Each keyframe decodes a dense log-depth map by conditioning a
Gaussian-process depth model on its visible anchor projections, and
camera poses plus anchor positions are refined jointly with
second-order photometric alignment over a sliding window.
"""

__version__ = "0.1.0"
