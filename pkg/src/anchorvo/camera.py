"""Pinhole camera: projection, backprojection, projection Jacobian."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class PinholeCamera:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ConfigError("focal lengths must be positive")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise ConfigError("principal point must lie inside the image")

    def project(self, points):
        """Camera-frame points (N, 3) or (3,) to pixel coordinates (u, v)."""
        points = np.asarray(points, dtype=float)
        single = points.ndim == 1
        P = np.atleast_2d(points)
        z = P[:, 2]
        u = self.fx * P[:, 0] / z + self.cx
        v = self.fy * P[:, 1] / z + self.cy
        out = np.stack([u, v], axis=-1)
        return out[0] if single else out

    def unproject(self, pixels, depths):
        """Pixels (u, v) and z-depths back to camera-frame points."""
        pixels = np.asarray(pixels, dtype=float)
        depths = np.asarray(depths, dtype=float)
        single = pixels.ndim == 1
        p = np.atleast_2d(pixels)
        z = np.atleast_1d(depths)
        x = (p[:, 0] - self.cx) / self.fx
        y = (p[:, 1] - self.cy) / self.fy
        out = np.stack([x * z, y * z, z], axis=-1)
        return out[0] if single else out

    def ray_directions(self, pixels):
        """Unit-depth ray (x/z, y/z, 1) per pixel."""
        pixels = np.asarray(pixels, dtype=float)
        single = pixels.ndim == 1
        p = np.atleast_2d(pixels)
        x = (p[:, 0] - self.cx) / self.fx
        y = (p[:, 1] - self.cy) / self.fy
        out = np.stack([x, y, np.ones_like(x)], axis=-1)
        return out[0] if single else out

    def projection_jacobian(self, points):
        """d(pixel)/d(camera point), shape (N, 2, 3) or (2, 3)."""
        points = np.asarray(points, dtype=float)
        single = points.ndim == 1
        P = np.atleast_2d(points)
        x, y, z = P[:, 0], P[:, 1], P[:, 2]
        inv_z = 1.0 / z
        J = np.zeros((P.shape[0], 2, 3))
        J[:, 0, 0] = self.fx * inv_z
        J[:, 0, 2] = -self.fx * x * inv_z * inv_z
        J[:, 1, 1] = self.fy * inv_z
        J[:, 1, 2] = -self.fy * y * inv_z * inv_z
        return J[0] if single else J

    def contains(self, pixels, margin=0.0):
        """True where (u, v) lies inside the image with the given margin."""
        pixels = np.asarray(pixels, dtype=float)
        single = pixels.ndim == 1
        p = np.atleast_2d(pixels)
        ok = ((p[:, 0] >= margin) & (p[:, 0] <= self.width - 1 - margin)
              & (p[:, 1] >= margin) & (p[:, 1] <= self.height - 1 - margin))
        return bool(ok[0]) if single else ok

    def scaled(self, factor):
        """Camera for an image scaled by `factor` (e.g. 0.5 per pyramid level)."""
        return PinholeCamera(fx=self.fx * factor, fy=self.fy * factor,
                             cx=(self.cx + 0.5) * factor - 0.5,
                             cy=(self.cy + 0.5) * factor - 0.5,
                             width=max(int(round(self.width * factor)), 1),
                             height=max(int(round(self.height * factor)), 1))
