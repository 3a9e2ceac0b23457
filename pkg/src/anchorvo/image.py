"""Image pyramid, bilinear lookups, and gradient-based pixel sampling."""

import numpy as np

from .kernel import scharr_gradients


class ImagePyramid:
    """Multi-scale grayscale pyramid with per-level Scharr gradients.

    Level 0 is the input; each coarser level is a 2x2 average (odd
    trailing rows/columns are dropped).  Intensities live in [0, 1].
    """

    def __init__(self, image, levels=3):
        image = np.asarray(image, dtype=float)
        if image.ndim != 2:
            raise ValueError("pyramid expects a 2-d grayscale image")
        self.levels = [image]
        for _ in range(1, levels):
            prev = self.levels[-1]
            h, w = prev.shape
            if h < 2 or w < 2:
                break
            cropped = prev[: h - h % 2, : w - w % 2]
            self.levels.append(
                0.25 * (cropped[0::2, 0::2] + cropped[0::2, 1::2]
                        + cropped[1::2, 0::2] + cropped[1::2, 1::2]))
        self.gradients = [scharr_gradients(lvl) for lvl in self.levels]

    @property
    def num_levels(self):
        return len(self.levels)

    def shape(self, level=0):
        return self.levels[level].shape


def bilinear(image, pixels):
    """Bilinear sample at continuous (u, v); caller guarantees bounds."""
    pixels = np.atleast_2d(np.asarray(pixels, dtype=float))
    u, v = pixels[:, 0], pixels[:, 1]
    u0 = np.floor(u).astype(int)
    v0 = np.floor(v).astype(int)
    fu = u - u0
    fv = v - v0
    return (image[v0, u0] * (1 - fu) * (1 - fv)
            + image[v0, u0 + 1] * fu * (1 - fv)
            + image[v0 + 1, u0] * (1 - fu) * fv
            + image[v0 + 1, u0 + 1] * fu * fv)


def in_bounds_mask(pixels, width, height, margin=1.0):
    """Mask of pixels that admit a bilinear lookup `margin` inside the border."""
    pixels = np.atleast_2d(np.asarray(pixels, dtype=float))
    return ((pixels[:, 0] >= margin) & (pixels[:, 0] <= width - 1 - margin)
            & (pixels[:, 1] >= margin) & (pixels[:, 1] <= height - 1 - margin))


def sample_high_gradient_pixels(pyramid, patch_size=4, level=0):
    """One pixel per patch: the argmax of gradient magnitude.

    Patches tile the image in row-major order; partial border patches
    are kept and clipped.  Ties break to the smallest linear index
    inside the patch (top-left first), so a constant image selects the
    patch corner deterministically.  Returns (K, 2) pixel array.
    """
    gx, gy = pyramid.gradients[level]
    mag = gx * gx + gy * gy
    h, w = mag.shape
    pixels = []
    for py in range(0, h, patch_size):
        for px in range(0, w, patch_size):
            block = mag[py: py + patch_size, px: px + patch_size]
            idx = int(np.argmax(block))
            dy, dx = divmod(idx, block.shape[1])
            pixels.append((px + dx, py + dy))
    return np.array(pixels, dtype=float)
