"""Synthetic scenes with exact ground truth: primitives, textures, renderer.

Scenes are small collections of textured planes and boxes, ray-cast
per pixel so the returned depth is the analytic nearest intersection.
Shading uses a fixed world-frame directional light, so intensities are
view-independent and photometric constancy holds across frames.
"""

import configparser
from dataclasses import dataclass, field

import numpy as np

from .camera import PinholeCamera
from .errors import InputError
from .se3 import SE3, so3_exp

INVALID_DEPTH = np.nan


class NoiseTexture:
    """Band-limited value noise: smooth interpolation of seeded lattices.

    `octaves` lattices of doubling resolution are combined with halving
    amplitude; interpolation uses the quintic smoothstep so the result
    is C2, which keeps image gradients well behaved.
    """

    def __init__(self, seed, octaves=3, base_res=16, scale=1.0,
                 contrast=0.4, brightness=0.55):
        rng = np.random.default_rng(seed)
        self.grids = [rng.random((base_res << o, base_res << o)) for o in range(octaves)]
        self.scale = float(scale)
        self.contrast = float(contrast)
        self.brightness = float(brightness)

    def sample(self, coords):
        """Albedo at local surface coordinates, shape (N, 2) -> (N,)."""
        coords = np.atleast_2d(np.asarray(coords, dtype=float)) * self.scale
        value = np.zeros(coords.shape[0])
        total = 0.0
        amp = 1.0
        for grid in self.grids:
            res = grid.shape[0]
            x = coords[:, 0] * res
            y = coords[:, 1] * res
            x0 = np.floor(x).astype(int)
            y0 = np.floor(y).astype(int)
            fx = x - x0
            fy = y - y0
            # quintic smoothstep keeps the texture C2
            sx = fx * fx * fx * (fx * (fx * 6 - 15) + 10)
            sy = fy * fy * fy * (fy * (fy * 6 - 15) + 10)
            x0 %= res
            y0 %= res
            x1 = (x0 + 1) % res
            y1 = (y0 + 1) % res
            v = (grid[y0, x0] * (1 - sx) * (1 - sy) + grid[y0, x1] * sx * (1 - sy)
                 + grid[y1, x0] * (1 - sx) * sy + grid[y1, x1] * sx * sy)
            value += amp * v
            total += amp
            amp *= 0.5
        value /= total
        return np.clip(self.brightness + 2.0 * self.contrast * (value - 0.5), 0.0, 1.0)


def _orthonormal_axes(normal, up_hint):
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    up = np.asarray(up_hint, dtype=float)
    e1 = np.cross(up, n)
    if np.linalg.norm(e1) < 1e-8:
        up = np.array([0.0, 1.0, 0.0]) if abs(n[1]) < 0.9 else np.array([1.0, 0.0, 0.0])
        e1 = np.cross(up, n)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return n, e1, e2


@dataclass
class Plane:
    """Finite textured rectangle: center, unit normal, half extents."""

    center: np.ndarray
    normal: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    half_extent: np.ndarray    # (2,)
    texture: NoiseTexture

    @staticmethod
    def make(center, normal, size, texture, up_hint=(0.0, 1.0, 0.0)):
        n, e1, e2 = _orthonormal_axes(normal, up_hint)
        return Plane(center=np.asarray(center, dtype=float), normal=n, e1=e1, e2=e2,
                     half_extent=0.5 * np.asarray(size, dtype=float), texture=texture)

    def intersect(self, origin, directions):
        """Ray parameters and shading for a bundle of rays.

        Returns (t, albedo, normal) with t = inf where the ray misses.
        Directions need not be normalized; t is in units of the
        direction vector, so unit-z camera directions give z-depth.
        """
        denom = directions @ self.normal
        offset = (self.center - origin) @ self.normal
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(np.abs(denom) > 1e-12, offset / denom, np.inf)
        pts = origin + t[:, None] * directions
        local1 = (pts - self.center) @ self.e1
        local2 = (pts - self.center) @ self.e2
        hit = ((t > 1e-9) & (np.abs(local1) <= self.half_extent[0])
               & (np.abs(local2) <= self.half_extent[1]))
        t = np.where(hit, t, np.inf)
        albedo = np.zeros_like(t)
        if np.any(hit):
            albedo[hit] = self.texture.sample(
                np.stack([local1[hit], local2[hit]], axis=-1))
        normals = np.broadcast_to(self.normal, directions.shape)
        return t, albedo, normals


@dataclass
class Box:
    """Oriented textured box: center, rotation (box-to-world), half sizes."""

    center: np.ndarray
    rotation: np.ndarray       # (3, 3)
    half_size: np.ndarray      # (3,)
    texture: NoiseTexture

    @staticmethod
    def make(center, size, texture, euler_deg=(0.0, 0.0, 0.0)):
        angles = np.deg2rad(np.asarray(euler_deg, dtype=float))
        R = (so3_exp(np.array([0.0, 0.0, angles[2]]))
             @ so3_exp(np.array([0.0, angles[1], 0.0]))
             @ so3_exp(np.array([angles[0], 0.0, 0.0])))
        return Box(center=np.asarray(center, dtype=float), rotation=R,
                   half_size=0.5 * np.asarray(size, dtype=float), texture=texture)

    def intersect(self, origin, directions):
        o = (origin - self.center) @ self.rotation
        d = directions @ self.rotation
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(np.abs(d) > 1e-12, 1.0 / d, np.inf * np.sign(d + 1e-300))
        t1 = (-self.half_size - o) * inv
        t2 = (self.half_size - o) * inv
        t_near = np.minimum(t1, t2).max(axis=1)
        t_far = np.maximum(t1, t2).min(axis=1)
        # rays parallel to a slab miss unless the origin is inside it
        parallel_ok = np.all((np.abs(d) > 1e-12) | (np.abs(o) <= self.half_size), axis=1)
        hit = (t_near <= t_far) & (t_near > 1e-9) & parallel_ok
        t = np.where(hit, t_near, np.inf)
        albedo = np.zeros_like(t)
        normals = np.zeros_like(directions)
        if np.any(hit):
            pts = o[None, :] + t[hit, None] * d[hit]
            axis = np.argmax(np.abs(pts) / self.half_size[None, :], axis=1)
            sign = np.sign(pts[np.arange(len(pts)), axis])
            n_local = np.zeros_like(pts)
            n_local[np.arange(len(pts)), axis] = sign
            normals[hit] = n_local @ self.rotation.T
            others = np.array([[1, 2], [0, 2], [0, 1]])
            uv = np.stack([pts[np.arange(len(pts)), others[axis, 0]],
                           pts[np.arange(len(pts)), others[axis, 1]]], axis=-1)
            albedo[hit] = self.texture.sample(uv)
        return t, albedo, normals


@dataclass
class SyntheticScene:
    primitives: list
    camera: PinholeCamera
    trajectory: list           # of (timestamp, SE3)
    light: np.ndarray = field(default_factory=lambda: np.array([0.35, -0.45, -0.82]))
    ambient: float = 0.35
    background: float = 0.0

    def __post_init__(self):
        self.light = self.light / np.linalg.norm(self.light)


def render_frame(scene: SyntheticScene, pose: SE3, camera=None):
    """Ray-cast one view: (grayscale image, z-depth map).

    Depth is the exact primitive intersection; pixels missing all
    primitives carry the invalid-depth sentinel (NaN).
    """
    camera = camera or scene.camera
    h, w = camera.height, camera.width
    us, vs = np.meshgrid(np.arange(w, dtype=float), np.arange(h, dtype=float))
    pixels = np.stack([us.ravel(), vs.ravel()], axis=-1)
    dirs_cam = camera.ray_directions(pixels)
    dirs_world = dirs_cam @ pose.R.T
    origin = pose.t
    best_t = np.full(len(pixels), np.inf)
    best_albedo = np.zeros(len(pixels))
    best_normal = np.zeros((len(pixels), 3))
    for prim in scene.primitives:
        t, albedo, normals = prim.intersect(origin, dirs_world)
        closer = t < best_t
        best_t = np.where(closer, t, best_t)
        best_albedo = np.where(closer, albedo, best_albedo)
        best_normal[closer] = normals[closer]
    hit = np.isfinite(best_t)
    # orient normals toward the viewer, fixed directional light
    facing = np.einsum("nd,nd->n", best_normal, dirs_world)
    best_normal[facing > 0] *= -1.0
    lambert = np.maximum(0.0, -(best_normal @ scene.light))
    intensity = np.where(hit,
                         best_albedo * (scene.ambient + (1 - scene.ambient) * lambert),
                         scene.background)
    depth = np.where(hit, best_t, INVALID_DEPTH)
    return (np.clip(intensity, 0.0, 1.0).reshape(h, w), depth.reshape(h, w))


def render_sequence(scene: SyntheticScene):
    """Render every trajectory pose: list of (timestamp, image, depth)."""
    return [(ts, *render_frame(scene, pose)) for ts, pose in scene.trajectory]


def _rot_y(angle):
    return so3_exp(np.array([0.0, angle, 0.0]))


def make_trajectory(kind, frames, fps=30.0, extent=0.5, yaw_deg=0.0,
                    jitter=0.0, radius=2.0, arc_deg=30.0, seed=0):
    """Camera pose sequence looking roughly down +z.

    kind 'line': slow diagonal translation with optional jitter.
    kind 'lateral': sideways sweep with a yaw ramp.
    kind 'arc': horizontal circular arc around a point ahead.
    """
    rng = np.random.default_rng(seed)
    poses = []
    ts = np.arange(frames) / fps
    alphas = np.linspace(0.0, 1.0, frames)
    for i, a in enumerate(alphas):
        if kind == "line":
            t = np.array([0.3, 0.1, 0.2]) * extent * a
            R = np.eye(3)
        elif kind == "lateral":
            t = np.array([extent * a, 0.0, 0.0])
            R = _rot_y(np.deg2rad(yaw_deg) * np.sin(np.pi * a))
        elif kind == "arc":
            theta = np.deg2rad(arc_deg) * a
            pivot = np.array([0.0, 0.0, radius])
            t = pivot - _rot_y(theta) @ pivot
            R = _rot_y(theta)
        else:
            raise InputError(f"unknown trajectory kind {kind!r}")
        if jitter > 0:
            t = t + rng.normal(0.0, jitter, size=3)
        poses.append((float(ts[i]), SE3(R, t)))
    return poses


def default_camera(width=256, height=192, focal=220.0):
    return PinholeCamera(fx=focal, fy=focal, cx=(width - 1) / 2.0,
                         cy=(height - 1) / 2.0, width=width, height=height)


def two_plane_scene(frames=60, seed=0, width=256, height=192, kind="lateral",
                    extent=0.5, yaw_deg=4.0, jitter=0.0):
    """Textured two-plane scene used throughout the synthetic experiments.

    A large backdrop plane with a nearer offset plane covering part of
    the view, so depth has one discontinuity; both planes are textured
    with different seeds and brightness so kernel features separate
    them.
    """
    camera = default_camera(width, height)
    far = Plane.make(center=(0.25, 0.0, 1.9), normal=(0.0, 0.0, -1.0), size=(8.0, 6.0),
                     texture=NoiseTexture(seed * 101 + 11, scale=1.1, contrast=0.42,
                                          brightness=0.52))
    near = Plane.make(center=(-0.35, -0.08, 1.15), normal=(0.12, 0.05, -0.99),
                      size=(0.85, 0.6),
                      texture=NoiseTexture(seed * 101 + 47, scale=2.6, contrast=0.38,
                                           brightness=0.72))
    trajectory = make_trajectory(kind, frames, extent=extent, yaw_deg=yaw_deg,
                                 jitter=jitter, seed=seed)
    return SyntheticScene(primitives=[far, near], camera=camera, trajectory=trajectory)


def load_scene(path):
    """Read a SyntheticScene from an INI scene-spec file."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise InputError(f"cannot read scene spec {path}")
    if not parser.has_section("camera"):
        raise InputError("scene spec needs a [camera] section")
    cam = parser["camera"]
    camera = PinholeCamera(fx=cam.getfloat("fx"), fy=cam.getfloat("fy"),
                           cx=cam.getfloat("cx"), cy=cam.getfloat("cy"),
                           width=cam.getint("width"), height=cam.getint("height"))
    traj = parser["trajectory"] if parser.has_section("trajectory") else {}
    trajectory = make_trajectory(
        kind=traj.get("kind", "lateral"),
        frames=int(traj.get("frames", 60)),
        fps=float(traj.get("fps", 30.0)),
        extent=float(traj.get("extent", 0.5)),
        yaw_deg=float(traj.get("yaw_deg", 0.0)),
        jitter=float(traj.get("jitter", 0.0)),
        radius=float(traj.get("radius", 2.0)),
        arc_deg=float(traj.get("arc_deg", 30.0)),
        seed=int(traj.get("seed", 0)),
    )
    primitives = []
    for section in parser.sections():
        if section.startswith("plane"):
            s = parser[section]
            texture = _texture_from_section(s)
            primitives.append(Plane.make(
                center=_vector(s.get("center", "0 0 2"), 3),
                normal=_vector(s.get("normal", "0 0 -1"), 3),
                size=_vector(s.get("size", "4 3"), 2),
                texture=texture,
                up_hint=_vector(s.get("up", "0 1 0"), 3)))
        elif section.startswith("box"):
            s = parser[section]
            texture = _texture_from_section(s)
            primitives.append(Box.make(
                center=_vector(s.get("center", "0 0 2"), 3),
                size=_vector(s.get("size", "0.5 0.5 0.5"), 3),
                euler_deg=_vector(s.get("euler_deg", "0 0 0"), 3),
                texture=texture))
    if not primitives:
        raise InputError("scene spec defines no primitives")
    scene = SyntheticScene(primitives=primitives, camera=camera, trajectory=trajectory)
    if parser.has_section("scene"):
        s = parser["scene"]
        scene.background = float(s.get("background", scene.background))
        scene.ambient = float(s.get("ambient", scene.ambient))
    return scene


def _vector(text, n):
    parts = [float(x) for x in text.replace(",", " ").split()]
    if len(parts) != n:
        raise InputError(f"expected {n} numbers, got {text!r}")
    return np.array(parts)


def _texture_from_section(s):
    return NoiseTexture(seed=int(s.get("texture_seed", 0)),
                        scale=float(s.get("texture_scale", 1.0)),
                        contrast=float(s.get("contrast", 0.4)),
                        brightness=float(s.get("brightness", 0.55)))
