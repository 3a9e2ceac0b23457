"""Pipeline configuration: dataclasses, INI file round-trip, validation.

The file format is plain-text key=value grouped in sections, one section
per dataclass below.  Every field is range-validated on load.
"""

import configparser
import dataclasses
from dataclasses import dataclass, field

from .errors import ConfigError


@dataclass
class FeatureConfig:
    """Kernel feature extraction and covariance hyperparameters."""

    num_scales: int = 3
    base_sigma: float = 1.0          # blur sigma of the finest scale; doubles per scale
    pixel_length_scale: float = 24.0  # px
    feature_length_scale: float = 1.5
    signal_variance: float = 1.0      # log-depth^2
    jitter_scale: float = 1e-8        # jitter = jitter_scale * signal_variance


@dataclass
class WindowConfig:
    max_keyframes: int = 9
    supports_per_gap: int = 3
    max_total_frames: int = 24
    anchors_per_keyframe: int = 64


@dataclass
class ImageConfig:
    width: int = 256
    height: int = 192
    pyramid_levels: int = 3


@dataclass
class PhotometricConfig:
    patch_size: int = 4
    huber_delta: float = 1.345
    sigma_min: float = 1e-3


@dataclass
class PriorConfig:
    median_depth_sigma: float = 1.0   # log-units
    pixel_sigma: float = 1.0          # px
    gp_prior_scale: float = 1e-2
    gauge_pose_sigma: float = 1e-4
    gauge_affine_sigma: float = 1e-2
    marginal_landmark_sigma: float = 1e-2  # scene units


@dataclass
class OptimizerConfig:
    iterations: int = 6
    step_tolerance: float = 1e-6
    damping_init: float = 1e-6        # relative to trace(H)/D
    damping_up: float = 10.0
    damping_down: float = 0.5
    max_rejections: int = 5


@dataclass
class FrontendConfig:
    kf_translation: float = 0.02      # fraction of median depth
    kf_overlap: float = 0.6           # unique projected pixel fraction
    support_scale: float = 0.25
    visibility_threshold: float = 0.1  # log-units
    cvr_stop_fraction: float = 0.05    # of signal variance
    min_pixel_distance: float = 8.0
    border_margin: int = 8
    sigma_d_init: float = 0.05
    sigma_d_floor: float = 1e-3
    track_levels: int = 3
    track_iterations: int = 20


@dataclass
class RunConfig:
    seed: int = 0
    share_anchors: bool = True        # False disables cross-keyframe anchor matching
    debug_checks: bool = False
    z_min: float = 1e-4


@dataclass
class PipelineConfig:
    window: WindowConfig = field(default_factory=WindowConfig)
    image: ImageConfig = field(default_factory=ImageConfig)
    kernel: FeatureConfig = field(default_factory=FeatureConfig)
    photometric: PhotometricConfig = field(default_factory=PhotometricConfig)
    priors: PriorConfig = field(default_factory=PriorConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    frontend: FrontendConfig = field(default_factory=FrontendConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def validate(self):
        w = self.window
        _require(w.max_keyframes >= 2, "window.max_keyframes must be >= 2")
        _require(w.supports_per_gap >= 0, "window.supports_per_gap must be >= 0")
        _require(w.max_total_frames >= w.max_keyframes,
                 "window.max_total_frames must cover the keyframes")
        _require(w.anchors_per_keyframe >= 1, "window.anchors_per_keyframe must be >= 1")
        im = self.image
        _require(im.width >= 16 and im.height >= 16, "image size must be at least 16x16")
        _require(im.pyramid_levels >= 1, "image.pyramid_levels must be >= 1")
        k = self.kernel
        _require(k.num_scales >= 1, "kernel.num_scales must be >= 1")
        _require(k.pixel_length_scale > 0, "kernel.pixel_length_scale must be > 0")
        _require(k.feature_length_scale > 0, "kernel.feature_length_scale must be > 0")
        _require(k.signal_variance > 0, "kernel.signal_variance must be > 0")
        _require(k.jitter_scale >= 0, "kernel.jitter_scale must be >= 0")
        ph = self.photometric
        _require(ph.patch_size >= 1, "photometric.patch_size must be >= 1")
        _require(ph.huber_delta > 0, "photometric.huber_delta must be > 0")
        _require(ph.sigma_min > 0, "photometric.sigma_min must be > 0")
        pr = self.priors
        for name in ("median_depth_sigma", "pixel_sigma", "gauge_pose_sigma",
                     "gauge_affine_sigma", "marginal_landmark_sigma"):
            _require(getattr(pr, name) > 0, f"priors.{name} must be > 0")
        _require(pr.gp_prior_scale >= 0, "priors.gp_prior_scale must be >= 0")
        op = self.optimizer
        _require(op.iterations >= 1, "optimizer.iterations must be >= 1")
        _require(op.damping_up > 1 and 0 < op.damping_down < 1,
                 "optimizer damping factors must move the damping")
        _require(op.max_rejections >= 1, "optimizer.max_rejections must be >= 1")
        fr = self.frontend
        _require(fr.kf_translation > 0, "frontend.kf_translation must be > 0")
        _require(0 < fr.kf_overlap <= 1, "frontend.kf_overlap must be in (0, 1]")
        _require(fr.support_scale > 0, "frontend.support_scale must be > 0")
        _require(fr.visibility_threshold > 0, "frontend.visibility_threshold must be > 0")
        _require(fr.cvr_stop_fraction >= 0, "frontend.cvr_stop_fraction must be >= 0")
        _require(fr.min_pixel_distance >= 0, "frontend.min_pixel_distance must be >= 0")
        _require(fr.border_margin >= 1, "frontend.border_margin must be >= 1")
        _require(fr.sigma_d_init > 0, "frontend.sigma_d_init must be > 0")
        _require(fr.track_levels >= 1, "frontend.track_levels must be >= 1")
        _require(self.run.z_min > 0, "run.z_min must be > 0")
        return self

    @property
    def jitter(self):
        return self.kernel.jitter_scale * self.kernel.signal_variance


_SECTIONS = {
    "window": WindowConfig,
    "image": ImageConfig,
    "kernel": FeatureConfig,
    "photometric": PhotometricConfig,
    "priors": PriorConfig,
    "optimizer": OptimizerConfig,
    "frontend": FrontendConfig,
    "run": RunConfig,
}


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _parse_value(text, typ):
    if typ is bool:
        lowered = text.strip().lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"cannot parse boolean from {text!r}")
    return typ(text)


def load_config(path):
    """Read a PipelineConfig from an INI file; unknown keys are an error."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    cfg = PipelineConfig()
    for section, cls in _SECTIONS.items():
        if not parser.has_section(section):
            continue
        target = getattr(cfg, section if section != "kernel" else "kernel")
        fields = {f.name: f.type for f in dataclasses.fields(cls)}
        types = {f.name: type(getattr(target, f.name)) for f in dataclasses.fields(cls)}
        for key, raw in parser.items(section):
            if key not in fields:
                raise ConfigError(f"unknown key [{section}] {key}")
            try:
                setattr(target, key, _parse_value(raw, types[key]))
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from exc
    return cfg.validate()


def save_config(cfg, path):
    """Write a PipelineConfig to an INI file (all sections, all keys)."""
    parser = configparser.ConfigParser()
    for section in _SECTIONS:
        obj = getattr(cfg, section)
        parser[section] = {
            f.name: str(getattr(obj, f.name)) for f in dataclasses.fields(obj)
        }
    with open(path, "w") as fh:
        parser.write(fh)
