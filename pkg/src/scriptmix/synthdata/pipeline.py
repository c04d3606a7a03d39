"""Image preprocessing and augmentation, plus RTL label handling.

Preprocessing normalizes to [0, 1] (ink bright, background zero), resizes
to the target height preserving aspect ratio, and clamps the width to a
maximum; aspect ratio breaks only at the cap. Augmentation is a seeded
probabilistic pipeline of affine, morphological, photometric, and elastic
operators, all dimension-preserving.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage


def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Separable bilinear resampling (half-pixel-center convention).

    Resizing to the input size is an exact identity.
    """
    h, w = img.shape
    img = img.astype(np.float32, copy=False)
    sy = np.clip((np.arange(out_h) + 0.5) * (h / out_h) - 0.5, 0, h - 1)
    sx = np.clip((np.arange(out_w) + 0.5) * (w / out_w) - 0.5, 0, w - 1)
    y0 = np.floor(sy).astype(int)
    x0 = np.floor(sx).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (sy - y0).astype(np.float32)[:, None]
    wx = (sx - x0).astype(np.float32)[None, :]
    top = img[np.ix_(y0, x0)] * (1 - wx) + img[np.ix_(y0, x1)] * wx
    bot = img[np.ix_(y1, x0)] * (1 - wx) + img[np.ix_(y1, x1)] * wx
    return top * (1 - wy) + bot * wy


def preprocess(image: np.ndarray, height: int = 48, max_width: int = 1450) -> np.ndarray:
    """Normalize to [0, 1] float32 and resize to the target height.

    Accepts uint8 (0..255) or float (already 0..1) grayscale input. Width
    scales with the aspect ratio and is clamped to ``max_width``.
    """
    if image.ndim != 2:
        raise ValueError("preprocess expects a 2-d grayscale image")
    h, w = image.shape
    if h == 0 or w == 0:
        raise ValueError("preprocess got a zero-dimension image")
    if image.dtype == np.uint8:
        img = image.astype(np.float32) / 255.0
    else:
        img = np.clip(image.astype(np.float32, copy=False), 0.0, 1.0)
    out_w = max(1, min(int(round(w * height / h)), max_width))
    if (h, w) == (height, out_w):
        return img.astype(np.float32, copy=False)
    return np.clip(bilinear_resize(img, height, out_w), 0.0, 1.0)


@dataclass(frozen=True)
class AugmentConfig:
    p_affine: float = 0.5
    max_rotate_deg: float = 2.0
    max_shear: float = 0.2
    scale_range: tuple[float, float] = (0.9, 1.1)
    max_translate: float = 0.02
    p_morph: float = 0.3
    p_photometric: float = 0.3
    max_brightness: float = 0.2
    contrast_range: tuple[float, float] = (0.8, 1.2)
    p_gamma: float = 0.3
    gamma_range: tuple[float, float] = (0.5, 2.0)
    p_elastic: float = 0.3
    elastic_alpha: float = 2.5
    elastic_sigma: float = 6.0

    @classmethod
    def identity(cls) -> "AugmentConfig":
        return cls(p_affine=0.0, p_morph=0.0, p_photometric=0.0, p_gamma=0.0, p_elastic=0.0)


DEFAULT_AUGMENT = AugmentConfig()


def _affine(img: np.ndarray, rng: np.random.Generator, cfg: AugmentConfig) -> np.ndarray:
    h, w = img.shape
    theta = np.deg2rad(rng.uniform(-cfg.max_rotate_deg, cfg.max_rotate_deg))
    shear = rng.uniform(-cfg.max_shear, cfg.max_shear)
    scale = rng.uniform(*cfg.scale_range)
    ty = rng.uniform(-cfg.max_translate, cfg.max_translate) * h
    tx = rng.uniform(-cfg.max_translate, cfg.max_translate) * w
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    # output -> input map (rows are (y, x)); shear acts on x as a function of y
    fwd = scale * np.array([[cos_t, -sin_t], [sin_t, cos_t]]) @ np.array([[1.0, 0.0], [shear, 1.0]])
    inv = np.linalg.inv(fwd)
    center = np.array([(h - 1) / 2.0, (w - 1) / 2.0])
    offset = center - inv @ (center + np.array([ty, tx]))
    return ndimage.affine_transform(img, inv, offset=offset, order=1, mode="constant", cval=0.0)


def _elastic(img: np.ndarray, rng: np.random.Generator, cfg: AugmentConfig) -> np.ndarray:
    h, w = img.shape
    dy = ndimage.gaussian_filter(rng.uniform(-1, 1, (h, w)), cfg.elastic_sigma) * cfg.elastic_alpha
    dx = ndimage.gaussian_filter(rng.uniform(-1, 1, (h, w)), cfg.elastic_sigma) * cfg.elastic_alpha
    yy, xx = np.mgrid[0:h, 0:w]
    coords = np.stack([yy + dy, xx + dx])
    return ndimage.map_coordinates(img, coords, order=1, mode="constant", cval=0.0)


def augment(image: np.ndarray, seed: int, config: AugmentConfig = DEFAULT_AUGMENT) -> np.ndarray:
    """Apply the augmentation pipeline; deterministic in (image, seed, config).

    Every operator preserves the image dimensions; with all probabilities
    zero the input is returned unchanged.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 17]))
    img = image
    if config.p_affine > 0 and rng.random() < config.p_affine:
        img = _affine(img, rng, config)
    if config.p_morph > 0 and rng.random() < config.p_morph:
        if rng.random() < 0.5:
            img = ndimage.grey_erosion(img, size=(3, 3))
        else:
            img = ndimage.grey_dilation(img, size=(3, 3))
    if config.p_photometric > 0 and rng.random() < config.p_photometric:
        b = rng.uniform(-config.max_brightness, config.max_brightness)
        c = rng.uniform(*config.contrast_range)
        mean = img.mean()
        img = (img - mean) * c + mean + b
    if config.p_gamma > 0 and rng.random() < config.p_gamma:
        g = rng.uniform(*config.gamma_range)
        img = np.clip(img, 0.0, 1.0) ** g
    if config.p_elastic > 0 and rng.random() < config.p_elastic:
        img = _elastic(img, rng, config)
    if img is image:
        return image
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def reverse_labels(transcript: str, rtl: bool) -> str:
    """Reverse a transcript for RTL training; identity for LTR scripts.

    Applied once when building training labels and once more when mapping
    decoded predictions back for evaluation, so the two uses cancel.
    """
    return transcript[::-1] if rtl else transcript
