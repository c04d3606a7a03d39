"""Procedural glyph and text-line rendering.

Glyphs are seeded polyline stroke sets in a unit box; odd glyph IDs reuse
the base shape of the preceding even ID and add dots, mimicking scripts
whose letters differ only by dot decoration. Lines are composed along the
writing direction with per-style slant, stroke thickness, and baseline
jitter. Ink is bright (255) on a black background so that zero-padding
matches the background.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from scriptmix.synthdata.profiles import ScriptProfile, char_glyph


@dataclass(frozen=True)
class StyleParams:
    slant: float        # horizontal shear, px of x-shift per px of height
    thickness: float    # stroke dilation radius in units of height/48
    jitter: float       # per-glyph baseline offset sigma, px at height 48


def style_params(universe_seed: int, style_index: int) -> StyleParams:
    rng = np.random.default_rng(np.random.SeedSequence([universe_seed, 55, style_index]))
    return StyleParams(
        slant=float(rng.uniform(-0.22, 0.22)),
        thickness=float(rng.uniform(0.8, 1.7)),
        jitter=float(rng.uniform(0.0, 1.2)),
    )


def glyph_geometry(glyph_id: int, universe_seed: int) -> tuple[list[np.ndarray], np.ndarray]:
    """Stroke polylines and dot centers for one glyph, in unit coordinates.

    The stroke body occupies y in [0.25, 1]; dots sit above it. y grows
    downward.
    """
    base_id, variant = divmod(glyph_id, 2)
    rng = np.random.default_rng(np.random.SeedSequence([universe_seed, 101, base_id]))
    strokes = []
    for _ in range(int(rng.integers(2, 4))):
        n_pts = int(rng.integers(3, 6))
        xs = rng.uniform(0.05, 0.95, n_pts)
        ys = rng.uniform(0.28, 0.98, n_pts)
        strokes.append(np.stack([xs, ys], axis=1))
    dots = np.empty((0, 2))
    if variant:
        drng = np.random.default_rng(np.random.SeedSequence([universe_seed, 103, base_id]))
        n_dots = int(drng.integers(1, 3))
        dots = np.stack([drng.uniform(0.25, 0.75, n_dots), drng.uniform(0.04, 0.16, n_dots)], axis=1)
    return strokes, dots


def _disk_footprint(radius: float) -> np.ndarray:
    r = max(0, int(round(radius)))
    if r == 0:
        return np.ones((1, 1), dtype=bool)
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
    return (yy * yy + xx * xx) <= r * r + 0.5


def glyph_advance(height: int) -> int:
    return max(6, int(round(0.36 * height)))


def space_advance(height: int) -> int:
    return max(4, int(round(0.22 * height)))


def render_glyph(glyph_id: int, universe_seed: int, height: int, style: StyleParams) -> np.ndarray:
    """Rasterize one glyph into its cell (uint8, ink 255 on 0)."""
    adv = glyph_advance(height)
    slant_px = abs(style.slant) * height * 0.4
    w = adv + int(np.ceil(slant_px)) + 4
    canvas = np.zeros((height, w), dtype=np.float32)
    strokes, dots = glyph_geometry(glyph_id, universe_seed)
    x0 = 2 + (np.ceil(slant_px) if style.slant < 0 else 0)

    def to_px(pts: np.ndarray) -> np.ndarray:
        x = x0 + pts[:, 0] * (adv - 3) + style.slant * height * 0.4 * (1.0 - pts[:, 1])
        y = 1 + pts[:, 1] * (height - 4)
        return np.stack([y, x], axis=1)

    for stroke in strokes:
        px = to_px(stroke)
        for (y0, xx0), (y1, xx1) in zip(px[:-1], px[1:]):
            n = max(2, int(np.hypot(y1 - y0, xx1 - xx0) / 0.4))
            ts = np.linspace(0.0, 1.0, n)
            ys = np.clip(np.round(y0 + ts * (y1 - y0)).astype(int), 0, height - 1)
            xs = np.clip(np.round(xx0 + ts * (xx1 - xx0)).astype(int), 0, w - 1)
            canvas[ys, xs] = 255.0
    radius = style.thickness * height / 48.0
    if radius > 0.4:
        canvas = ndimage.grey_dilation(canvas, footprint=_disk_footprint(radius))
    if len(dots):
        dot_r = max(1, int(round(0.9 + style.thickness * height / 70.0)))
        for dy_u, dx_u in zip(dots[:, 1], dots[:, 0]):
            cy = int(round(1 + dy_u * (height - 4)))
            cx = int(round(x0 + dx_u * (adv - 3) + style.slant * height * 0.4 * (1.0 - dy_u)))
            yy, xx = np.mgrid[-dot_r : dot_r + 1, -dot_r : dot_r + 1]
            mask = yy * yy + xx * xx <= dot_r * dot_r + 0.5
            ys = np.clip(cy + yy[mask], 0, height - 1)
            xs = np.clip(cx + xx[mask], 0, w - 1)
            canvas[ys, xs] = 255.0
    canvas = ndimage.gaussian_filter(canvas, sigma=0.5)
    return np.clip(canvas, 0, 255).astype(np.uint8)


class LineRenderer:
    """Renders transcripts for one profile, caching per-style glyph bitmaps."""

    def __init__(self, profile: ScriptProfile, height: int = 48):
        self.profile = profile
        self.height = height
        self._cache: dict[tuple[int, int], np.ndarray] = {}

    def _glyph(self, glyph_id: int, style_index: int) -> np.ndarray:
        key = (glyph_id, style_index)
        if key not in self._cache:
            style = style_params(self.profile.universe_seed, style_index)
            self._cache[key] = render_glyph(glyph_id, self.profile.universe_seed, self.height, style)
        return self._cache[key]

    def render(self, transcript: str, style_seed: int) -> np.ndarray:
        return render_line(transcript, self.profile, style_seed, self.height, cache=self._cache)


def render_line(
    transcript: str,
    profile: ScriptProfile,
    style_seed: int,
    height: int = 48,
    cache: dict | None = None,
) -> np.ndarray:
    """Compose a text line image; deterministic in (transcript, style_seed).

    Glyphs advance right-to-left when the profile is RTL, so the first
    transcript character appears rightmost.
    """
    h = height
    style_index = style_seed % profile.writer_styles
    style = style_params(profile.universe_seed, style_index)
    rng = np.random.default_rng(np.random.SeedSequence([profile.universe_seed, 9, style_seed]))
    adv, sadv = glyph_advance(h), space_advance(h)
    margin = max(3, h // 12)

    cells: list[np.ndarray | None] = []
    advances: list[int] = []
    for ch in transcript:
        if ch == " ":
            cells.append(None)
            advances.append(sadv + int(rng.integers(-1, 2)))
        else:
            gid = char_glyph(ch)
            if cache is not None and (gid, style_index) in cache:
                bmp = cache[(gid, style_index)]
            else:
                bmp = render_glyph(gid, profile.universe_seed, h, style)
                if cache is not None:
                    cache[(gid, style_index)] = bmp
            cells.append(bmp)
            advances.append(adv + int(rng.integers(-2, 2)))
    jitters = [int(round(rng.normal(0.0, style.jitter * h / 48.0))) for _ in transcript]

    width = 2 * margin + max(sum(advances), 1) + adv // 2
    canvas = np.zeros((h, width), dtype=np.uint8)
    order = range(len(cells) - 1, -1, -1) if profile.rtl else range(len(cells))
    cursor = margin
    for i in order:
        bmp = cells[i]
        if bmp is not None:
            jy = int(np.clip(jitters[i], -2, 2))
            gh, gw = bmp.shape
            xs = min(cursor, width - gw)
            region = canvas[:, xs : xs + gw]
            if jy:
                shifted = np.zeros_like(bmp)
                if jy > 0:
                    shifted[jy:] = bmp[:-jy]
                else:
                    shifted[:jy] = bmp[-jy:]
            else:
                shifted = bmp
            np.maximum(region, shifted, out=region)
        cursor += advances[i]
    return canvas


def write_pgm(path: str, image: np.ndarray) -> None:
    if image.dtype != np.uint8 or image.ndim != 2:
        raise ValueError("write_pgm expects a 2-d uint8 array")
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def read_pgm(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    # header: magic, width, height, maxval, separated by whitespace/comments
    fields: list[bytes] = []
    i = 2
    while len(fields) < 3:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
            continue
        j = i
        while j < len(data) and not data[j : j + 1].isspace():
            j += 1
        fields.append(data[i:j])
        i = j
    i += 1  # single whitespace after maxval
    w, h, maxval = (int(f) for f in fields)
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    pixels = np.frombuffer(data[i : i + w * h], dtype=np.uint8)
    if pixels.size != w * h:
        raise ValueError(f"{path}: truncated pixel data")
    return pixels.reshape(h, w).copy()
