"""Test-signal synthesis, quality metrics, and stream bit accounting.

synth_sequence renders a seeded procedural canvas (gradients, sinusoidal
textures, anti-aliased disks) at three times the frame size and derives
frames from it: a fixed crop (static), a crop translating by an integer
velocity per frame (pan), or a centered window growing or shrinking per
frame with bilinear resampling (zoom). Pan frames are exact integer shifts
of each other wherever they overlap, which motion search should recover.

bit_accounting replays a stream and charges every bit to one of five
categories that sum exactly to the stream size. The bandwidth helpers
express the scenario arithmetic for shipping network parameters in a coded
stream: parameter bits against a target bitrate, generated blocks against
the block budget, and generator evaluations per second.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bitstream import (
    BIT_CATEGORIES,
    UNIT_FRAME,
    UNIT_PARAM_SET,
    FrameBits,
    _parse_frame_body,
    _parse_param_set_body,
    parse_header,
)
from .core import Frame, make_frame, round_half_away
from .entropy import BitReader, StreamError
from .gnn import param_count

SYNTH_KINDS = ("static", "pan", "zoom_out", "zoom_in")
PSNR_CAP = 99.0


def plane_psnr(a: np.ndarray, b: np.ndarray, peak: float = 255.0) -> float:
    """PSNR between two equally shaped sample planes, capped at 99 dB."""
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape:
        raise ValueError(f"shape mismatch {av.shape} vs {bv.shape}")
    mse = float(np.mean((av - bv) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(peak * peak / mse))


def frame_psnr(a: Frame, b: Frame) -> tuple[float, float, float]:
    """Per-plane PSNR over the display area of two frames."""
    if (a.display_width, a.display_height) != (b.display_width, b.display_height):
        raise ValueError("display size mismatch")
    w, h = a.display_width, a.display_height
    cw, ch = (w + 1) // 2, (h + 1) // 2
    return (
        plane_psnr(a.y[:h, :w], b.y[:h, :w]),
        plane_psnr(a.cb[:ch, :cw], b.cb[:ch, :cw]),
        plane_psnr(a.cr[:ch, :cw], b.cr[:ch, :cw]),
    )


def _render_field(w: int, h: int, rng: np.random.Generator,
                  n_sine: int, n_disks: int) -> np.ndarray:
    """Seeded mixture of a gradient, sinusoids, and anti-aliased disks in [0, 1]."""
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    xn, yn = xx / w, yy / h
    gx, gy = rng.uniform(-1.0, 1.0, size=2)
    v = gx * xn + gy * yn
    for _ in range(n_sine):
        fx, fy = rng.uniform(0.5, 7.0, size=2)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        amp = rng.uniform(0.1, 0.5)
        v += amp * np.sin(2.0 * np.pi * (fx * xn + fy * yn) + phase)
    for _ in range(n_disks):
        cx = rng.uniform(0.0, w)
        cy = rng.uniform(0.0, h)
        rad = rng.uniform(0.02, 0.12) * min(w, h)
        amp = rng.uniform(-1.0, 1.0)
        dist = np.sqrt((xx - cx) ** 2 + (yy - cy) ** 2)
        v += amp * np.clip(rad + 0.5 - dist, 0.0, 1.0)
    lo, hi = float(v.min()), float(v.max())
    if hi <= lo:
        return np.full((h, w), 0.5)
    return (v - lo) / (hi - lo)


def _quantize_plane(field: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return np.clip(round_half_away(lo + field * (hi - lo)), 0, 255).astype(np.uint8)


def _bilinear(plane: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    xc = np.clip(xs, 0.0, w - 1.0)
    yc = np.clip(ys, 0.0, h - 1.0)
    x0 = np.clip(np.floor(xc).astype(np.int64), 0, w - 2) if w > 1 else np.zeros_like(xc, np.int64)
    y0 = np.clip(np.floor(yc).astype(np.int64), 0, h - 2) if h > 1 else np.zeros_like(yc, np.int64)
    fx = (xc - x0)[None, :]
    fy = (yc - y0)[:, None]
    p = plane.astype(np.float64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    top = p[np.ix_(y0, x0)] * (1 - fx) + p[np.ix_(y0, x1)] * fx
    bot = p[np.ix_(y1, x0)] * (1 - fx) + p[np.ix_(y1, x1)] * fx
    return top * (1 - fy) + bot * fy


def _zoom_frame(canvas_y, canvas_cb, canvas_cr, width, height, zw) -> Frame:
    ch_can, cw_can = canvas_y.shape
    zh = height * zw / width
    x0 = (cw_can - zw) / 2.0
    y0 = (ch_can - zh) / 2.0
    if x0 < 0 or y0 < 0:
        raise ValueError("zoom window leaves the canvas")
    xs = x0 + (np.arange(width) + 0.5) * zw / width - 0.5
    ys = y0 + (np.arange(height) + 0.5) * zh / height - 0.5
    y = np.clip(round_half_away(_bilinear(canvas_y, ys, xs)), 0, 255).astype(np.uint8)
    xc = x0 / 2.0 + (np.arange(width // 2) + 0.5) * (zw / 2.0) / (width // 2) - 0.5
    yc = y0 / 2.0 + (np.arange(height // 2) + 0.5) * (zh / 2.0) / (height // 2) - 0.5
    cb = np.clip(round_half_away(_bilinear(canvas_cb, yc, xc)), 0, 255).astype(np.uint8)
    cr = np.clip(round_half_away(_bilinear(canvas_cr, yc, xc)), 0, 255).astype(np.uint8)
    return make_frame(y, cb, cr)


def synth_sequence(
    kind: str, width: int, height: int, n_frames: int,
    velocity: tuple[int, int] = (4, 0), seed: int = 0,
) -> list[Frame]:
    """Deterministic procedural test sequence in planar 4:2:0.

    Pan translates the crop window by velocity pels per frame; zoom grows
    (zoom_out) or shrinks (zoom_in) a centered window by velocity[0] pels
    per side per frame. Raises if the requested path leaves the canvas.
    """
    if kind not in SYNTH_KINDS:
        raise ValueError(f"kind must be one of {SYNTH_KINDS}")
    if width < 2 or height < 2 or width % 2 or height % 2:
        raise ValueError("width and height must be even and at least 2")
    if n_frames < 1:
        raise ValueError("frame count must be positive")
    rng = np.random.default_rng(seed)
    cw, ch = 3 * width, 3 * height
    canvas_y = _quantize_plane(_render_field(cw, ch, rng, 4, 40), 0.0, 255.0)
    canvas_cb = _quantize_plane(_render_field(cw // 2, ch // 2, rng, 3, 12), 64.0, 192.0)
    canvas_cr = _quantize_plane(_render_field(cw // 2, ch // 2, rng, 3, 12), 64.0, 192.0)

    frames = []
    if kind in ("static", "pan"):
        vx, vy = (0, 0) if kind == "static" else (int(velocity[0]), int(velocity[1]))
        x_start = (cw - width) // 2 - (vx * (n_frames - 1)) // 2
        y_start = (ch - height) // 2 - (vy * (n_frames - 1)) // 2
        x_start -= x_start % 2
        y_start -= y_start % 2
        for t in range(n_frames):
            x0 = x_start + vx * t
            y0 = y_start + vy * t
            if not (0 <= x0 <= cw - width and 0 <= y0 <= ch - height):
                raise ValueError("pan window leaves the canvas")
            frames.append(make_frame(
                canvas_y[y0:y0 + height, x0:x0 + width].copy(),
                canvas_cb[y0 // 2:(y0 + height) // 2, x0 // 2:(x0 + width) // 2].copy(),
                canvas_cr[y0 // 2:(y0 + height) // 2, x0 // 2:(x0 + width) // 2].copy(),
            ))
    else:
        rate = abs(int(velocity[0]))
        for t in range(n_frames):
            grow = t if kind == "zoom_out" else (n_frames - 1 - t)
            zw = width + 2.0 * rate * grow
            frames.append(_zoom_frame(canvas_y, canvas_cb, canvas_cr,
                                      width, height, zw))
    return frames


@dataclass
class UnitInfo:
    index: int
    kind: str  # "param_set" or "frame"
    bits: int
    detail: str


@dataclass
class BitAccounting:
    """Where every bit of a stream went; categories sum to total_bits."""

    categories: dict[str, int]
    total_bits: int
    units: list[UnitInfo] = field(default_factory=list)

    def ratios(self) -> dict[str, float]:
        return {k: v / self.total_bits for k, v in self.categories.items()}


def bit_accounting(data: bytes) -> BitAccounting:
    """Replay a stream, charging each bit to exactly one category."""
    r = BitReader(data)
    header = parse_header(r)
    cols, rows = header.grid()
    cats = dict.fromkeys(BIT_CATEGORIES, 0)
    cats["header"] = r.bit_position
    units: list[UnitInfo] = []
    done = 0
    while done < header.frame_count:
        start = r.bit_position
        tag = r.read_bits(8)
        if tag == UNIT_PARAM_SET:
            qp = _parse_param_set_body(r)
            bits = r.bit_position - start
            cats["param_sets"] += bits
            sizes = qp.layer_sizes
            units.append(UnitInfo(
                len(units), "param_set", bits,
                f"layers={list(sizes)} params={param_count(sizes)}",
            ))
        elif tag == UNIT_FRAME:
            fb = FrameBits()
            fu = _parse_frame_body(r, cols, rows, fb)
            bits = r.bit_position - start
            cats["regions_and_modes"] += fb.modes
            cats["mvs"] += fb.mvs
            cats["residuals"] += fb.residuals
            n_gen = int(fu.gen_map.sum())
            units.append(UnitInfo(
                len(units), "frame", bits,
                f"type={fu.frame_type} regions={len(fu.regions)} gen_blocks={n_gen}",
            ))
            done += 1
        else:
            raise StreamError(f"unknown unit tag {tag}")
    if r.bits_remaining:
        raise StreamError(f"{r.bits_remaining} trailing bits after last frame")
    acct = BitAccounting(cats, len(data) * 8, units)
    if sum(cats.values()) != acct.total_bits:
        raise StreamError("bit accounting does not sum to stream size")
    return acct


def param_bandwidth_share(
    n_params: int, bits_per_param: int, bitrate_bps: float,
    sets_per_second: float = 1.0,
) -> float:
    """Fraction of a bitrate spent shipping one parameter set per interval."""
    if bitrate_bps <= 0:
        raise ValueError("bitrate must be positive")
    return n_params * bits_per_param * sets_per_second / bitrate_bps


def generated_block_share(gen_blocks: float, total_blocks: float) -> float:
    """Fraction of coded blocks that are generated."""
    if total_blocks <= 0:
        raise ValueError("total block count must be positive")
    return gen_blocks / total_blocks


def generator_calls_per_second(gen_blocks_per_frame: float, fps: float) -> float:
    """Generator evaluations per second: one call per generated block."""
    return gen_blocks_per_frame * fps
