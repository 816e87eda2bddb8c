"""Frames, blocks, sequence configuration, and planar 4:2:0 file I/O.

A frame holds 8-bit Y, Cb, Cr planes. The coded area is padded up to
multiples of the 32-pixel luma block size by edge replication; the original
display size travels with the frame so file output can crop back to it.
A Block32 is one coding unit: 32x32 luma plus two co-located 16x16 chroma
blocks, 1536 samples in total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

BLOCK = 32
CHROMA_BLOCK = 16
SAMPLES_PER_BLOCK = BLOCK * BLOCK + 2 * CHROMA_BLOCK * CHROMA_BLOCK


def round_half_away(x):
    """Round to nearest integer, halves away from zero. Works elementwise."""
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


class BlockCoord(NamedTuple):
    bx: int
    by: int


@dataclass
class Frame:
    """One picture: padded planes plus the display size they crop back to."""

    y: np.ndarray
    cb: np.ndarray
    cr: np.ndarray
    display_width: int
    display_height: int

    @property
    def width(self) -> int:
        return self.y.shape[1]

    @property
    def height(self) -> int:
        return self.y.shape[0]

    def copy(self) -> "Frame":
        return Frame(
            self.y.copy(), self.cb.copy(), self.cr.copy(),
            self.display_width, self.display_height,
        )


@dataclass
class Block32:
    """One coding unit: 32x32 luma and two 16x16 chroma blocks."""

    y: np.ndarray
    cb: np.ndarray
    cr: np.ndarray

    def copy(self) -> "Block32":
        return Block32(self.y.copy(), self.cb.copy(), self.cr.copy())


@dataclass
class SequenceConfig:
    """Validated encoder-side settings for one sequence."""

    width: int
    height: int
    frame_count: int
    qp: int
    gnn_interval: int = 16
    gnn_enabled: bool = True
    gnn_arch: tuple[int, ...] = (3, 25, 40, 60, 1536)
    search_range: int = 8

    def validate(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("frame dimensions must be positive")
        if self.width > 0xFFFF or self.height > 0xFFFF:
            raise ValueError("frame dimensions exceed the 16-bit header fields")
        if self.frame_count < 1:
            raise ValueError("frame count must be positive")
        if not 0 <= self.qp <= 51:
            raise ValueError(f"qp out of range [0, 51]: {self.qp}")
        if self.search_range < 0:
            raise ValueError("search range must be non-negative")
        if self.gnn_enabled:
            if not 1 <= self.gnn_interval <= 120:
                raise ValueError("generator interval must be in [1, 120]")
        elif not 1 <= self.gnn_interval <= 255:
            raise ValueError("keyframe interval must be in [1, 255]")


def block_grid_dims(width: int, height: int) -> tuple[int, int]:
    """Number of 32x32 blocks (columns, rows) covering a width x height frame."""
    if width < 1 or height < 1:
        raise ValueError("frame dimensions must be positive")
    return math.ceil(width / BLOCK), math.ceil(height / BLOCK)


def _pad_to_multiple(plane: np.ndarray, mult: int) -> np.ndarray:
    h, w = plane.shape
    ph = (-h) % mult
    pw = (-w) % mult
    if ph == 0 and pw == 0:
        return plane
    return np.pad(plane, ((0, ph), (0, pw)), mode="edge")


def make_frame(y: np.ndarray, cb: np.ndarray, cr: np.ndarray) -> Frame:
    """Build a frame from unpadded planes, edge-replicating to the block grid."""
    y = np.ascontiguousarray(y, dtype=np.uint8)
    cb = np.ascontiguousarray(cb, dtype=np.uint8)
    cr = np.ascontiguousarray(cr, dtype=np.uint8)
    h, w = y.shape
    exp_cw, exp_ch = (w + 1) // 2, (h + 1) // 2
    if cb.shape != (exp_ch, exp_cw) or cr.shape != (exp_ch, exp_cw):
        raise ValueError(
            f"chroma plane shape {cb.shape} does not match luma {y.shape}"
        )
    fy = _pad_to_multiple(y, BLOCK)
    fcb = _pad_to_multiple(cb, CHROMA_BLOCK)
    fcr = _pad_to_multiple(cr, CHROMA_BLOCK)
    return Frame(fy, fcb, fcr, w, h)


def blank_frame(width: int, height: int, value: int = 0) -> Frame:
    """All-`value` frame with padded planes for a width x height display size."""
    cols, rows = block_grid_dims(width, height)
    y = np.full((rows * BLOCK, cols * BLOCK), value, dtype=np.uint8)
    cb = np.full((rows * CHROMA_BLOCK, cols * CHROMA_BLOCK), value, dtype=np.uint8)
    return Frame(y, cb, cb.copy(), width, height)


def extract_block(frame: Frame, c: BlockCoord) -> Block32:
    """Copy out the coding unit at block coordinate c."""
    cols, rows = block_grid_dims(frame.width, frame.height)
    if not (0 <= c.bx < cols and 0 <= c.by < rows):
        raise ValueError(f"block coordinate {c} outside {cols}x{rows} grid")
    y0, x0 = c.by * BLOCK, c.bx * BLOCK
    cy0, cx0 = c.by * CHROMA_BLOCK, c.bx * CHROMA_BLOCK
    return Block32(
        frame.y[y0:y0 + BLOCK, x0:x0 + BLOCK].copy(),
        frame.cb[cy0:cy0 + CHROMA_BLOCK, cx0:cx0 + CHROMA_BLOCK].copy(),
        frame.cr[cy0:cy0 + CHROMA_BLOCK, cx0:cx0 + CHROMA_BLOCK].copy(),
    )


def insert_block(frame: Frame, c: BlockCoord, block: Block32) -> Frame:
    """Write the coding unit at c in place; exact inverse of extract_block."""
    cols, rows = block_grid_dims(frame.width, frame.height)
    if not (0 <= c.bx < cols and 0 <= c.by < rows):
        raise ValueError(f"block coordinate {c} outside {cols}x{rows} grid")
    y0, x0 = c.by * BLOCK, c.bx * BLOCK
    cy0, cx0 = c.by * CHROMA_BLOCK, c.bx * CHROMA_BLOCK
    frame.y[y0:y0 + BLOCK, x0:x0 + BLOCK] = block.y
    frame.cb[cy0:cy0 + CHROMA_BLOCK, cx0:cx0 + CHROMA_BLOCK] = block.cb
    frame.cr[cy0:cy0 + CHROMA_BLOCK, cx0:cx0 + CHROMA_BLOCK] = block.cr
    return frame


def _yuv_frame_bytes(width: int, height: int) -> int:
    cw, ch = (width + 1) // 2, (height + 1) // 2
    return width * height + 2 * cw * ch


def read_yuv(path, width: int, height: int, n_frames: int) -> list[Frame]:
    """Read n_frames of planar 8-bit 4:2:0 video; frames come back padded."""
    if width < 1 or height < 1 or n_frames < 1:
        raise ValueError("dimensions and frame count must be positive")
    fbytes = _yuv_frame_bytes(width, height)
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < n_frames * fbytes:
        raise ValueError(
            f"yuv file holds {len(data)} bytes, "
            f"need {n_frames * fbytes} for {n_frames} frames of {width}x{height}"
        )
    cw, ch = (width + 1) // 2, (height + 1) // 2
    frames = []
    for i in range(n_frames):
        base = i * fbytes
        y = np.frombuffer(data, np.uint8, width * height, base)
        cb = np.frombuffer(data, np.uint8, cw * ch, base + width * height)
        cr = np.frombuffer(data, np.uint8, cw * ch, base + width * height + cw * ch)
        frames.append(make_frame(
            y.reshape(height, width), cb.reshape(ch, cw), cr.reshape(ch, cw)
        ))
    return frames


def write_yuv(path, frames: list[Frame]) -> int:
    """Write frames as planar 8-bit 4:2:0, cropped to their display size."""
    total = 0
    with open(path, "wb") as f:
        for fr in frames:
            w, h = fr.display_width, fr.display_height
            cw, ch = (w + 1) // 2, (h + 1) // 2
            for plane, pw, ph in ((fr.y, w, h), (fr.cb, cw, ch), (fr.cr, cw, ch)):
                buf = np.ascontiguousarray(plane[:ph, :pw], dtype=np.uint8)
                f.write(buf.tobytes())
                total += pw * ph
    return total
