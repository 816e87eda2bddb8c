"""Container wire format: header, parameter-set units, and frame units.

Layout (all multi-bit fields MSB-first, every unit zero-padded to a byte
boundary at its end):

  header      "NBV1", width u16, height u16, frame_count u32, qp u8,
              gnn_enabled u8, gnn_interval u8
  unit        tag u8: 1 = parameter set, 2 = frame
  param set   layer_count u8, hidden sizes u16 each, then per weight layer:
              scale as IEEE 754 binary32 big-endian, weights row-major then
              biases as 10-bit two's complement, padded to a byte per layer
  frame       frame type 1 bit (0 = I, 1 = P), region count ue, regions as
              ue(x0) ue(y0) ue(x1) ue(y1) + kind bit (0 = forced,
              1 = selectable), one selection bit per selectable-region block
              in raster order (1 = generate), then per-block payloads in
              frame raster order: mode symbol ue for predicted blocks
              (P frames: 0 inter, 1 DC, 2 horizontal, 3 vertical; I frames:
              0 DC, 1 horizontal, 2 vertical), se motion-vector difference
              against the left neighbor's vector for inter, then the 24
              residual tiles. Generated blocks carry no mode symbol; their
              membership is implied by the regions and selection bits.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .core import block_grid_dims
from .entropy import (
    BitReader,
    BitWriter,
    StreamError,
    se_decode,
    se_encode,
    ue_decode,
    ue_encode,
)
from .gnn import (
    INPUT_SIZE,
    MAX_LAYERS,
    MAX_LAYER_SIZE,
    OUTPUT_SIZE,
    QUANT_MAX,
    QuantizedGnnParams,
    QuantizedLayer,
    check_architecture,
)
from .residual import TILES_PER_BLOCK, read_block_tiles, write_block_tiles

MAGIC = b"NBV1"
UNIT_PARAM_SET = 1
UNIT_FRAME = 2

# Categories every bit of a stream falls into, for accounting.
BIT_CATEGORIES = ("header", "param_sets", "regions_and_modes", "mvs", "residuals")


class BlockMode(IntEnum):
    """Block kinds; the order doubles as the P-frame symbol and the RD tie rank."""

    INTER = 0
    INTRA_DC = 1
    INTRA_H = 2
    INTRA_V = 3
    GEN = 4


_INTRA_SYMBOL_I = {
    BlockMode.INTRA_DC: 0, BlockMode.INTRA_H: 1, BlockMode.INTRA_V: 2,
}
_I_SYMBOL_MODE = {v: k for k, v in _INTRA_SYMBOL_I.items()}


@dataclass
class StreamHeader:
    width: int
    height: int
    frame_count: int
    qp: int
    gnn_enabled: bool
    gnn_interval: int

    def grid(self) -> tuple[int, int]:
        return block_grid_dims(self.width, self.height)


def write_header(w: BitWriter, h: StreamHeader) -> int:
    start = w.bit_position
    if not (1 <= h.width <= 0xFFFF and 1 <= h.height <= 0xFFFF):
        raise ValueError("header dimensions out of range")
    if not 0 <= h.frame_count <= 0xFFFFFFFF:
        raise ValueError("frame count out of range")
    if not 0 <= h.qp <= 51:
        raise ValueError("qp out of range")
    if not 0 <= h.gnn_interval <= 0xFF:
        raise ValueError("generator interval out of range")
    for byte in MAGIC:
        w.write_bits(byte, 8)
    w.write_bits(h.width, 16)
    w.write_bits(h.height, 16)
    w.write_bits(h.frame_count, 32)
    w.write_bits(h.qp, 8)
    w.write_bits(1 if h.gnn_enabled else 0, 8)
    w.write_bits(h.gnn_interval, 8)
    w.byte_align()
    return w.bit_position - start


def parse_header(r: BitReader) -> StreamHeader:
    magic = bytes(r.read_bits(8) for _ in range(4))
    if magic != MAGIC:
        raise StreamError(f"bad magic {magic!r}")
    width = r.read_bits(16)
    height = r.read_bits(16)
    frame_count = r.read_bits(32)
    qp = r.read_bits(8)
    gnn_enabled = r.read_bits(8)
    gnn_interval = r.read_bits(8)
    r.byte_align()
    if width < 1 or height < 1:
        raise StreamError("zero frame dimension")
    if qp > 51:
        raise StreamError(f"qp {qp} out of range")
    if gnn_enabled > 1:
        raise StreamError("gnn_enabled flag must be 0 or 1")
    if gnn_enabled and not 1 <= gnn_interval <= 120:
        raise StreamError(f"generator interval {gnn_interval} out of range")
    return StreamHeader(width, height, frame_count, qp, bool(gnn_enabled),
                        gnn_interval)


def _pack_levels(flat: np.ndarray) -> bytes:
    """Pack int16 levels as consecutive 10-bit two's-complement fields."""
    codes = (flat.astype(np.int64) & 0x3FF).astype(np.uint16)
    shifts = np.arange(9, -1, -1, dtype=np.uint16)
    bits = ((codes[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
    return np.packbits(bits.reshape(-1)).tobytes()


def _unpack_levels(raw: bytes, n: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[:10 * n]
    weights = (1 << np.arange(9, -1, -1, dtype=np.int64))
    codes = bits.reshape(n, 10).astype(np.int64) @ weights
    vals = np.where(codes >= 512, codes - 1024, codes)
    if np.any(vals < -QUANT_MAX):
        raise StreamError("parameter level out of 10-bit range")
    return vals.astype(np.int16)


def write_param_set(w: BitWriter, qparams: QuantizedGnnParams) -> int:
    """Write one parameter-set unit including its tag; returns bits written."""
    start = w.bit_position
    sizes = check_architecture(qparams.layer_sizes)
    w.write_bits(UNIT_PARAM_SET, 8)
    w.write_bits(len(sizes), 8)
    for s in sizes[1:-1]:
        w.write_bits(s, 16)
    for layer in qparams.layers:
        w.write_bytes(struct.pack(">f", float(layer.scale)))
        flat = np.concatenate([layer.weights.reshape(-1), layer.biases])
        if np.any(np.abs(flat.astype(np.int64)) > QUANT_MAX):
            raise ValueError("parameter level out of 10-bit range")
        w.write_bytes(_pack_levels(flat))
    return w.bit_position - start


def _parse_param_set_body(r: BitReader) -> QuantizedGnnParams:
    n_layers = r.read_bits(8)
    if not 2 <= n_layers <= MAX_LAYERS:
        raise StreamError(f"layer count {n_layers} outside [2, {MAX_LAYERS}]")
    sizes = [INPUT_SIZE]
    for _ in range(n_layers - 2):
        s = r.read_bits(16)
        if not 1 <= s <= MAX_LAYER_SIZE:
            raise StreamError(f"layer size {s} outside [1, {MAX_LAYER_SIZE}]")
        sizes.append(s)
    sizes.append(OUTPUT_SIZE)
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        scale = np.float32(struct.unpack(">f", r.read_bytes(4))[0])
        if not np.isfinite(scale) or scale <= 0:
            raise StreamError(f"bad layer scale {scale}")
        n = fan_out * (fan_in + 1)
        vals = _unpack_levels(r.read_bytes((10 * n + 7) // 8), n)
        layers.append(QuantizedLayer(
            vals[:fan_out * fan_in].reshape(fan_out, fan_in).copy(),
            vals[fan_out * fan_in:].copy(),
            scale,
        ))
    return QuantizedGnnParams(layers)


def parse_param_set(r: BitReader) -> QuantizedGnnParams:
    tag = r.read_bits(8)
    if tag != UNIT_PARAM_SET:
        raise StreamError(f"expected parameter-set unit, found tag {tag}")
    return _parse_param_set_body(r)


def param_set_size_bits(layer_sizes) -> int:
    """Exact unit size the layout produces for an architecture."""
    sizes = check_architecture(layer_sizes)
    bits = 8 + 8 + 16 * (len(sizes) - 2)
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        n = fan_out * (fan_in + 1)
        bits += 32 + 8 * ((10 * n + 7) // 8)
    return bits


@dataclass(eq=False)
class RegionSpec:
    """Inclusive block-coordinate rectangle marked for generation."""

    x0: int
    y0: int
    x1: int
    y1: int
    selectable: bool  # forced regions generate every block, no per-block bit

    def contains(self, bx: int, by: int) -> bool:
        return self.x0 <= bx <= self.x1 and self.y0 <= by <= self.y1

    def block_count(self) -> int:
        return (self.x1 - self.x0 + 1) * (self.y1 - self.y0 + 1)

    def blocks(self):
        for by in range(self.y0, self.y1 + 1):
            for bx in range(self.x0, self.x1 + 1):
                yield bx, by


def validate_regions(regions: list[RegionSpec], cols: int, rows: int) -> None:
    for reg in regions:
        if not (0 <= reg.x0 <= reg.x1 < cols and 0 <= reg.y0 <= reg.y1 < rows):
            raise ValueError(
                f"region ({reg.x0},{reg.y0})-({reg.x1},{reg.y1}) "
                f"outside {cols}x{rows} grid or inverted"
            )
    for i, a in enumerate(regions):
        for b in regions[i + 1:]:
            if a.x0 <= b.x1 and b.x0 <= a.x1 and a.y0 <= b.y1 and b.y0 <= a.y1:
                raise ValueError("regions overlap")


@dataclass(eq=False)
class BlockPayload:
    mode: BlockMode
    mvd: tuple[int, int] | None  # present iff mode is INTER
    tiles: list[np.ndarray]  # 24 level arrays of 64 each


@dataclass(eq=False)
class FrameUnit:
    frame_type: str  # "I" or "P"
    regions: list[RegionSpec]
    gen_map: np.ndarray  # (rows, cols) bool, True where a block is generated
    blocks: list[BlockPayload]  # frame raster order


@dataclass
class FrameBits:
    """Where one frame unit's bits went; modes covers everything not mv/residual."""

    modes: int = 0
    mvs: int = 0
    residuals: int = 0

    @property
    def total(self) -> int:
        return self.modes + self.mvs + self.residuals


def _check_frame_unit(fu: FrameUnit, cols: int, rows: int) -> None:
    if fu.frame_type not in ("I", "P"):
        raise ValueError(f"bad frame type {fu.frame_type!r}")
    validate_regions(fu.regions, cols, rows)
    if fu.gen_map.shape != (rows, cols):
        raise ValueError("gen_map shape does not match grid")
    if len(fu.blocks) != cols * rows:
        raise ValueError("payload count does not match grid")
    in_forced = np.zeros((rows, cols), dtype=bool)
    in_any = np.zeros((rows, cols), dtype=bool)
    for reg in fu.regions:
        in_any[reg.y0:reg.y1 + 1, reg.x0:reg.x1 + 1] = True
        if not reg.selectable:
            in_forced[reg.y0:reg.y1 + 1, reg.x0:reg.x1 + 1] = True
    if np.any(fu.gen_map & ~in_any):
        raise ValueError("generated block outside every region")
    if np.any(in_forced & ~fu.gen_map):
        raise ValueError("forced-region block not marked generated")
    for i, p in enumerate(fu.blocks):
        by, bx = divmod(i, cols)
        if (p.mode == BlockMode.GEN) != bool(fu.gen_map[by, bx]):
            raise ValueError(f"mode/gen_map mismatch at block ({bx},{by})")
        if fu.frame_type == "I" and p.mode == BlockMode.INTER:
            raise ValueError("inter block in an I frame")
        if (p.mvd is not None) != (p.mode == BlockMode.INTER):
            raise ValueError("motion vector difference present iff inter")
        if len(p.tiles) != TILES_PER_BLOCK:
            raise ValueError("bad residual tile count")


def write_frame(w: BitWriter, fu: FrameUnit, cols: int, rows: int) -> FrameBits:
    """Write one frame unit including its tag; returns the bit breakdown."""
    _check_frame_unit(fu, cols, rows)
    bits = FrameBits()
    start = w.bit_position
    w.write_bits(UNIT_FRAME, 8)
    w.write_bits(0 if fu.frame_type == "I" else 1, 1)
    ue_encode(w, len(fu.regions))
    for reg in fu.regions:
        ue_encode(w, reg.x0)
        ue_encode(w, reg.y0)
        ue_encode(w, reg.x1)
        ue_encode(w, reg.y1)
        w.write_bits(1 if reg.selectable else 0, 1)
    for reg in fu.regions:
        if reg.selectable:
            for bx, by in reg.blocks():
                w.write_bits(1 if fu.gen_map[by, bx] else 0, 1)
    bits.modes += w.bit_position - start
    for payload in fu.blocks:
        if payload.mode != BlockMode.GEN:
            p0 = w.bit_position
            if fu.frame_type == "P":
                ue_encode(w, int(payload.mode))
            else:
                ue_encode(w, _INTRA_SYMBOL_I[payload.mode])
            bits.modes += w.bit_position - p0
            if payload.mode == BlockMode.INTER:
                p0 = w.bit_position
                se_encode(w, payload.mvd[0])
                se_encode(w, payload.mvd[1])
                bits.mvs += w.bit_position - p0
        bits.residuals += write_block_tiles(w, payload.tiles)
    bits.modes += w.byte_align()
    return bits


def _parse_frame_body(r: BitReader, cols: int, rows: int,
                      bits: FrameBits | None = None) -> FrameUnit:
    start = r.bit_position - 8  # tag already consumed
    frame_type = "I" if r.read_bits(1) == 0 else "P"
    n_regions = ue_decode(r)
    if n_regions > cols * rows:
        raise StreamError(f"region count {n_regions} exceeds grid")
    regions = []
    for _ in range(n_regions):
        x0 = ue_decode(r)
        y0 = ue_decode(r)
        x1 = ue_decode(r)
        y1 = ue_decode(r)
        selectable = r.read_bits(1) == 1
        regions.append(RegionSpec(x0, y0, x1, y1, selectable))
    try:
        validate_regions(regions, cols, rows)
    except ValueError as e:
        raise StreamError(str(e)) from e
    gen_map = np.zeros((rows, cols), dtype=bool)
    for reg in regions:
        if reg.selectable:
            for bx, by in reg.blocks():
                gen_map[by, bx] = r.read_bits(1) == 1
        else:
            for bx, by in reg.blocks():
                gen_map[by, bx] = True
    mode_bits = r.bit_position - start
    mv_bits = 0
    res_bits = 0
    blocks = []
    for i in range(cols * rows):
        by, bx = divmod(i, cols)
        if gen_map[by, bx]:
            mode = BlockMode.GEN
            mvd = None
        else:
            p0 = r.bit_position
            sym = ue_decode(r)
            mode_bits += r.bit_position - p0
            if frame_type == "P":
                if sym > 3:
                    raise StreamError(f"bad P-frame mode symbol {sym}")
                mode = BlockMode(sym)
            else:
                if sym > 2:
                    raise StreamError(f"bad I-frame mode symbol {sym}")
                mode = _I_SYMBOL_MODE[sym]
            mvd = None
            if mode == BlockMode.INTER:
                p0 = r.bit_position
                mvd = (se_decode(r), se_decode(r))
                mv_bits += r.bit_position - p0
        p0 = r.bit_position
        tiles = read_block_tiles(r)
        res_bits += r.bit_position - p0
        blocks.append(BlockPayload(mode, mvd, tiles))
    mode_bits += r.byte_align()
    if bits is not None:
        bits.modes += mode_bits
        bits.mvs += mv_bits
        bits.residuals += res_bits
    return FrameUnit(frame_type, regions, gen_map, blocks)


def parse_frame(r: BitReader, cols: int, rows: int,
                bits: FrameBits | None = None) -> FrameUnit:
    tag = r.read_bits(8)
    if tag != UNIT_FRAME:
        raise StreamError(f"expected frame unit, found tag {tag}")
    return _parse_frame_body(r, cols, rows, bits)


def write_stream(header: StreamHeader, units) -> bytes:
    """Assemble a whole stream from ('param_set', qparams) / ('frame', fu) units."""
    w = BitWriter()
    write_header(w, header)
    cols, rows = header.grid()
    n_frames = 0
    for kind, payload in units:
        if kind == "param_set":
            write_param_set(w, payload)
        elif kind == "frame":
            write_frame(w, payload, cols, rows)
            n_frames += 1
        else:
            raise ValueError(f"unknown unit kind {kind!r}")
    if n_frames != header.frame_count:
        raise ValueError(
            f"header promises {header.frame_count} frames, wrote {n_frames}"
        )
    return w.to_bytes()


def parse_stream(data: bytes):
    """Parse a stream; returns (header, unit generator).

    The generator yields ('param_set', QuantizedGnnParams) and
    ('frame', FrameUnit) in stream order, stops after the header's frame
    count, and rejects unknown tags and trailing bytes.
    """
    r = BitReader(data)
    header = parse_header(r)
    cols, rows = header.grid()

    def units():
        done = 0
        while done < header.frame_count:
            tag = r.read_bits(8)
            if tag == UNIT_PARAM_SET:
                yield "param_set", _parse_param_set_body(r)
            elif tag == UNIT_FRAME:
                yield "frame", _parse_frame_body(r, cols, rows)
                done += 1
            else:
                raise StreamError(f"unknown unit tag {tag}")
        if r.bits_remaining:
            raise StreamError(f"{r.bits_remaining} trailing bits after last frame")

    return header, units()
