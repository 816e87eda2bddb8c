"""Encoder: rate-distortion mode decisions and the generator-period loop.

The sequence is coded in keyframe periods of gnn_interval frames, each
starting with an I frame. Per period the encoder estimates global motion on
the source frames, derives generation regions (a margin on the edge where
new content enters under panning, four margins under a declared zoom),
overfits the generator network on the source blocks of those regions, and
then encodes the period twice: once with the network (parameter-set bits
included) and once without. The cheaper encoding by total rate-distortion
cost J = SSD + lambda * bits is emitted, so enabling the generator can
never lose to the baseline. Every candidate is costed with exact coded
bits, and reconstruction runs through the same code path the decoder uses,
which keeps the two bit-identical.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bitstream import (
    BlockMode,
    BlockPayload,
    FrameBits,
    FrameUnit,
    RegionSpec,
    StreamHeader,
    validate_regions,
    write_frame,
    write_header,
    write_param_set,
)
from .core import (
    BlockCoord,
    Block32,
    Frame,
    SequenceConfig,
    blank_frame,
    block_grid_dims,
    extract_block,
    insert_block,
)
from .entropy import BitWriter, se_length, ue_length
from .gnn import (
    QuantizedGnnParams,
    SetContext,
    TrainConfig,
    block_to_targets,
    check_architecture,
    generate_block,
    gnn_input,
    quantize_params,
    train,
)
from .prediction import (
    IntraMode,
    MotionVector,
    intra_predict,
    motion_compensate,
    motion_search,
)
from .residual import apply_block_residual, block_tiles_bits, encode_block_residual
from .tools import plane_psnr

ZOOM_HINTS = ("none", "out", "in")

_MODE_TO_INTRA = {
    BlockMode.INTRA_DC: IntraMode.DC,
    BlockMode.INTRA_H: IntraMode.HORIZONTAL,
    BlockMode.INTRA_V: IntraMode.VERTICAL,
}
_I_FRAME_SYMBOL = {BlockMode.INTRA_DC: 0, BlockMode.INTRA_H: 1, BlockMode.INTRA_V: 2}


def rd_lambda(qp: int) -> float:
    """Lagrange multiplier weighting bits against SSD at a given qp."""
    return 0.85 * 2.0 ** ((qp - 12) / 3.0)


@dataclass(frozen=True)
class RdCost:
    distortion: int  # SSD over the block's 1536 samples
    bits: int  # exact coded bits for the candidate
    j: float

    @classmethod
    def of(cls, distortion: int, bits: int, lam: float) -> "RdCost":
        return cls(distortion, bits, distortion + lam * bits)


class GlobalMotion(NamedTuple):
    dx: int
    dy: int


def _median_toward_zero(values: list[int]) -> int:
    # np.median averages the middle pair on even counts; a half-integer
    # result truncates toward zero.
    med = float(np.median(np.asarray(values, dtype=np.float64)))
    return int(med)


def estimate_global_motion(cur: Frame, ref: Frame, search_range: int) -> GlobalMotion:
    """Component-wise median motion over a regular 16-block subsample grid."""
    cols, rows = block_grid_dims(cur.width, cur.height)
    bxs = [min(cols - 1, ((2 * i + 1) * cols) // 8) for i in range(4)]
    bys = [min(rows - 1, ((2 * i + 1) * rows) // 8) for i in range(4)]
    dxs: list[int] = []
    dys: list[int] = []
    for by in bys:
        for bx in bxs:
            c = BlockCoord(bx, by)
            mv, _ = motion_search(extract_block(cur, c), ref, c, search_range)
            dxs.append(mv.dx)
            dys.append(mv.dy)
    return GlobalMotion(_median_toward_zero(dxs), _median_toward_zero(dys))


def _axis_margin(comp: int, frames_since_set: int, extent: int) -> int:
    width = math.ceil(abs(comp) * frames_since_set / 32)
    return min(max(width, 1), max(1, extent // 4))


def select_generation_regions(
    gm: GlobalMotion, cols: int, rows: int,
    frames_since_set: int, hint: str = "none",
) -> list[RegionSpec]:
    """Regions worth generating for one frame.

    Panning puts a selectable margin on the edge where content enters: the
    motion convention points vectors at where the reference content sits, so
    a positive component means the reference lies further along the axis and
    new content enters at the high edge. A declared zoom marks all four
    edges with margins in the frame's aspect ratio. Zero motion with no
    zoom hint yields no regions.
    """
    if hint not in ZOOM_HINTS:
        raise ValueError(f"zoom hint must be one of {ZOOM_HINTS}")
    regs: list[RegionSpec] = []
    if hint != "none":
        wh = max(1, cols // 4)
        wv = max(1, rows // 4)
        regs.append(RegionSpec(0, 0, wh - 1, rows - 1, True))
        if cols - wh >= wh:
            regs.append(RegionSpec(cols - wh, 0, cols - 1, rows - 1, True))
        x_lo, x_hi = wh, cols - 1 - wh
        if x_lo <= x_hi:
            regs.append(RegionSpec(x_lo, 0, x_hi, wv - 1, True))
            if rows - wv >= wv:
                regs.append(RegionSpec(x_lo, rows - wv, x_hi, rows - 1, True))
        validate_regions(regs, cols, rows)
        return regs

    x_lo, x_hi = 0, cols - 1
    if gm.dx:
        wx = _axis_margin(gm.dx, frames_since_set, cols)
        if gm.dx > 0:
            regs.append(RegionSpec(cols - wx, 0, cols - 1, rows - 1, True))
            x_hi = cols - 1 - wx
        else:
            regs.append(RegionSpec(0, 0, wx - 1, rows - 1, True))
            x_lo = wx
    if gm.dy and x_lo <= x_hi:
        wy = _axis_margin(gm.dy, frames_since_set, rows)
        if gm.dy > 0:
            regs.append(RegionSpec(x_lo, rows - wy, x_hi, rows - 1, True))
        else:
            regs.append(RegionSpec(x_lo, 0, x_hi, wy - 1, True))
    validate_regions(regs, cols, rows)
    return regs


def train_param_set(
    src_frames: list[Frame], start_frame: int,
    regions_per_frame: list[list[RegionSpec]], ctx: SetContext,
    layer_sizes, cfg: TrainConfig,
) -> tuple[QuantizedGnnParams | None, int]:
    """Overfit and quantize one period's network on its region source blocks.

    The dataset is every (block, frame) pair inside any of that frame's
    regions, targeting source pixels. Returns (None, 0) when no frame has
    regions.
    """
    inputs = []
    targets = []
    for offset, regs in enumerate(regions_per_frame):
        if not regs:
            continue
        frame_idx = start_frame + offset
        frame = src_frames[offset]
        for by in range(ctx.rows):
            for bx in range(ctx.cols):
                if any(r.contains(bx, by) for r in regs):
                    c = BlockCoord(bx, by)
                    inputs.append(gnn_input(ctx, c, frame_idx))
                    targets.append(block_to_targets(extract_block(frame, c)))
    if not inputs:
        return None, 0
    params = train(layer_sizes, np.asarray(inputs), np.asarray(targets), cfg)
    return quantize_params(params), len(inputs)


def choose_block_mode(candidates: list[tuple[BlockMode, RdCost]]) -> BlockMode:
    """Pick the minimum-J candidate; ties go to the earlier BlockMode rank."""
    if not candidates:
        raise ValueError("no candidates")
    return min(candidates, key=lambda mc: (mc[1].j, int(mc[0])))[0]


def _ssd(a: Block32, b: Block32) -> int:
    total = 0
    for pa, pb in ((a.y, b.y), (a.cb, b.cb), (a.cr, b.cr)):
        d = pa.astype(np.int64) - pb.astype(np.int64)
        total += int((d * d).sum())
    return total


@dataclass
class _FrameResult:
    unit: FrameUnit
    recon: Frame
    distortion: int
    n_intra: int
    n_inter: int
    n_gen: int


def _encode_frame(
    source: Frame, prev_recon: Frame | None, frame_idx: int, frame_type: str,
    regions: list[RegionSpec], qparams: QuantizedGnnParams | None,
    ctx: SetContext | None, qp: int, lam: float, search_range: int,
    cols: int, rows: int,
) -> _FrameResult:
    recon = blank_frame(source.display_width, source.display_height)
    gen_map = np.zeros((rows, cols), dtype=bool)
    payloads: list[BlockPayload] = []
    dist_total = 0
    n_intra = n_inter = n_gen = 0

    for by in range(rows):
        left_mode: BlockMode | None = None
        left_mv = MotionVector(0, 0)
        for bx in range(cols):
            c = BlockCoord(bx, by)
            src_block = extract_block(source, c)
            region = next((r for r in regions if r.contains(bx, by)), None)
            sel_bit = 1 if region is not None and region.selectable else 0
            mv_pred = left_mv if left_mode == BlockMode.INTER else MotionVector(0, 0)

            if region is not None and not region.selectable:
                # Forced region: no choice, no mode symbol.
                basis = generate_block(qparams, c, frame_idx, ctx)
                tiles = encode_block_residual(src_block, basis, qp)
                chosen = (BlockMode.GEN, None, tiles,
                          apply_block_residual(basis, tiles, qp))
            else:
                candidates = []
                if frame_type == "P":
                    mv, _ = motion_search(src_block, prev_recon, c, search_range)
                    basis = motion_compensate(prev_recon, c, mv)
                    mvd = (mv.dx - mv_pred.dx, mv.dy - mv_pred.dy)
                    tiles = encode_block_residual(src_block, basis, qp)
                    bits = (sel_bit + ue_length(int(BlockMode.INTER))
                            + se_length(mvd[0]) + se_length(mvd[1])
                            + block_tiles_bits(tiles))
                    rec = apply_block_residual(basis, tiles, qp)
                    candidates.append((BlockMode.INTER, mvd, tiles, rec,
                                       RdCost.of(_ssd(src_block, rec), bits, lam)))
                for mode in (BlockMode.INTRA_DC, BlockMode.INTRA_H, BlockMode.INTRA_V):
                    basis = intra_predict(recon, c, _MODE_TO_INTRA[mode])
                    tiles = encode_block_residual(src_block, basis, qp)
                    symbol = int(mode) if frame_type == "P" else _I_FRAME_SYMBOL[mode]
                    bits = sel_bit + ue_length(symbol) + block_tiles_bits(tiles)
                    rec = apply_block_residual(basis, tiles, qp)
                    candidates.append((mode, None, tiles, rec,
                                       RdCost.of(_ssd(src_block, rec), bits, lam)))
                if region is not None and qparams is not None:
                    basis = generate_block(qparams, c, frame_idx, ctx)
                    tiles = encode_block_residual(src_block, basis, qp)
                    bits = sel_bit + block_tiles_bits(tiles)
                    rec = apply_block_residual(basis, tiles, qp)
                    candidates.append((BlockMode.GEN, None, tiles, rec,
                                       RdCost.of(_ssd(src_block, rec), bits, lam)))
                best = choose_block_mode([(m, cost) for m, _, _, _, cost in candidates])
                mvd, tiles, rec = next(
                    (mvd, tiles, rec) for m, mvd, tiles, rec, _ in candidates
                    if m == best
                )
                chosen = (best, mvd if best == BlockMode.INTER else None, tiles, rec)

            mode, mvd, tiles, rec_block = chosen
            insert_block(recon, c, rec_block)
            dist_total += _ssd(src_block, rec_block)
            payloads.append(BlockPayload(mode, mvd, tiles))
            if mode == BlockMode.GEN:
                gen_map[by, bx] = True
                n_gen += 1
                left_mode = mode
            elif mode == BlockMode.INTER:
                n_inter += 1
                left_mode = mode
                left_mv = MotionVector(mv_pred.dx + mvd[0], mv_pred.dy + mvd[1])
            else:
                n_intra += 1
                left_mode = mode

    unit = FrameUnit(frame_type, list(regions), gen_map, payloads)
    return _FrameResult(unit, recon, dist_total, n_intra, n_inter, n_gen)


@dataclass
class _PeriodPass:
    data: bytes
    frame_bits: list[FrameBits]
    param_bits: int
    results: list[_FrameResult]

    @property
    def total_bits(self) -> int:
        return len(self.data) * 8

    @property
    def distortion(self) -> int:
        return sum(r.distortion for r in self.results)

    def j(self, lam: float) -> float:
        return self.distortion + lam * self.total_bits


def _encode_period(
    period_frames: list[Frame], start: int, regions_per_frame: list[list[RegionSpec]],
    qparams: QuantizedGnnParams | None, ctx: SetContext | None,
    config: SequenceConfig, lam: float, cols: int, rows: int,
) -> _PeriodPass:
    w = BitWriter()
    param_bits = write_param_set(w, qparams) if qparams is not None else 0
    frame_bits = []
    results = []
    prev_recon: Frame | None = None
    for offset, source in enumerate(period_frames):
        frame_idx = start + offset
        frame_type = "I" if offset == 0 else "P"
        regions = regions_per_frame[offset] if qparams is not None else []
        res = _encode_frame(
            source, prev_recon, frame_idx, frame_type, regions,
            qparams, ctx, config.qp, lam, config.search_range, cols, rows,
        )
        frame_bits.append(write_frame(w, res.unit, cols, rows))
        results.append(res)
        prev_recon = res.recon
    return _PeriodPass(w.to_bytes(), frame_bits, param_bits, results)


@dataclass
class EncodeRow:
    """One frame's line in the encode report CSV."""

    frame: int
    type: str
    psnr_y: float
    psnr_cb: float
    psnr_cr: float
    bits_header: int
    bits_params: int
    bits_modes: int
    bits_mv: int
    bits_residual: int
    n_gen_blocks: int


CSV_COLUMNS = (
    "frame", "type", "psnr_y", "psnr_cb", "psnr_cr", "bits_header",
    "bits_params", "bits_modes", "bits_mv", "bits_residual", "n_gen_blocks",
)


@dataclass
class EncodeReport:
    rows: list[EncodeRow]
    total_bits: int
    total_distortion: int
    rd_cost: float
    mode_histogram: dict[str, int]
    recon_frames: list[Frame]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow([
                r.frame, r.type, f"{r.psnr_y:.4f}", f"{r.psnr_cb:.4f}",
                f"{r.psnr_cr:.4f}", r.bits_header, r.bits_params, r.bits_modes,
                r.bits_mv, r.bits_residual, r.n_gen_blocks,
            ])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            f.write(self.to_csv())


def _period_global_motion(frames: list[Frame], search_range: int) -> GlobalMotion:
    """Median per-frame motion across the period, measured on source frames.

    Reconstructions of future frames do not exist at planning time, so the
    estimate runs source-against-source; it only steers region placement.
    """
    dxs: list[int] = []
    dys: list[int] = []
    for offset in range(1, len(frames)):
        gm = estimate_global_motion(frames[offset], frames[offset - 1], search_range)
        dxs.append(gm.dx)
        dys.append(gm.dy)
    if not dxs:
        return GlobalMotion(0, 0)
    return GlobalMotion(_median_toward_zero(dxs), _median_toward_zero(dys))


def encode_sequence(
    frames: list[Frame], config: SequenceConfig,
    train_cfg: TrainConfig | None = None, zoom_hint: str = "none",
) -> tuple[bytes, EncodeReport]:
    """Encode a sequence; returns the stream and a per-frame report.

    The report's reconstruction frames are exactly what a decoder produces
    for the returned stream.
    """
    config.validate()
    if zoom_hint not in ZOOM_HINTS:
        raise ValueError(f"zoom hint must be one of {ZOOM_HINTS}")
    if config.gnn_enabled:
        check_architecture(config.gnn_arch)
    if len(frames) != config.frame_count:
        raise ValueError(
            f"config promises {config.frame_count} frames, got {len(frames)}"
        )
    for fr in frames:
        if (fr.display_width, fr.display_height) != (config.width, config.height):
            raise ValueError("frame display size does not match config")
    train_cfg = train_cfg or TrainConfig()
    lam = rd_lambda(config.qp)
    cols, rows = block_grid_dims(config.width, config.height)
    header = StreamHeader(
        config.width, config.height, config.frame_count, config.qp,
        config.gnn_enabled, config.gnn_interval,
    )
    w = BitWriter()
    header_bits = write_header(w, header)

    rows_out: list[EncodeRow] = []
    recons: list[Frame] = []
    hist = {"intra": 0, "inter": 0, "gen": 0}
    total_dist = 0

    for start in range(0, config.frame_count, config.gnn_interval):
        period = frames[start:start + config.gnn_interval]
        span = len(period)
        chosen: _PeriodPass | None = None
        if config.gnn_enabled:
            gm = _period_global_motion(period, config.search_range)
            ctx = SetContext(cols, rows, start, span)
            regions_per_frame = [
                select_generation_regions(gm, cols, rows, offset, zoom_hint)
                for offset in range(span)
            ]
            qparams, _ = train_param_set(
                period, start, regions_per_frame, ctx, config.gnn_arch, train_cfg
            )
            if qparams is not None:
                with_gnn = _encode_period(
                    period, start, regions_per_frame, qparams, ctx,
                    config, lam, cols, rows,
                )
                without = _encode_period(
                    period, start, [[] for _ in period], None, None,
                    config, lam, cols, rows,
                )
                # Never-worse fallback: strict improvement keeps the network.
                chosen = with_gnn if with_gnn.j(lam) < without.j(lam) else without
        if chosen is None:
            chosen = _encode_period(
                period, start, [[] for _ in period], None, None,
                config, lam, cols, rows,
            )

        w.write_bytes(chosen.data)
        for offset, (res, fb) in enumerate(zip(chosen.results, chosen.frame_bits)):
            frame_idx = start + offset
            src = frames[offset + start]
            dw, dh = src.display_width, src.display_height
            cw, ch = (dw + 1) // 2, (dh + 1) // 2
            rows_out.append(EncodeRow(
                frame=frame_idx,
                type="I" if offset == 0 else "P",
                psnr_y=plane_psnr(src.y[:dh, :dw], res.recon.y[:dh, :dw]),
                psnr_cb=plane_psnr(src.cb[:ch, :cw], res.recon.cb[:ch, :cw]),
                psnr_cr=plane_psnr(src.cr[:ch, :cw], res.recon.cr[:ch, :cw]),
                bits_header=header_bits if frame_idx == 0 else 0,
                bits_params=chosen.param_bits if offset == 0 else 0,
                bits_modes=fb.modes,
                bits_mv=fb.mvs,
                bits_residual=fb.residuals,
                n_gen_blocks=res.n_gen,
            ))
            recons.append(res.recon)
            hist["intra"] += res.n_intra
            hist["inter"] += res.n_inter
            hist["gen"] += res.n_gen
            total_dist += res.distortion

    data = w.to_bytes()
    report = EncodeReport(
        rows=rows_out,
        total_bits=len(data) * 8,
        total_distortion=total_dist,
        rd_cost=total_dist + lam * len(data) * 8,
        mode_histogram=hist,
        recon_frames=recons,
    )
    return data, report
