"""Frames, the block grid, and raw YUV files.

A frame is three uint8 planes: full-resolution luma plus half-resolution
chroma (4:2:0). The codec works on 32x32 luma blocks, each paired with the
two 16x16 chroma blocks covering the same area, so every block carries
32*32 + 2*16*16 = 1536 samples. Frames whose dimensions are not multiples
of 32 are padded by edge replication; the display size is remembered so
files round-trip at the original resolution.
"""

import os
import tempfile

from nbv.core import (
    BLOCK,
    SAMPLES_PER_BLOCK,
    BlockCoord,
    block_grid_dims,
    extract_block,
    insert_block,
    read_yuv,
    write_yuv,
)
from nbv.tools import synth_sequence

frames = synth_sequence("pan", 96, 64, 4, velocity=(4, 0), seed=1)
f = frames[0]
print(f"synthetic pan frame: luma {f.y.shape}, chroma {f.cb.shape}")
print(f"display size {f.display_width}x{f.display_height}, "
      f"grid {block_grid_dims(96, 64)} blocks")
print(f"samples per block: {SAMPLES_PER_BLOCK}")

# a 100x50 request pads up to 128x64 but keeps display 100x50
w, h = 100, 50
cols, rows = block_grid_dims(w, h)
print(f"\n{w}x{h} needs a {cols}x{rows} grid, padded to {cols*BLOCK}x{rows*BLOCK}")

blk = extract_block(f, BlockCoord(1, 1))
print(f"\nblock (1,1): y mean {blk.y.mean():.1f}, cb mean {blk.cb.mean():.1f}")

# blocks go back exactly where they came from
g = frames[1]
insert_block(g, BlockCoord(1, 1), blk)
print("inserted block (1,1) from frame 0 into frame 1")

path = os.path.join(tempfile.mkdtemp(), "pan.yuv")
write_yuv(path, frames)
print(f"\nwrote {len(frames)} frames, {os.path.getsize(path)} bytes "
      f"({os.path.getsize(path) // len(frames)} per frame)")

back = read_yuv(path, 96, 64, len(frames))
same = all((a.y == b.y).all() and (a.cb == b.cb).all() and (a.cr == b.cr).all()
           for a, b in zip(frames, back))
print(f"read back {len(back)} frames, bit-exact: {same}")
