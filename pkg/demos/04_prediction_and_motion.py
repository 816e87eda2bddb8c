"""Intra prediction from neighbors and full-search motion estimation.

Intra blocks are built from already-decoded pixels in the same frame: the
mean of the top row and left column (DC), or replication of one edge
(horizontal/vertical). Inter blocks copy a 32x32 window from the previous
reconstruction at an offset found by exhaustive SAD search; ties prefer
short vectors, then (dy, dx) raster order, so the search is fully
deterministic. Chroma reuses the luma vector halved toward zero.
"""

import numpy as np

from nbv.core import BlockCoord, extract_block
from nbv.prediction import (
    IntraMode,
    MotionVector,
    intra_predict,
    motion_compensate,
    motion_search,
)
from nbv.tools import synth_sequence

frames = synth_sequence("pan", 128, 96, 2, velocity=(4, 0), seed=5)
prev, cur = frames[0], frames[1]

# intra modes need only the current reconstruction, here the source itself
c = BlockCoord(1, 1)
dc = intra_predict(cur, c, IntraMode.DC)
h = intra_predict(cur, c, IntraMode.HORIZONTAL)
v = intra_predict(cur, c, IntraMode.VERTICAL)
print(f"intra at ({c.bx},{c.by}): DC fills luma with {dc.y[0, 0]}, "
      f"H rows constant: {bool((h.y == h.y[:, :1]).all())}, "
      f"V cols constant: {bool((v.y == v.y[:1, :]).all())}")

# the pan moved content by 4 px, so the best match sits at dx = +4
blk = extract_block(cur, c)
mv, sad = motion_search(blk, prev, c, search_range=8)
print(f"\nmotion search at ({c.bx},{c.by}): mv ({mv.dx},{mv.dy}), sad {sad}")

pred = motion_compensate(prev, c, mv)
print(f"compensated luma SAD check: "
      f"{int(np.abs(pred.y.astype(int) - blk.y.astype(int)).sum())}")

# out-of-frame offsets clamp to the frame edge instead of failing
far = motion_compensate(prev, BlockCoord(0, 0), MotionVector(-100, -100))
print(f"\nfar off-frame vector clamps: corner pixel {far.y[0, 0]} "
      f"== reference corner {prev.y[0, 0]}")

# identical content always picks the zero vector
blk0 = extract_block(prev, c)
mv0, sad0 = motion_search(blk0, prev, c, search_range=8)
print(f"identical frames: mv ({mv0.dx},{mv0.dy}), sad {sad0}")
