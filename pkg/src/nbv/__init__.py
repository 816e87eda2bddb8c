"""Block-based hybrid video codec with an overfit neural block generator.

The codec codes 32x32 luma blocks (plus co-located 16x16 chroma) with intra
prediction, motion-compensated inter prediction, or a small fully-connected
network that is overfit per keyframe period and carried in the bitstream.
All three block kinds share one transform-coded residual path.
"""

from .core import (
    BLOCK,
    Block32,
    BlockCoord,
    Frame,
    SequenceConfig,
    block_grid_dims,
    extract_block,
    insert_block,
    make_frame,
    read_yuv,
    write_yuv,
)
from .entropy import BitReader, BitWriter, StreamError
from .encoder import encode_sequence
from .decoder import decode_sequence

__all__ = [
    "BLOCK",
    "BitReader",
    "BitWriter",
    "Block32",
    "BlockCoord",
    "Frame",
    "SequenceConfig",
    "StreamError",
    "block_grid_dims",
    "decode_sequence",
    "encode_sequence",
    "extract_block",
    "insert_block",
    "make_frame",
    "read_yuv",
    "write_yuv",
]
