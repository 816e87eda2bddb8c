"""Bit-level I/O and the variable-length codes the stream is built from.

Everything in the stream reduces to three primitives: raw fixed-width bits
(MSB first), unsigned exponential Golomb codes for counts and magnitudes,
and a signed mapping on top for differences. Small values get short codes;
the code is prefix-free so no separators are needed.
"""

import numpy as np

from nbv.entropy import (
    BitReader,
    BitWriter,
    se_decode,
    se_encode,
    ue_decode,
    ue_encode,
)
from nbv.residual import code_coeffs, decode_coeffs


def codeword(write, value) -> str:
    w = BitWriter()
    write(w, value)
    bits = w.bit_position
    return format(int.from_bytes(w.to_bytes(), "big") >> (8 * len(w.to_bytes()) - bits),
                  f"0{bits}b")


print("unsigned codes")
for v in range(8):
    print(f"  ue({v}) = {codeword(ue_encode, v)}")

print("\nsigned codes (zigzag of the unsigned code)")
for v in (0, 1, -1, 2, -2, 3):
    print(f"  se({v:2d}) = {codeword(se_encode, v)}")

# a mixed stream reads back in order with no markers between values
w = BitWriter()
w.write_bits(0b101, 3)
ue_encode(w, 17)
se_encode(w, -4)
w.byte_align()
data = w.to_bytes()
r = BitReader(data)
print(f"\nmixed stream: {data.hex()} "
      f"-> {r.read_bits(3):03b}, {ue_decode(r)}, {se_decode(r)}")

# coefficient tiles use run-level coding in scan order: a count, then
# (zero run, nonzero level) pairs; an all-zero tile costs a single bit
tile = np.zeros(64, dtype=np.int32)
tile[0], tile[1], tile[8] = 21, -3, 5

w = BitWriter()
bits = code_coeffs(w, tile)
print(f"\ntile with 3 nonzero coefficients: {bits} bits")

w2 = BitWriter()
print(f"all-zero tile: {code_coeffs(w2, np.zeros(64, dtype=np.int32))} bit")

back = decode_coeffs(BitReader(w.to_bytes()))
print(f"round trip exact: {np.array_equal(back, tile)}")
