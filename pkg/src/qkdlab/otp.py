"""One-time-pad messaging with the distilled key.

Bits are numpy uint8 arrays.  Text encodes as 8-bit bytes, most significant
bit first; hex digits map to 4-bit groups the same way.  Encryption is
bitwise XOR against a strict key prefix: a key shorter than the data is
refused outright (no reuse, no padding), and a longer key is consumed
exactly ``len(data)`` bits from the front.
"""

from __future__ import annotations

import numpy as np


def as_bits(bits) -> np.ndarray:
    """Coerce a bit sequence ('0101', [0,1,...] or array) to uint8 bits."""
    if isinstance(bits, str):
        bits = [int(c) for c in bits]
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1 or np.any(arr > 1):
        raise ValueError("bits must be a flat sequence of 0s and 1s")
    return arr


def text_to_bits(text: str) -> np.ndarray:
    return np.unpackbits(np.frombuffer(text.encode("utf-8"), dtype=np.uint8))


def bits_to_text(bits) -> str:
    bits = as_bits(bits)
    if len(bits) % 8:
        raise ValueError("text decoding needs a multiple of 8 bits")
    return np.packbits(bits).tobytes().decode("utf-8")


def hex_to_bits(hex_string: str) -> np.ndarray:
    nibbles = [int(c, 16) for c in hex_string.strip().lower()]
    out = np.zeros(4 * len(nibbles), dtype=np.uint8)
    for i, v in enumerate(nibbles):
        for j in range(4):
            out[4 * i + j] = (v >> (3 - j)) & 1
    return out


def bits_to_hex(bits) -> str:
    """Lowercase hex; the tail is zero-padded to a whole nibble, so callers
    that need exact lengths should record the bit count separately."""
    bits = as_bits(bits)
    if len(bits) == 0:
        return ""
    pad = (-len(bits)) % 4
    padded = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)])
    return "".join(f"{int(v):x}" for v in padded.reshape(-1, 4) @ (8, 4, 2, 1))


def encrypt(data, key) -> np.ndarray:
    """XOR the data against the first ``len(data)`` key bits."""
    data = as_bits(data)
    key = as_bits(key)
    if len(key) < len(data):
        raise ValueError(
            f"key too short ({len(key)} bits) for {len(data)} data bits: "
            "a one-time pad is never reused or padded")
    return data ^ key[:len(data)]


def decrypt(cipher, key) -> np.ndarray:
    """XOR is an involution, so decryption is encryption."""
    return encrypt(cipher, key)


class KeyStream:
    """Strict-prefix key consumption across multiple messages.

    Each encrypt/decrypt call uses the next ``len(data)`` unused key bits and
    advances the offset, so one session key can protect several messages
    without ever reusing pad material.
    """

    def __init__(self, key):
        self.key = as_bits(key)
        self.offset = 0

    @property
    def remaining(self) -> int:
        return len(self.key) - self.offset

    def take(self, n_bits: int) -> np.ndarray:
        if n_bits > self.remaining:
            raise ValueError(
                f"key exhausted: {n_bits} bits requested, {self.remaining} left")
        chunk = self.key[self.offset:self.offset + n_bits]
        self.offset += n_bits
        return chunk

    def encrypt(self, data) -> np.ndarray:
        data = as_bits(data)
        return data ^ self.take(len(data))

    decrypt = encrypt
