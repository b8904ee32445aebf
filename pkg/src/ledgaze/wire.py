"""Bit-exact serial frame format for capture vectors.

Layout (little-endian, 7 + 2M bytes total):

    offset  size  field
    0       1     sync byte 0xAA (doubles as format version marker)
    1       1     channel count M (1..255)
    2       4     timestamp, unsigned microseconds, wraps at 2^32
    6       2*M   readings, u16 each, 10-bit value in the low bits
    6+2*M   1     checksum: XOR of all preceding bytes

The decoder is an incremental state machine: it scans to the next sync
byte, validates length, reserved bits, and checksum, and on any failure
discards a single byte and resynchronizes. Corruption therefore costs
frames but never produces a mis-decoded one.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .core import ADC_MAX, SensorFrame, WireError

SYNC = 0xAA
HEADER_LEN = 6  # sync + count + timestamp
TIMESTAMP_MOD = 1 << 32


def encode(frame: SensorFrame) -> bytes:
    """Serialize one frame to its wire representation."""
    m = frame.channel_count
    if m > 255:
        raise WireError(f"channel count {m} does not fit in one byte")
    for i, v in enumerate(frame.channels):
        if not 0 <= v <= ADC_MAX:
            raise WireError(f"channel {i} reading {v} outside [0, {ADC_MAX}]")
    body = struct.pack(
        f"<BBI{m}H", SYNC, m, frame.timestamp_us % TIMESTAMP_MOD, *frame.channels
    )
    checksum = 0
    for b in body:
        checksum ^= b
    return body + bytes([checksum])


def frame_length(channel_count: int) -> int:
    return HEADER_LEN + 2 * channel_count + 1


@dataclass
class DecodeStats:
    frames_decoded: int = 0
    bytes_skipped: int = 0
    checksum_failures: int = 0
    invalid_fields: int = 0
    resyncs: int = 0

    def as_dict(self) -> dict:
        return {
            "frames_decoded": self.frames_decoded,
            "bytes_skipped": self.bytes_skipped,
            "checksum_failures": self.checksum_failures,
            "invalid_fields": self.invalid_fields,
            "resyncs": self.resyncs,
        }


@dataclass
class StreamDecoder:
    """Incremental decoder; feed() may be called with arbitrary chunks."""

    stats: DecodeStats = field(default_factory=DecodeStats)
    _buf: bytearray = field(default_factory=bytearray)

    def feed(self, data: bytes) -> list[SensorFrame]:
        """Consume bytes, returning every complete valid frame found."""
        self._buf.extend(data)
        frames = []
        while True:
            frame = self._scan_one()
            if frame is None:
                break
            frames.append(frame)
        return frames

    def finish(self) -> list[SensorFrame]:
        """Flush at end of stream.

        A sync byte inside garbage can fake a frame header whose claimed
        length runs past the end of the data; feed() would keep waiting for
        bytes that never come. Once the stream is known to be over, such
        candidates are abandoned one byte at a time so any real frames
        behind them are still recovered.
        """
        frames = []
        while len(self._buf) >= frame_length(1):
            frame = self._scan_one()
            if frame is not None:
                frames.append(frame)
            else:
                self._skip(1, resync=True)
        if self._buf:
            self._skip(len(self._buf))
        return frames

    def _skip(self, n: int, resync: bool = False) -> None:
        del self._buf[:n]
        self.stats.bytes_skipped += n
        if resync:
            self.stats.resyncs += 1

    def _scan_one(self) -> SensorFrame | None:
        buf = self._buf
        while True:
            # Align to the next sync byte.
            idx = buf.find(bytes([SYNC]))
            if idx < 0:
                if buf:
                    self._skip(len(buf))
                return None
            if idx > 0:
                self._skip(idx)
            if len(buf) < 2:
                return None  # need the count byte
            m = buf[1]
            if m == 0:
                self.stats.invalid_fields += 1
                self._skip(1, resync=True)
                continue
            need = frame_length(m)
            if len(buf) < need:
                return None  # wait for more data
            candidate = bytes(buf[:need])
            checksum = 0
            for b in candidate[:-1]:
                checksum ^= b
            if checksum != candidate[-1]:
                self.stats.checksum_failures += 1
                self._skip(1, resync=True)
                continue
            ts, = struct.unpack_from("<I", candidate, 2)
            readings = struct.unpack_from(f"<{m}H", candidate, HEADER_LEN)
            if any(r > ADC_MAX for r in readings):
                self.stats.invalid_fields += 1
                self._skip(1, resync=True)
                continue
            del buf[:need]
            self.stats.frames_decoded += 1
            return SensorFrame(timestamp_us=ts, channels=tuple(int(r) for r in readings))


def decode(stream: bytes) -> tuple[list[SensorFrame], DecodeStats]:
    """One-shot decode of a byte sequence (may start mid-frame)."""
    dec = StreamDecoder()
    frames = dec.feed(stream)
    frames.extend(dec.finish())
    return frames, dec.stats


def unwrap_timestamp(raw_us: int, last_full_us: int | None) -> int:
    """Monotonic reconstruction of a 32-bit wrapping timestamp."""
    if last_full_us is None:
        return raw_us
    base = last_full_us - (last_full_us % TIMESTAMP_MOD)
    candidate = base + raw_us
    while candidate < last_full_us:
        candidate += TIMESTAMP_MOD
    return candidate
