"""Binary container for named float32 tensors.

Layout: magic "PCNW", format version u32, tensor count u32, then for each
tensor: name length u16 + UTF-8 name, ndim u8, dims u32 each, dtype code u8
(0 = f32), raw little-endian payload.  A CRC32 of everything before it
closes the file.  Writes are atomic (temp file + rename); round trips are
bit-exact.
"""

from __future__ import annotations

import os
import struct
import tempfile
import zlib

import numpy as np

MAGIC = b"PCNW"
VERSION = 1
DTYPE_F32 = 0


class WeightsError(ValueError):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def save_tensors(path, tensors):
    """Write a dict name -> ndarray (cast to f32) to ``path`` atomically."""
    chunks = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype=np.float32)
        nb = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(nb)))
        chunks.append(nb)
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(struct.pack("<B", DTYPE_F32))
        chunks.append(arr.astype("<f4").tobytes())
    blob = b"".join(chunks)
    blob += struct.pack("<I", zlib.crc32(blob) & 0xFFFFFFFF)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".pcnw.tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_tensors(path):
    """Read a container back into a dict name -> float32 ndarray."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 12 or blob[:4] != MAGIC:
        raise WeightsError("magic", f"{path}: not a PCNW weights file")
    body, crc_bytes = blob[:-4], blob[-4:]
    if len(blob) < 16 or struct.unpack("<I", crc_bytes)[0] != \
            (zlib.crc32(body) & 0xFFFFFFFF):
        raise WeightsError("crc", f"{path}: CRC mismatch (truncated or corrupt)")
    version, count = struct.unpack_from("<II", body, 4)
    if version != VERSION:
        raise WeightsError("version", f"{path}: unsupported version {version}")
    off = 12
    tensors = {}
    try:
        for _ in range(count):
            (nlen,) = struct.unpack_from("<H", body, off)
            off += 2
            name = body[off:off + nlen].decode("utf-8")
            off += nlen
            (ndim,) = struct.unpack_from("<B", body, off)
            off += 1
            dims = struct.unpack_from(f"<{ndim}I", body, off)
            off += 4 * ndim
            (dtype,) = struct.unpack_from("<B", body, off)
            off += 1
            if dtype != DTYPE_F32:
                raise WeightsError("dtype", f"{path}: unknown dtype code {dtype}")
            size = int(np.prod(dims, dtype=np.int64)) * 4
            arr = np.frombuffer(body[off:off + size], dtype="<f4")
            if arr.size * 4 != size:
                raise WeightsError("truncated", f"{path}: payload truncated")
            off += size
            tensors[name] = arr.reshape(dims).astype(np.float32)
    except struct.error as e:
        raise WeightsError("truncated", f"{path}: {e}") from e
    return tensors


def save_model(path, model):
    """Persist a UNet: parameters plus a config block."""
    cfg = model.config
    meta = {
        "config.depth": np.array([cfg.depth], np.float32),
        "config.encoder_channels": np.array(cfg.encoder_channels, np.float32),
        "config.kernel_sizes": np.array(cfg.kernel_sizes, np.float32),
        "config.leaky_slope": np.array([cfg.leaky_slope], np.float32),
        "config.flags": np.array(
            [float(cfg.linear_top_both), float(cfg.decoder_pconv)], np.float32),
    }
    save_tensors(path, {**meta, **model.params})


def load_model(path):
    from .unet import UNetConfig, UNetModel
    tensors = load_tensors(path)
    try:
        flags = tensors.pop("config.flags")
        cfg = UNetConfig(
            depth=int(tensors.pop("config.depth")[0]),
            encoder_channels=tuple(
                int(v) for v in tensors.pop("config.encoder_channels")),
            kernel_sizes=tuple(
                int(v) for v in tensors.pop("config.kernel_sizes")),
            leaky_slope=float(tensors.pop("config.leaky_slope")[0]),
            linear_top_both=bool(flags[0]),
            decoder_pconv=bool(flags[1]),
        )
    except KeyError as e:
        raise WeightsError("names", f"{path}: missing config entry {e}") from e
    expected = {f"{n}.{s}" for n, _, _, _ in cfg.layer_plan()
                for s in ("weight", "bias")}
    unexpected = set(tensors) - expected
    if unexpected:
        raise WeightsError(
            "names", f"{path}: unexpected tensor names {sorted(unexpected)}")
    missing = expected - set(tensors)
    if missing:
        raise WeightsError(
            "names", f"{path}: missing tensors {sorted(missing)}")
    return UNetModel(cfg, params=tensors)
