"""Self-describing binary container: text manifest + checksummed float64 blocks.

Layout (all integers decimal ASCII):

    <MAGIC> <version>\n
    <manifest-nbytes>\n
    <manifest JSON, UTF-8>\n
    <block 0 bytes><block 1 bytes>...

Each block is a little-endian float64 array; its name, shape, byte length
and CRC-32 live in the manifest under ``blocks``. Writing then reading a
file reproduces every array bitwise. Case files and model checkpoints are
both stored this way (different magics).
"""

from __future__ import annotations

import json
import zlib

import numpy as np

from .errors import FormatError

_ENCODING = "utf-8"


def write_blockfile(path, magic: str, version: int, manifest: dict,
                    blocks: dict[str, np.ndarray]) -> None:
    """Write ``manifest`` plus named float64 ``blocks`` to ``path``."""
    payloads = []
    index = []
    for name, arr in blocks.items():
        arr = np.asarray(arr, dtype="<f8")
        raw = np.ascontiguousarray(arr).tobytes()
        index.append({
            "name": name,
            "shape": list(arr.shape),
            "nbytes": len(raw),
            "crc32": zlib.crc32(raw) & 0xFFFFFFFF,
        })
        payloads.append(raw)

    doc = dict(manifest)
    doc["blocks"] = index
    body = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode(_ENCODING)
    with open(path, "wb") as fh:
        fh.write(f"{magic} {version}\n".encode(_ENCODING))
        fh.write(f"{len(body)}\n".encode(_ENCODING))
        fh.write(body)
        fh.write(b"\n")
        for raw in payloads:
            fh.write(raw)


def read_blockfile(path, magic: str, version: int) -> tuple[dict, dict[str, np.ndarray]]:
    """Read a container written by :func:`write_blockfile`.

    Raises FormatError on a wrong magic, unsupported version, truncated
    block, or CRC mismatch.
    """
    with open(path, "rb") as fh:
        header = fh.readline().decode(_ENCODING, errors="replace").strip()
        parts = header.split()
        if len(parts) != 2 or parts[0] != magic:
            raise FormatError(f"{path}: not a {magic} file (header {header!r})")
        if parts[1] != str(version):
            raise FormatError(
                f"{path}: unsupported {magic} version {parts[1]} (reader supports {version})")
        try:
            nbytes = int(fh.readline().strip())
        except ValueError as exc:
            raise FormatError(f"{path}: malformed manifest length") from exc
        body = fh.read(nbytes)
        if len(body) != nbytes:
            raise FormatError(f"{path}: truncated manifest")
        try:
            manifest = json.loads(body.decode(_ENCODING))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: manifest is not valid JSON: {exc}") from exc
        fh.readline()  # separator

        blocks: dict[str, np.ndarray] = {}
        for entry in manifest.get("blocks", []):
            raw = fh.read(entry["nbytes"])
            if len(raw) != entry["nbytes"]:
                raise FormatError(
                    f"{path}: block {entry['name']!r} truncated "
                    f"({len(raw)} of {entry['nbytes']} bytes)")
            crc = zlib.crc32(raw) & 0xFFFFFFFF
            if crc != entry["crc32"]:
                raise FormatError(
                    f"{path}: block {entry['name']!r} failed CRC-32 check")
            arr = np.frombuffer(raw, dtype="<f8").reshape(entry["shape"])
            blocks[entry["name"]] = arr.copy()  # writable, owned
    return manifest, blocks
