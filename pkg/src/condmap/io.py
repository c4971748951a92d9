"""Serialisation of trees, mobiles, maps and process traces.

JSON is the default.  The binary format is a short header followed by
LEB128 varints (signed values zigzag-encoded):

``b"CMAP" | version:u8 | kind:u8 | fields...``

where the fields are, per kind,

* tree: ``n_vertices, outdeg...``
* mobile: ``n_vertices, outdeg..., epsilon+1, white labels (zigzag)...``
* map: ``n_arcs, n_vertices, root_arc, rho, twin_is_xor, next..., vertex_of...[, twin...]``
* trace: ``n_values, index_scale, amplitude_scale (as float64 bytes), values (zigzag)...``
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .bijections import Mobile
from .labels import ProcessTrace
from .planarmap import SCHEMA_VERSION, PlanarMap
from .trees import PlanarTree

__all__ = ["dumps_json", "loads_json", "dumps_bin", "loads_bin", "encode_varints",
           "decode_varints", "FormatError"]

MAGIC = b"CMAP"
KINDS = {"tree": 1, "mobile": 2, "map": 3, "trace": 4}


class FormatError(ValueError):
    """Malformed or unsupported serialised record."""


def _kind(obj) -> str:
    for cls, name in ((Mobile, "mobile"), (PlanarMap, "map"), (PlanarTree, "tree"),
                      (ProcessTrace, "trace")):
        if isinstance(obj, cls):
            return name
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _trace_dict(tr: ProcessTrace) -> dict:
    return {"schema_version": SCHEMA_VERSION, "kind": tr.kind, "index_scale": tr.index_scale,
            "amplitude_scale": tr.amplitude_scale, "values": np.asarray(tr.values).tolist()}


def dumps_json(obj) -> str:
    kind = _kind(obj)
    payload = _trace_dict(obj) if kind == "trace" else obj.to_dict()
    payload = {**payload, "type": kind}
    payload.setdefault("schema_version", SCHEMA_VERSION)
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def loads_json(text: str):
    d = json.loads(text)
    if d.get("schema_version") != SCHEMA_VERSION:
        raise FormatError(f"unsupported schema_version {d.get('schema_version')!r}")
    kind = d.get("type")
    if kind == "tree":
        return PlanarTree.from_dict(d)
    if kind == "mobile":
        return Mobile.from_dict(d)
    if kind == "map":
        return PlanarMap.from_dict(d)
    if kind == "trace":
        return ProcessTrace(np.asarray(d["values"]), int(d["index_scale"]),
                            float(d["amplitude_scale"]), d["kind"])
    raise FormatError(f"unknown record type {kind!r}")


# -- varints ------------------------------------------------------------------


def _zigzag(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    return ((x << 1) ^ (x >> 63)).astype(np.uint64)


def _unzigzag(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=np.uint64)
    return ((u >> np.uint64(1)).astype(np.int64)) ^ -((u & np.uint64(1)).astype(np.int64))


def encode_varints(values) -> bytes:
    """LEB128 encoding of non-negative integers."""
    v = np.asarray(values, dtype=np.uint64).ravel()
    if v.size == 0:
        return b""
    out = bytearray()
    for x in v.tolist():
        while x >= 0x80:
            out.append((x & 0x7F) | 0x80)
            x >>= 7
        out.append(x)
    return bytes(out)


def decode_varints(buf: bytes, count: int, pos: int = 0) -> tuple[np.ndarray, int]:
    out = np.empty(count, dtype=np.uint64)
    for k in range(count):
        x = shift = 0
        while True:
            if pos >= len(buf):
                raise FormatError("truncated varint stream")
            b = buf[pos]
            pos += 1
            x |= (b & 0x7F) << shift
            shift += 7
            if b < 0x80:
                break
        out[k] = x
    return out, pos


# -- binary records -----------------------------------------------------------


def dumps_bin(obj) -> bytes:
    kind = _kind(obj)
    head = MAGIC + bytes([SCHEMA_VERSION, KINDS[kind]])
    if kind == "tree":
        return head + encode_varints([obj.n_vertices]) + encode_varints(obj.outdeg)
    if kind == "mobile":
        t = obj.tree
        return (head + encode_varints([t.n_vertices]) + encode_varints(t.outdeg)
                + encode_varints([obj.epsilon + 1]) + encode_varints(_zigzag(obj.white_labels())))
    if kind == "map":
        xor = bool(np.array_equal(obj.twin, np.arange(obj.n_arcs) ^ 1))
        body = encode_varints([obj.n_arcs, obj.n_vertices, obj.root_arc, obj.rho, int(xor)])
        body += encode_varints(obj.next_around_vertex) + encode_varints(obj.vertex_of)
        if not xor:
            body += encode_varints(obj.twin)
        return head + body
    vals = np.asarray(obj.values)
    if not np.issubdtype(vals.dtype, np.integer):
        raise TypeError("binary traces need integer values")
    return (head + encode_varints([vals.size, obj.index_scale])
            + struct.pack("<d", obj.amplitude_scale) + obj.kind.encode().ljust(8, b"\0")
            + encode_varints(_zigzag(vals)))


def loads_bin(buf: bytes):
    if buf[:4] != MAGIC:
        raise FormatError("bad magic")
    if buf[4] != SCHEMA_VERSION:
        raise FormatError(f"unsupported schema_version {buf[4]}")
    kind = {v: k for k, v in KINDS.items()}.get(buf[5])
    pos = 6
    if kind in ("tree", "mobile"):
        (nv,), pos = decode_varints(buf, 1, pos)
        od, pos = decode_varints(buf, int(nv), pos)
        t = PlanarTree(od.astype(np.int64))
        if kind == "tree":
            return t
        (e,), pos = decode_varints(buf, 1, pos)
        wl, pos = decode_varints(buf, int(t.is_white.sum()), pos)
        lab = np.zeros(t.n_vertices, dtype=np.int64)
        lab[t.is_white] = _unzigzag(wl)
        return Mobile(t, lab, int(e) - 1)
    if kind == "map":
        hdr, pos = decode_varints(buf, 5, pos)
        na, nv, ra, rho, xor = (int(x) for x in hdr)
        nxt, pos = decode_varints(buf, na, pos)
        vo, pos = decode_varints(buf, na, pos)
        twin = None
        if not xor:
            twin, pos = decode_varints(buf, na, pos)
            twin = twin.astype(np.int64)
        return PlanarMap(nxt.astype(np.int64), vo.astype(np.int64), ra, rho, twin=twin,
                         n_vertices=nv)
    if kind == "trace":
        hdr, pos = decode_varints(buf, 2, pos)
        (amp,) = struct.unpack_from("<d", buf, pos)
        name = buf[pos + 8: pos + 16].rstrip(b"\0").decode()
        vals, pos = decode_varints(buf, int(hdr[0]), pos + 16)
        return ProcessTrace(_unzigzag(vals), int(hdr[1]), amp, name)
    raise FormatError(f"unknown record kind byte {buf[5]}")
