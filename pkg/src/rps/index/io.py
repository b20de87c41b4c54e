"""Binary save/load for built indexes.

Layout (all integers little-endian):

    magic   8 bytes  b"RPSIDX01"
    version u8       currently 1
    backend u8       0 exact, 1 hnsw, 2 partitioned
    dim     u32
    count   u32
    ids     count x (u16 length + utf-8 bytes)
    vectors count*dim float64   (verbatim rows, not the unit copies)
    backend-specific section (see _write_* / _read_*)

Vectors are stored as float64 so a save/load round trip reproduces
scores bit-for-bit. Every read is length-checked; a short file or
trailing garbage raises CorruptFile rather than producing a broken
index.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import CorruptFile, IoFailure
from .core import Backend, CorpusIndex, HnswParams, PartitionedParams
from .exact import ExactIndex
from .hnsw import HnswIndex
from .partitioned import PartitionedIndex

MAGIC = b"RPSIDX01"
FORMAT_VERSION = 1

_BACKEND_TAGS = {Backend.EXACT: 0, Backend.HNSW: 1, Backend.PARTITIONED: 2}
_TAG_BACKENDS = {tag: backend for backend, tag in _BACKEND_TAGS.items()}


class _Reader:
    """Cursor over an in-memory buffer that refuses to read past the end."""

    def __init__(self, data: bytes, path: str):
        self.data = data
        self.off = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise CorruptFile(f"{self.path}: truncated (needed {n} bytes at offset {self.off})")
        chunk = self.data[self.off:self.off + n]
        self.off += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def i64(self) -> int:
        return struct.unpack("<q", self.take(8))[0]

    def f64_array(self, count: int) -> np.ndarray:
        raw = self.take(count * 8)
        return np.frombuffer(raw, dtype="<f8", count=count).astype(np.float64)

    def u32_array(self, count: int) -> np.ndarray:
        raw = self.take(count * 4)
        return np.frombuffer(raw, dtype="<u4", count=count).astype(np.int64)

    def done(self) -> None:
        if self.off != len(self.data):
            raise CorruptFile(f"{self.path}: {len(self.data) - self.off} trailing bytes")


def save_index(index: CorpusIndex, path: str | Path) -> None:
    out = bytearray()
    out += MAGIC
    out.append(FORMAT_VERSION)
    out.append(_BACKEND_TAGS[index.backend])
    out += struct.pack("<II", index.dim, len(index))
    for doc_id in index.doc_ids:
        encoded = doc_id.encode("utf-8")
        out += struct.pack("<H", len(encoded))
        out += encoded
    out += np.ascontiguousarray(index.matrix, dtype="<f8").tobytes()
    if index.backend == Backend.HNSW:
        _write_hnsw(out, index)
    elif index.backend == Backend.PARTITIONED:
        _write_partitioned(out, index)
    try:
        Path(path).write_bytes(bytes(out))
    except OSError as exc:
        raise IoFailure(f"cannot write index to {path}: {exc}") from exc


def _write_hnsw(out: bytearray, index: HnswIndex) -> None:
    p = index.params
    out += struct.pack("<IIIQ", p.m, p.ef_construction, p.ef_search, p.seed)
    out += struct.pack("<q", index.entry_point)
    for node in range(len(index)):
        layers = index.neighbors[node]
        out += struct.pack("<I", len(layers))
        for links in layers:
            out += struct.pack("<I", len(links))
            out += np.asarray(links, dtype="<u4").tobytes()


def _write_partitioned(out: bytearray, index: PartitionedIndex) -> None:
    p = index.params
    out += struct.pack("<IIIQ", p.n_clusters, p.n_probe, p.kmeans_iters, p.kmeans_seed)
    out += np.ascontiguousarray(index.centroids, dtype="<f8").tobytes()
    out += np.asarray(index.assignments, dtype="<u4").tobytes()


def load_index(path: str | Path) -> CorpusIndex:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read index from {path}: {exc}") from exc
    reader = _Reader(data, str(path))
    if reader.take(len(MAGIC)) != MAGIC:
        raise CorruptFile(f"{path}: bad magic, not an index file")
    version = reader.u8()
    if version != FORMAT_VERSION:
        raise CorruptFile(f"{path}: unsupported format version {version}")
    tag = reader.u8()
    if tag not in _TAG_BACKENDS:
        raise CorruptFile(f"{path}: unknown backend tag {tag}")
    backend = _TAG_BACKENDS[tag]
    dim = reader.u32()
    count = reader.u32()
    if dim == 0 or count == 0:
        raise CorruptFile(f"{path}: empty index payload")
    doc_ids = []
    for _ in range(count):
        length = reader.u16()
        doc_ids.append(reader.take(length).decode("utf-8"))
    matrix = reader.f64_array(count * dim).reshape(count, dim)
    if backend == Backend.EXACT:
        index: CorpusIndex = ExactIndex(doc_ids, matrix, None)
    elif backend == Backend.HNSW:
        index = _read_hnsw(reader, doc_ids, matrix)
    else:
        index = _read_partitioned(reader, doc_ids, matrix, count)
    reader.done()
    return index


def _read_hnsw(reader: _Reader, doc_ids: list[str], matrix: np.ndarray) -> HnswIndex:
    m, ef_construction, ef_search, seed = (
        reader.u32(), reader.u32(), reader.u32(), reader.u64())
    params = HnswParams(m=m, ef_construction=ef_construction,
                        ef_search=ef_search, seed=seed)
    entry_point = reader.i64()
    count = matrix.shape[0]
    if not -1 <= entry_point < count:
        raise CorruptFile(f"{reader.path}: entry point {entry_point} out of range")
    neighbors: list[list[list[int]]] = []
    levels: list[int] = []
    for _ in range(count):
        n_layers = reader.u32()
        if n_layers == 0:
            raise CorruptFile(f"{reader.path}: node with zero layers")
        layers = []
        for _ in range(n_layers):
            n_links = reader.u32()
            links = reader.u32_array(n_links)
            if links.size and links.max() >= count:
                raise CorruptFile(f"{reader.path}: neighbor id out of range")
            layers.append(links.tolist())
        neighbors.append(layers)
        levels.append(n_layers - 1)
    return HnswIndex(doc_ids, matrix, params, neighbors=neighbors,
                     levels=levels, entry_point=entry_point)


def _read_partitioned(reader: _Reader, doc_ids: list[str], matrix: np.ndarray,
                      count: int) -> PartitionedIndex:
    n_clusters, n_probe, kmeans_iters, kmeans_seed = (
        reader.u32(), reader.u32(), reader.u32(), reader.u64())
    params = PartitionedParams(n_clusters=n_clusters, n_probe=n_probe,
                               kmeans_iters=kmeans_iters, kmeans_seed=kmeans_seed)
    dim = matrix.shape[1]
    centroids = reader.f64_array(n_clusters * dim).reshape(n_clusters, dim)
    assignments = reader.u32_array(count)
    if assignments.size and assignments.max() >= n_clusters:
        raise CorruptFile(f"{reader.path}: cluster assignment out of range")
    return PartitionedIndex(doc_ids, matrix, params,
                            centroids=centroids, assignments=assignments)
