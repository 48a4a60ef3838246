"""
OFF Mesh Parser

Reads Object File Format meshes (the format ModelNet ships in) into Mesh
objects. Polygon faces are fan-triangulated and zero-area triangles dropped.
"""

import logging
import math
from typing import IO, Iterable, Iterator, List, Tuple, Union

import numpy as np

from .geometry import Mesh

logger = logging.getLogger(__name__)


class OffParseError(ValueError):
    """Malformed OFF input; carries the 1-based line number of the problem"""

    def __init__(self, line: int, message: str):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}")


def _content_lines(lines: Iterable[str]) -> Iterator[Tuple[int, List[str]]]:
    """Yield (line number, tokens) for every non-blank, non-comment line"""
    for number, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if text:
            yield number, text.split()


def _to_lines(source: Union[str, bytes, IO]) -> List[str]:
    if isinstance(source, bytes):
        source = source.decode("utf-8", errors="replace")
    if isinstance(source, str):
        return source.splitlines()
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    return data.splitlines()


def _parse_counts(number: int, tokens: List[str]) -> Tuple[int, int]:
    if len(tokens) < 2:
        raise OffParseError(number, "expected vertex and face counts")
    try:
        counts = [int(t) for t in tokens[:3]]
    except ValueError:
        raise OffParseError(number, f"counts must be integers, got {' '.join(tokens)!r}")
    if counts[0] < 0 or counts[1] < 0:
        raise OffParseError(number, "counts must be non-negative")
    return counts[0], counts[1]


def parse_off(source: Union[str, bytes, IO]) -> Mesh:
    """
    Parse OFF text into a triangle mesh.

    Args:
        source: OFF text, raw bytes, or an open file

    Returns:
        Mesh with fan-triangulated faces

    Raises:
        OffParseError: on a malformed header, count mismatch, bad number or
            out-of-range vertex index
    """
    lines = _content_lines(_to_lines(source))

    # Header, optionally with the counts fused on (ModelNet quirk: "OFF490 976 0")
    try:
        number, tokens = next(lines)
    except StopIteration:
        raise OffParseError(1, "empty input, expected 'OFF' header")
    head = tokens[0]
    if not head.startswith("OFF"):
        raise OffParseError(number, f"expected 'OFF' header, got {head!r}")
    fused = [head[3:]] + tokens[1:] if len(head) > 3 else tokens[1:]
    if fused:
        n_vertices, n_faces = _parse_counts(number, fused)
    else:
        try:
            number, tokens = next(lines)
        except StopIteration:
            raise OffParseError(number + 1, "missing counts line")
        n_vertices, n_faces = _parse_counts(number, tokens)

    vertices = []
    for i in range(n_vertices):
        try:
            number, tokens = next(lines)
        except StopIteration:
            raise OffParseError(number + 1, f"expected {n_vertices} vertices, found {i}")
        if len(tokens) < 3:
            raise OffParseError(number, "vertex needs three coordinates")
        try:
            coords = [float(t) for t in tokens[:3]]
        except ValueError:
            raise OffParseError(number, f"bad vertex coordinate in {' '.join(tokens)!r}")
        if not all(math.isfinite(c) for c in coords):
            raise OffParseError(number, "vertex coordinates must be finite")
        vertices.append(coords)

    triangles = []
    for i in range(n_faces):
        try:
            number, tokens = next(lines)
        except StopIteration:
            raise OffParseError(number + 1, f"expected {n_faces} faces, found {i}")
        try:
            size = int(tokens[0])
            indices = [int(t) for t in tokens[1:1 + size]]
        except ValueError:
            raise OffParseError(number, f"bad face record {' '.join(tokens)!r}")
        if size < 3 or len(indices) != size:
            raise OffParseError(number, f"face needs at least 3 vertex indices, got {' '.join(tokens)!r}")
        for index in indices:
            if index < 0 or index >= n_vertices:
                raise OffParseError(number, f"vertex index {index} out of range [0, {n_vertices})")
        # Fan triangulation around the first vertex
        for k in range(1, size - 1):
            triangles.append((indices[0], indices[k], indices[k + 1]))

    for number, tokens in lines:
        raise OffParseError(number, "unexpected content after the declared faces")

    mesh = Mesh(np.array(vertices, dtype=np.float64).reshape(-1, 3), np.array(triangles, dtype=np.int64).reshape(-1, 3))
    cleaned = mesh.without_degenerate()
    dropped = len(mesh.triangles) - len(cleaned.triangles)
    if dropped:
        logger.debug("Dropped %d zero-area triangles", dropped)
    return cleaned


def read_off(path: str) -> Mesh:
    """Parse an OFF file from disk"""
    with open(path, "rb") as f:
        return parse_off(f.read())
