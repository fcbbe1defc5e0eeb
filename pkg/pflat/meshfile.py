"""
Mesh file reading and writing.

A mesh file is line oriented; ``#`` starts a comment. Layout::

    pflat-mesh 1
    dimension 2
    vertices 4
    1
    2
    3
    4
    simplices 4
    1 2 3
    ...
    chart fixed-inversive
    edges 6
    1 2 0.5
    ...
    f 4
    1 -0.69314718055994529
    ...

The ``edges`` block follows ``chart`` only for kinds that carry per-edge
data (inversive distances or base lengths). Instead of a chart and f a file
may give a raw pre-metric as a ``distances`` block of ``i j d_ij`` lines,
one per oriented edge. All reals are written with 17 significant digits.
"""

import logging
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .complex import SimplicialComplex, build_complex
from .conformal import CHART_KINDS, ConformalChart, PackingChart, make_chart, vertex_array
from .exceptions import ParseError
from .metric import PreMetric

logger = logging.getLogger(__name__)

FORMAT_NAME = "pflat-mesh"
FORMAT_VERSION = 1


def format_real(value: float) -> str:
    return format(float(value), ".17g")


@dataclass
class MeshFile:
    """Parsed contents of a mesh file.

    Exactly one of (chart_kind with f) or distances is set. ``edge_values``
    holds the per-edge chart data keyed by sorted vertex pairs.
    """

    dimension: int
    vertices: list[int]
    simplices: list[tuple[int, ...]]
    chart_kind: str | None = None
    edge_values: dict | None = None
    f: dict | None = None
    distances: dict | None = None
    version: int = FORMAT_VERSION

    def build(self) -> SimplicialComplex:
        """Build and validate the complex.

        Raises:
            ComplexError: If the simplices do not form a closed manifold
        """
        return build_complex(self.dimension, self.simplices)

    def chart(self, complex: SimplicialComplex | None = None) -> ConformalChart:
        if self.chart_kind is None:
            raise ValueError("Mesh has no chart block")
        return make_chart(self.chart_kind, complex or self.build(), self.edge_values)

    def vertex_function(self, complex: SimplicialComplex) -> np.ndarray:
        return vertex_array(complex, self.f)

    def metric(self, complex: SimplicialComplex | None = None) -> PreMetric:
        """The pre-metric of the file: chart applied to f, or the raw distances.

        Raises:
            OutOfDomain: If f lies outside the chart domain
        """
        complex = complex or self.build()
        if self.distances is not None:
            return PreMetric(complex, dict(self.distances))
        return self.chart(complex).apply(self.vertex_function(complex))

    @classmethod
    def from_chart(cls, chart: ConformalChart, f) -> "MeshFile":
        cx = chart.complex
        values = vertex_array(cx, f)
        return cls(
            dimension=cx.dimension,
            vertices=list(cx.vertices),
            simplices=list(cx.top_simplices),
            chart_kind=chart.kind,
            edge_values=chart.parameters,
            f={v: float(x) for v, x in zip(cx.vertices, values)},
        )

    @classmethod
    def from_metric(cls, metric: PreMetric) -> "MeshFile":
        cx = metric.complex
        return cls(
            dimension=cx.dimension,
            vertices=list(cx.vertices),
            simplices=list(cx.top_simplices),
            distances={e: float(metric.distances[e]) for e in cx.oriented_edges},
        )


class _Cursor:
    """Iterator over the meaningful lines of a file, keeping line numbers."""

    def __init__(self, text: str):
        self.lines = []
        for number, raw in enumerate(text.splitlines(), start=1):
            content = raw.split("#", 1)[0].strip()
            if content:
                self.lines.append((number, content.split()))
        self.position = 0
        self.last_line = len(text.splitlines())

    def done(self) -> bool:
        return self.position >= len(self.lines)

    def peek(self):
        return None if self.done() else self.lines[self.position]

    def next(self, what: str) -> tuple[int, list[str]]:
        if self.done():
            raise ParseError(f"Unexpected end of file, expected {what}", self.last_line + 1)
        item = self.lines[self.position]
        self.position += 1
        return item

    def header(self, keyword: str) -> tuple[int, list[str]]:
        number, tokens = self.next(f"'{keyword}'")
        if tokens[0] != keyword:
            raise ParseError(f"Expected '{keyword}', found '{tokens[0]}'", number)
        return number, tokens

    def count(self, keyword: str) -> tuple[int, int]:
        """Read a ``keyword COUNT`` header; returns its line number and the count."""
        number, tokens = self.header(keyword)
        if len(tokens) != 2:
            raise ParseError(f"Expected '{keyword} COUNT'", number)
        value = _int(tokens[1], number)
        if value < 0:
            raise ParseError(f"Negative count for '{keyword}'", number)
        return number, value


def _int(token: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"Expected an integer, found '{token}'", line) from None


def _real(token: str, line: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"Expected a number, found '{token}'", line) from None
    if not math.isfinite(value):
        raise ParseError(f"Value '{token}' is not finite", line)
    return value


def _block(cursor: _Cursor, keyword: str, width: int, expected: int | None = None):
    """Read a counted block of rows with ``width`` tokens each.

    With ``expected`` set, a header count other than that raises at the
    header line before any row is read.
    """
    line, count = cursor.count(keyword)
    if expected is not None and count != expected:
        raise ParseError(f"'{keyword}' block has {count} rows, the complex needs {expected}", line)
    rows = []
    for k in range(count):
        number, tokens = cursor.next(f"{count - k} more '{keyword}' rows")
        if len(tokens) != width:
            raise ParseError(f"'{keyword}' rows need {width} entries, found {len(tokens)}", number)
        rows.append((number, tokens))
    return rows


def _edge_row(i: str, j: str, line: int, known: set, edges: set) -> tuple[int, int]:
    """Parse the vertex pair of a distances or edges row, in file order."""
    pair = (_int(i, line), _int(j, line))
    unknown = [v for v in pair if v not in known]
    if unknown:
        raise ParseError(f"Row names undeclared vertex {unknown[0]}", line)
    if tuple(sorted(pair)) not in edges:
        raise ParseError(f"{list(pair)} is not an edge of the complex", line)
    return pair


def parse_mesh(text: str) -> MeshFile:
    """Parse mesh file text.

    Raises:
        ParseError: If the text is malformed; the message carries the line number
    """
    cursor = _Cursor(text)

    number, tokens = cursor.header(FORMAT_NAME)
    if len(tokens) != 2 or _int(tokens[1], number) != FORMAT_VERSION:
        raise ParseError(f"Unsupported format version, expected '{FORMAT_NAME} {FORMAT_VERSION}'", number)

    number, tokens = cursor.header("dimension")
    if len(tokens) != 2:
        raise ParseError("Expected 'dimension N'", number)
    dimension = _int(tokens[1], number)
    if dimension not in (2, 3):
        raise ParseError(f"Unsupported dimension {dimension}", number)

    declared = {}
    for number, (token,) in _block(cursor, "vertices", 1):
        vertex = _int(token, number)
        if vertex in declared:
            raise ParseError(f"Vertex {vertex} listed twice", number)
        declared[vertex] = number
    vertices = list(declared)
    known = set(vertices)

    simplices = []
    for number, row in _block(cursor, "simplices", dimension + 1):
        simplex = tuple(_int(t, number) for t in row)
        unknown = [v for v in simplex if v not in known]
        if unknown:
            raise ParseError(f"Simplex uses undeclared vertex {unknown[0]}", number)
        simplices.append(simplex)
    used = {v for s in simplices for v in s}
    unused = [v for v in vertices if v not in used]
    if unused:
        raise ParseError(f"Vertex {unused[0]} is in no simplex", declared[unused[0]])
    edges = {pair for s in simplices for pair in combinations(sorted(set(s)), 2)}

    mesh = MeshFile(dimension=dimension, vertices=vertices, simplices=simplices)
    item = cursor.peek()
    if item is None:
        raise ParseError("Expected a 'chart' or 'distances' block", cursor.last_line + 1)

    if item[1][0] == "distances":
        mesh.distances = {}
        for number, (i, j, value) in _block(cursor, "distances", 3, expected=2 * len(edges)):
            pair = _edge_row(i, j, number, known, edges)
            if pair in mesh.distances:
                raise ParseError(f"Distance {list(pair)} listed twice", number)
            mesh.distances[pair] = _real(value, number)
    else:
        number, tokens = cursor.header("chart")
        if len(tokens) != 2 or tokens[1] not in CHART_KINDS:
            raise ParseError(f"Expected 'chart KIND' with KIND in {', '.join(CHART_KINDS)}", number)
        mesh.chart_kind = tokens[1]
        if mesh.chart_kind != PackingChart.kind:
            mesh.edge_values = {}
            for number, (i, j, value) in _block(cursor, "edges", 3, expected=len(edges)):
                edge = tuple(sorted(_edge_row(i, j, number, known, edges)))
                if edge in mesh.edge_values:
                    raise ParseError(f"Edge {list(edge)} listed twice", number)
                mesh.edge_values[edge] = _real(value, number)
        mesh.f = {}
        header = cursor.peek()[0] if cursor.peek() else cursor.last_line + 1
        for number, (v, value) in _block(cursor, "f", 2):
            vertex = _int(v, number)
            if vertex not in known:
                raise ParseError(f"Vertex function names undeclared vertex {vertex}", number)
            if vertex in mesh.f:
                raise ParseError(f"Vertex function lists vertex {vertex} twice", number)
            mesh.f[vertex] = _real(value, number)
        missing = [v for v in vertices if v not in mesh.f]
        if missing:
            raise ParseError(f"Vertex function has no value for vertex {missing[0]}", header)

    if not cursor.done():
        number, tokens = cursor.next("end of file")
        raise ParseError(f"Unexpected content '{tokens[0]}' after the last block", number)
    return mesh


def serialize_mesh(mesh: MeshFile) -> str:
    """Render a MeshFile as text that parse_mesh reads back unchanged."""
    lines = [f"{FORMAT_NAME} {mesh.version}", f"dimension {mesh.dimension}"]
    lines.append(f"vertices {len(mesh.vertices)}")
    lines += [str(v) for v in mesh.vertices]
    lines.append(f"simplices {len(mesh.simplices)}")
    lines += [" ".join(str(v) for v in s) for s in mesh.simplices]
    if mesh.distances is not None:
        lines.append(f"distances {len(mesh.distances)}")
        lines += [f"{i} {j} {format_real(d)}" for (i, j), d in mesh.distances.items()]
    else:
        lines.append(f"chart {mesh.chart_kind}")
        if mesh.edge_values is not None:
            lines.append(f"edges {len(mesh.edge_values)}")
            lines += [f"{i} {j} {format_real(x)}" for (i, j), x in mesh.edge_values.items()]
        lines.append(f"f {len(mesh.f)}")
        lines += [f"{v} {format_real(x)}" for v, x in mesh.f.items()]
    return "\n".join(lines) + "\n"


def read_mesh(path) -> MeshFile:
    """Read a mesh file from disk.

    Raises:
        FileNotFoundError: If the path does not exist
        ParseError: If the file is malformed
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Mesh file not found: {path}")
    return parse_mesh(path.read_text())


def write_mesh(mesh: MeshFile, path) -> Path:
    path = Path(path)
    path.write_text(serialize_mesh(mesh))
    logger.info("Wrote mesh to %s", path)
    return path


def parse_vertex_values(text: str) -> dict[int, float]:
    """Parse ``vertex value`` lines, e.g. a curvature target.

    Raises:
        ParseError: On a malformed line or a repeated vertex
    """
    values = {}
    for number, tokens in _Cursor(text).lines:
        if len(tokens) != 2:
            raise ParseError(f"Expected 'VERTEX VALUE', found {len(tokens)} entries", number)
        vertex = _int(tokens[0], number)
        if vertex in values:
            raise ParseError(f"Vertex {vertex} listed twice", number)
        values[vertex] = _real(tokens[1], number)
    return values


def off_to_mesh(text: str) -> MeshFile:
    """Convert a triangulated surface in OFF format.

    The result carries the perpendicular bisector chart with the Euclidean
    edge lengths as base lengths and f = 0, so it reproduces the input
    geometry. Vertices are numbered from 0 in file order.

    Raises:
        ParseError: If the OFF text is malformed or has non-triangular faces
    """
    cursor = _Cursor(text)
    number, tokens = cursor.next("'OFF'")
    if tokens[0] != "OFF":
        raise ParseError("Expected 'OFF' header", number)
    counts = tokens[1:] or cursor.next("vertex and face counts")[1]
    if len(counts) < 2:
        raise ParseError("Expected vertex and face counts", number)
    n_vertices, n_faces = _int(counts[0], number), _int(counts[1], number)

    points = []
    for k in range(n_vertices):
        number, tokens = cursor.next(f"{n_vertices - k} more vertex rows")
        if len(tokens) < 3:
            raise ParseError("Vertex rows need three coordinates", number)
        points.append([_real(t, number) for t in tokens[:3]])
    points = np.array(points)

    faces = []
    for k in range(n_faces):
        number, tokens = cursor.next(f"{n_faces - k} more face rows")
        if _int(tokens[0], number) != 3 or len(tokens) < 4:
            raise ParseError("Only triangular faces are supported", number)
        face = tuple(_int(t, number) for t in tokens[1:4])
        if any(not 0 <= v < n_vertices for v in face):
            raise ParseError(f"Face refers to a vertex outside 0..{n_vertices - 1}", number)
        faces.append(face)

    edges = {tuple(sorted(e)) for face in faces for e in ((face[0], face[1]), (face[0], face[2]), (face[1], face[2]))}
    lengths = {e: float(np.linalg.norm(points[e[0]] - points[e[1]])) for e in sorted(edges)}
    used = sorted({v for face in faces for v in face})
    return MeshFile(
        dimension=2,
        vertices=used,
        simplices=faces,
        chart_kind="perp-bisector",
        edge_values=lengths,
        f={v: 0.0 for v in used},
    )
