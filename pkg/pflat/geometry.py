"""
Euclidean simplex geometry from edge lengths.

Every function here works on one simplex at a time, described by a
LengthAssignment: either a symmetric (k+1)x(k+1) matrix of pairwise lengths
in local vertex order, or the k(k+1)/2 edge lengths listed in lexicographic
order of local vertex pairs, e.g. (l01, l02, l12) for a triangle.
"""

import math
from itertools import combinations

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import Degenerate

# Relative threshold on the normalized Cayley-Menger determinant
CM_EPSILON = 1e-12

# arccos arguments this far outside [-1, 1] are clamped; further is an error
CLAMP_SLACK = 1e-9

# Allowed disagreement between the two end-vertex evaluations of a dihedral angle
DIHEDRAL_AGREEMENT = 1e-9

# Cayley-Menger normalizers 2^k (k!)^2
CM_DENOMINATORS = {1: 2.0, 2: 16.0, 3: 288.0}


def length_matrix(lengths) -> np.ndarray:
    """Convert a LengthAssignment to a symmetric matrix of pairwise lengths.

    Args:
        lengths: Square matrix, or flat sequence of lengths in lexicographic
            pair order

    Returns:
        Symmetric float array with zero diagonal

    Raises:
        ValueError: If the input has an impossible shape
    """
    arr = np.asarray(lengths, dtype=float)
    if arr.ndim == 2:
        if arr.shape[0] != arr.shape[1]:
            raise ValueError(f"Length matrix must be square, got shape {arr.shape}")
        return arr

    sizes = {1: 2, 3: 3, 6: 4}
    if arr.ndim != 1 or arr.size not in sizes:
        raise ValueError(f"Expected 1, 3 or 6 edge lengths, got {arr.size}")
    n = sizes[arr.size]
    L = np.zeros((n, n))
    for value, (a, b) in zip(arr, combinations(range(n), 2)):
        L[a, b] = L[b, a] = value
    return L


def cayley_menger(lengths) -> float:
    """Sign-normalized Cayley-Menger determinant of a simplex.

    The value is (-1)^(k+1) det(B), which is positive exactly when the lengths
    are those of a nondegenerate Euclidean k-simplex.
    """
    L = length_matrix(lengths)
    n = L.shape[0]
    B = np.ones((n + 1, n + 1))
    B[0, 0] = 0.0
    B[1:, 1:] = L**2
    return (-1) ** n * float(np.linalg.det(B))


def cm_volume(lengths, k: int | None = None) -> float:
    """Volume of a k-simplex from its edge lengths.

    Args:
        lengths: LengthAssignment for the simplex
        k: Simplex dimension (1, 2 or 3); inferred from the lengths if omitted

    Returns:
        Length (k=1), area (k=2) or volume (k=3)

    Raises:
        Degenerate: If a length is not positive or the Cayley-Menger
            determinant is below the relative threshold
    """
    L = length_matrix(lengths)
    if k is None:
        k = L.shape[0] - 1
    if k not in CM_DENOMINATORS or L.shape[0] != k + 1:
        raise ValueError(f"Need a {k}-simplex with {k + 1} vertices, got {L.shape[0]}")

    edge_lengths = L[np.triu_indices(k + 1, 1)]
    if not np.all(np.isfinite(edge_lengths)) or np.any(edge_lengths <= 0):
        raise Degenerate(f"Non-positive or non-finite edge length in {edge_lengths.tolist()}")

    cm = cayley_menger(L)
    scale = float(np.mean(edge_lengths)) ** (2 * k)
    if cm <= CM_EPSILON * scale:
        raise Degenerate(f"Degenerate {k}-simplex: Cayley-Menger value {cm:.3e}")
    return math.sqrt(cm / CM_DENOMINATORS[k])


def is_nondegenerate(lengths) -> bool:
    """True when cm_volume succeeds."""
    try:
        cm_volume(lengths)
    except Degenerate:
        return False
    return True


def _arccos(x: float) -> float:
    if x > 1.0:
        if x - 1.0 > CLAMP_SLACK:
            raise Degenerate(f"Cosine {x!r} exceeds 1")
        x = 1.0
    elif x < -1.0:
        if -1.0 - x > CLAMP_SLACK:
            raise Degenerate(f"Cosine {x!r} is below -1")
        x = -1.0
    return math.acos(x)


def face_angle(a: float, b: float, c: float) -> float:
    """Angle at the vertex between the sides of length a and b.

    Args:
        a: Length of the first side at the vertex (l_ij)
        b: Length of the second side at the vertex (l_ik)
        c: Length of the opposite side (l_jk)

    Returns:
        The angle in (0, pi)

    Raises:
        Degenerate: If the strict triangle inequality fails
    """
    if min(a, b, c) <= 0 or not (a + b > c and a + c > b and b + c > a):
        raise Degenerate(f"Triangle inequality fails for sides ({a}, {b}, {c})")
    return _arccos((a * a + b * b - c * c) / (2.0 * a * b))


def triangle_angles(lengths) -> np.ndarray:
    """Angles of a triangle at its three local vertices."""
    L = length_matrix(lengths)
    return np.array([
        face_angle(L[0, 1], L[0, 2], L[1, 2]),
        face_angle(L[1, 0], L[1, 2], L[0, 2]),
        face_angle(L[2, 0], L[2, 1], L[0, 1]),
    ])


def corner_angles(lengths) -> np.ndarray:
    """All face angles of a simplex.

    Returns:
        Array G with G[v, a, b] the angle at v in triangle {v, a, b};
        entries with repeated indices are zero
    """
    L = length_matrix(lengths)
    n = L.shape[0]
    G = np.zeros((n, n, n))
    for v in range(n):
        others = [u for u in range(n) if u != v]
        for a, b in combinations(others, 2):
            G[v, a, b] = G[v, b, a] = face_angle(L[v, a], L[v, b], L[a, b])
    return G


def _dihedral_from(G: np.ndarray, v: int, w: int, k: int, l: int) -> float:
    """Dihedral angle along edge {v, w} seen from vertex v (spherical law of cosines)."""
    cos_beta = (
        math.cos(G[v, k, l]) - math.cos(G[v, w, k]) * math.cos(G[v, w, l])
    ) / (math.sin(G[v, w, k]) * math.sin(G[v, w, l]))
    return _arccos(cos_beta)


def dihedral_angles(lengths) -> np.ndarray:
    """All six dihedral angles of a tetrahedron.

    Each angle is evaluated from both end vertices of its edge and averaged.

    Returns:
        Symmetric 4x4 array B with B[i, j] the dihedral angle at edge {i, j}

    Raises:
        Degenerate: If the tetrahedron is degenerate or the two evaluations
            of an angle disagree by more than DIHEDRAL_AGREEMENT
    """
    L = length_matrix(lengths)
    if L.shape[0] != 4:
        raise ValueError("Dihedral angles need a tetrahedron")
    cm_volume(L, 3)
    G = corner_angles(L)

    B = np.zeros((4, 4))
    for i, j in combinations(range(4), 2):
        k, l = (u for u in range(4) if u not in (i, j))
        from_i = _dihedral_from(G, i, j, k, l)
        from_j = _dihedral_from(G, j, i, k, l)
        if abs(from_i - from_j) > DIHEDRAL_AGREEMENT:
            raise Degenerate(
                f"Dihedral angle at edge ({i}, {j}) is inconsistent: {from_i} vs {from_j}"
            )
        B[i, j] = B[j, i] = 0.5 * (from_i + from_j)
    return B


def dihedral_angle(lengths, edge: tuple[int, int]) -> float:
    """Dihedral angle of a tetrahedron at a local edge {i, j}."""
    i, j = edge
    return float(dihedral_angles(lengths)[i, j])


def solid_angle(lengths, vertex: int) -> float:
    """Solid angle at a local vertex: the three dihedral angles there minus pi."""
    B = dihedral_angles(lengths)
    return float(B[vertex].sum() - math.pi)


def solid_angles(lengths) -> np.ndarray:
    """Solid angles at all four vertices of a tetrahedron."""
    B = dihedral_angles(lengths)
    return B.sum(axis=1) - math.pi


def embed_simplex(lengths) -> np.ndarray:
    """Place a simplex in Euclidean space with the given edge lengths.

    Vertex 0 is at the origin, vertex 1 on the positive first axis, vertex 2
    in the upper half of the first coordinate plane and vertex 3 above it.

    Returns:
        Array of shape (k+1, k) with one row of coordinates per vertex

    Raises:
        Degenerate: If the lengths do not form a nondegenerate simplex
    """
    L = length_matrix(lengths)
    n = L.shape[0]
    k = n - 1
    cm_volume(L, k)

    X = np.zeros((n, k))
    for m in range(1, n):
        if m > 1:
            A = 2.0 * X[1:m, : m - 1]
            rhs = np.sum(X[1:m] ** 2, axis=1) + L[0, m] ** 2 - L[1:m, m] ** 2
            p = solve_triangular(A, rhs, lower=True)
        else:
            p = np.zeros(0)
        rest = L[0, m] ** 2 - float(p @ p)
        if rest <= CM_EPSILON * L[0, m] ** 2:
            raise Degenerate(f"Vertex {m} falls into the span of the previous vertices")
        X[m, : m - 1] = p
        X[m, m - 1] = math.sqrt(rest)
    return X
