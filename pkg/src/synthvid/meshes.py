"""Triangle meshes: procedural primitives, a minimal OBJ loader, helpers.

Meshes are plain triangle soups with one flat color per triangle.  Loaders
and primitive constructors filter zero-area triangles so the rasterizer
never sees a degenerate face.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Mesh",
    "bounding_sphere",
    "builtin_mesh",
    "cube",
    "cylinder",
    "load_obj",
    "room_box",
    "transformed",
    "uv_sphere",
    "torus",
]

_DEGENERATE_AREA = 1e-12

GRAY = (0.7, 0.7, 0.7)


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray   # (N, 3) float64
    triangles: np.ndarray  # (M, 3) int64 vertex indices
    colors: np.ndarray     # (M, 3) float64 base color per triangle

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        tris = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        colors = np.asarray(self.colors, dtype=float).reshape(-1, 3)
        if len(colors) != len(tris):
            raise ValueError("need one color per triangle")
        if len(tris) and (tris.min() < 0 or tris.max() >= len(verts)):
            raise ValueError("triangle index out of range")
        if len(tris):
            a, b, c = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
            areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
            if (areas <= _DEGENERATE_AREA).any():
                raise ValueError("degenerate (zero-area) triangle; filter before constructing")
        for arr in (verts, tris, colors):
            arr.flags.writeable = False
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)
        object.__setattr__(self, "colors", colors)

    def __len__(self):
        return len(self.triangles)


def _build(verts, tris, colors) -> Mesh:
    """Construct a mesh, silently dropping zero-area triangles."""
    verts = np.asarray(verts, dtype=float).reshape(-1, 3)
    tris = np.asarray(tris, dtype=np.int64).reshape(-1, 3)
    colors = np.asarray(colors, dtype=float).reshape(-1, 3)
    if len(tris):
        a, b, c = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
        areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
        keep = areas > _DEGENERATE_AREA
        tris, colors = tris[keep], colors[keep]
    return Mesh(verts, tris, colors)


def bounding_sphere(mesh: Mesh) -> tuple[np.ndarray, float]:
    """Center of the vertex bounding box and the max vertex distance from it."""
    if not len(mesh.vertices):
        raise ValueError("empty mesh has no bounding sphere")
    center = 0.5 * (mesh.vertices.min(axis=0) + mesh.vertices.max(axis=0))
    radius = float(np.linalg.norm(mesh.vertices - center, axis=1).max())
    return center, radius


def transformed(mesh: Mesh, rotation: np.ndarray | None = None,
                translation: np.ndarray | None = None,
                pivot: np.ndarray | None = None) -> Mesh:
    """Mesh with vertices rotated about ``pivot`` and then translated."""
    verts = mesh.vertices
    if rotation is not None:
        pivot = np.zeros(3) if pivot is None else np.asarray(pivot, dtype=float)
        verts = (verts - pivot) @ np.asarray(rotation, dtype=float).T + pivot
    if translation is not None:
        verts = verts + np.asarray(translation, dtype=float)
    return Mesh(verts, mesh.triangles, mesh.colors)


# ---------------------------------------------------------------------------
# primitives (outward-facing counterclockwise winding)

# Per-face cube palette; distinct faces make orientation bugs visible.
CUBE_FACE_COLORS = (
    (0.85, 0.25, 0.25),  # +x
    (0.25, 0.85, 0.25),  # -x
    (0.25, 0.25, 0.85),  # +y
    (0.85, 0.85, 0.25),  # -y
    (0.25, 0.85, 0.85),  # +z
    (0.85, 0.25, 0.85),  # -z
)


def cube(size: float = 2.0, face_colors=CUBE_FACE_COLORS) -> Mesh:
    h = size / 2.0
    v = np.array([
        [-h, -h, -h], [h, -h, -h], [h, h, -h], [-h, h, -h],
        [-h, -h, h], [h, -h, h], [h, h, h], [-h, h, h],
    ])
    faces = [
        ((1, 2, 6, 5), 0),  # +x
        ((3, 0, 4, 7), 1),  # -x
        ((2, 3, 7, 6), 2),  # +y
        ((0, 1, 5, 4), 3),  # -y
        ((4, 5, 6, 7), 4),  # +z
        ((1, 0, 3, 2), 5),  # -z
    ]
    tris, colors = [], []
    for (a, b, c, d), ci in faces:
        tris += [(a, b, c), (a, c, d)]
        colors += [face_colors[ci], face_colors[ci]]
    return _build(v, tris, colors)


def uv_sphere(radius: float = 1.0, n_lat: int = 12, n_lon: int = 24, color=GRAY) -> Mesh:
    verts = []
    for i in range(n_lat + 1):
        phi = np.pi * i / n_lat  # 0 at +z pole
        for j in range(n_lon):
            theta = 2.0 * np.pi * j / n_lon
            verts.append([
                radius * np.sin(phi) * np.cos(theta),
                radius * np.sin(phi) * np.sin(theta),
                radius * np.cos(phi),
            ])
    tris = []
    for i in range(n_lat):
        for j in range(n_lon):
            a = i * n_lon + j
            b = i * n_lon + (j + 1) % n_lon
            c = (i + 1) * n_lon + (j + 1) % n_lon
            d = (i + 1) * n_lon + j
            tris += [(a, d, c), (a, c, b)]
    colors = [color] * len(tris)
    return _build(verts, tris, colors)


def torus(major_radius: float = 1.0, minor_radius: float = 0.4,
          n_major: int = 24, n_minor: int = 12, color=GRAY) -> Mesh:
    verts = []
    for i in range(n_major):
        u = 2.0 * np.pi * i / n_major
        for j in range(n_minor):
            v = 2.0 * np.pi * j / n_minor
            r = major_radius + minor_radius * np.cos(v)
            verts.append([r * np.cos(u), r * np.sin(u), minor_radius * np.sin(v)])
    tris = []
    for i in range(n_major):
        for j in range(n_minor):
            a = i * n_minor + j
            b = ((i + 1) % n_major) * n_minor + j
            c = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor
            d = i * n_minor + (j + 1) % n_minor
            tris += [(a, b, c), (a, c, d)]
    colors = [color] * len(tris)
    return _build(verts, tris, colors)


def cylinder(radius: float = 1.0, height: float = 2.0, n_seg: int = 24, color=GRAY) -> Mesh:
    half = height / 2.0
    verts = []
    for z in (-half, half):
        for j in range(n_seg):
            theta = 2.0 * np.pi * j / n_seg
            verts.append([radius * np.cos(theta), radius * np.sin(theta), z])
    bottom_center = len(verts)
    verts.append([0.0, 0.0, -half])
    top_center = len(verts)
    verts.append([0.0, 0.0, half])

    tris = []
    for j in range(n_seg):
        a, b = j, (j + 1) % n_seg
        c, d = n_seg + (j + 1) % n_seg, n_seg + j
        tris += [(a, b, c), (a, c, d)]           # side
        tris.append((bottom_center, b, a))       # bottom cap (faces -z)
        tris.append((top_center, n_seg + j, n_seg + (j + 1) % n_seg))  # top cap
    colors = [color] * len(tris)
    return _build(verts, tris, colors)


def room_box(scene_color, half_extent: float = 20.0) -> Mesh:
    """Axis-aligned room enclosing the scene, triangles facing inward.

    Walls are tessellated into a grid so the near-plane clipper only drops
    small pieces when the camera sits close to a wall.
    """
    box = cube(size=2.0 * half_extent, face_colors=[scene_color] * 6)
    # flip winding so faces point inward
    tris = box.triangles[:, ::-1]
    return _subdivide(Mesh(box.vertices, tris, box.colors), rounds=2)


def _subdivide(mesh: Mesh, rounds: int = 1) -> Mesh:
    """Split each triangle at edge midpoints (4-way), applied ``rounds`` times."""
    verts = [tuple(v) for v in mesh.vertices]
    tris = [tuple(t) for t in mesh.triangles]
    colors = [tuple(c) for c in mesh.colors]
    for _ in range(rounds):
        index: dict = {v: i for i, v in enumerate(verts)}

        def midpoint(i, j):
            m = tuple((np.asarray(verts[i]) + np.asarray(verts[j])) / 2.0)
            if m not in index:
                index[m] = len(verts)
                verts.append(m)
            return index[m]

        new_tris, new_colors = [], []
        for (a, b, c), col in zip(tris, colors):
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_tris += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
            new_colors += [col] * 4
        tris, colors = new_tris, new_colors
    return _build(verts, tris, colors)


# ---------------------------------------------------------------------------
# OBJ subset loader


def load_obj(source, color=GRAY) -> Mesh:
    """Load the v/f subset of a Wavefront OBJ file (path or text).

    Understands ``v x y z`` and ``f`` lines with plain or slash-qualified
    indices; polygons are fan-triangulated, everything else is ignored.
    """
    if isinstance(source, (str, Path)) and "\n" not in str(source):
        text = Path(source).read_text()
    else:
        text = str(source)

    verts: list[list[float]] = []
    tris: list[tuple[int, int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("v "):
            parts = line.split()
            if len(parts) < 4:
                raise ValueError(f"line {lineno}: vertex needs 3 coordinates")
            verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
        elif line.startswith("f "):
            idx = []
            for token in line.split()[1:]:
                head = token.split("/")[0]
                i = int(head)
                if i < 0:
                    i = len(verts) + 1 + i  # negative indices count from the end
                idx.append(i - 1)
            if len(idx) < 3:
                raise ValueError(f"line {lineno}: face needs at least 3 vertices")
            for k in range(1, len(idx) - 1):
                tris.append((idx[0], idx[k], idx[k + 1]))
    colors = [color] * len(tris)
    return _build(verts, tris, colors)


_BUILTIN_FACTORIES = {
    "cube": cube,
    "sphere": uv_sphere,
    "torus": torus,
    "cylinder": cylinder,
}


def builtin_mesh(object_ref: str) -> Mesh:
    """Resolve an object reference: a primitive name or a ``.obj`` path."""
    if object_ref in _BUILTIN_FACTORIES:
        return _BUILTIN_FACTORIES[object_ref]()
    if object_ref.endswith(".obj"):
        return load_obj(object_ref)
    known = ", ".join(sorted(_BUILTIN_FACTORIES))
    raise KeyError(f"unknown object_ref {object_ref!r} (builtins: {known}, or a .obj path)")
