"""Convex six-faced airspace volumes: inclusion, minimum distance, proximity cost.

All vector math runs in ECEF meters; distances come back in feet.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from landingrisk.geodesy import FT_PER_M, M_PER_FT, enu_basis, lla_to_ecef

CORRIDOR = "corridor"
NOFLY = "nofly"
KINDS = (CORRIDOR, NOFLY)

# bottom, top, then the four walls; each an ordered loop of vertex indices
PRISM_FACES = np.array([
    [0, 1, 2, 3],
    [4, 5, 6, 7],
    [0, 1, 5, 4],
    [1, 2, 6, 5],
    [2, 3, 7, 6],
    [3, 0, 4, 7],
])

ANGLE_EPS = 1e-9
INSIDE_TOL_M = 1e-9


class PolyhedronError(ValueError):
    pass


def face_normal(p1, p2, p4) -> np.ndarray:
    """Unit normal of a face from the cross product of its edges at ``p1``."""
    n = np.cross(np.subtract(p2, p1), np.subtract(p4, p1))
    norm = np.linalg.norm(n)
    scale = np.linalg.norm(np.subtract(p2, p1)) * np.linalg.norm(np.subtract(p4, p1))
    if norm <= 1e-12 * max(scale, 1e-300):
        raise PolyhedronError("degenerate face (zero area or collinear vertices)")
    return n / norm


@dataclass(frozen=True, eq=False)
class Polyhedron:
    id: str
    vertices: np.ndarray
    faces: np.ndarray
    kind: str = CORRIDOR
    normals: np.ndarray = field(init=False, repr=False)
    centroids: np.ndarray = field(init=False, repr=False)
    offsets: np.ndarray = field(init=False, repr=False)
    center: np.ndarray = field(init=False, repr=False)
    radius: float = field(init=False, repr=False)
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        faces = np.array(self.faces, dtype=int)
        if v.shape != (8, 3) or faces.shape != (6, 4):
            raise PolyhedronError("a polyhedron needs 8 vertices and 6 quadrilateral faces")
        if self.kind not in KINDS:
            raise PolyhedronError(f"unknown kind {self.kind!r}")
        body = v.mean(axis=0)
        normals = np.empty((6, 3))
        for i, f in enumerate(faces):
            n = face_normal(v[f[0]], v[f[1]], v[f[3]])
            fc = v[f].mean(axis=0)
            if np.dot(n, fc - body) < 0:
                # reverse the loop so the normal and winding both point outward
                faces[i] = f[[0, 3, 2, 1]]
                n = -n
            normals[i] = n
        centroids = v[faces].mean(axis=1)
        offsets = np.einsum("ij,ij->i", normals, centroids)
        for name, val in (("vertices", v), ("faces", faces), ("normals", normals),
                          ("centroids", centroids), ("offsets", offsets), ("center", body)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "radius", float(np.max(np.linalg.norm(v - body, axis=1))))
        self.validate()

    def validate(self, rel_tol: float = 1e-6) -> None:
        v = self.vertices
        edges = v[self.faces] - v[self.faces[:, [1, 2, 3, 0]]]
        scale = float(np.max(np.linalg.norm(edges, axis=-1)))
        tol = rel_tol * scale
        for i, f in enumerate(self.faces):
            resid = np.abs((v[f] - self.centroids[i]) @ self.normals[i])
            if resid.max() > tol:
                raise PolyhedronError(
                    f"{self.id}: face {i} is not planar (residual {resid.max():.3g} m)")
        signed =np.einsum("fk,fvk->fv", self.normals, v[None, :, :] - self.centroids[:, None, :])
        if signed.max() > tol:
            raise PolyhedronError(f"{self.id}: polyhedron is not convex")

    @classmethod
    def from_prism(cls, id: str, base, floor_ft: float, ceiling_ft: float,
                   kind: str = CORRIDOR) -> "Polyhedron":
        """Extrude four lat/lon corners between two altitudes.

        The prism is built in the tangent plane at the base centroid, so every
        face is exactly planar; over a few miles its top departs from the
        geodetic ceiling by only the Earth-curvature drop (a few feet).
        """
        base = np.asarray(base, dtype=float)
        if base.shape != (4, 2):
            raise PolyhedronError("base must be four [lat, lon] corners")
        if not ceiling_ft > floor_ft:
            raise PolyhedronError("ceiling must be above floor")
        lat0, lon0 = base.mean(axis=0)
        origin = lla_to_ecef(lat0, lon0, 0.0)
        east, north, up = enu_basis(lat0, lon0)
        rel = lla_to_ecef(base[:, 0], base[:, 1], 0.0) - origin
        e = rel @ east
        n = rel @ north
        verts = []
        for h in (floor_ft * M_PER_FT, ceiling_ft * M_PER_FT):
            for ei, ni in zip(e, n):
                verts.append(origin + ei * east + ni * north + h * up)
        meta = {"base": base.tolist(), "floor_ft": float(floor_ft), "ceiling_ft": float(ceiling_ft)}
        return cls(id, np.array(verts), PRISM_FACES, kind, meta=meta)

    def to_dict(self) -> dict:
        if "base" not in self.meta:
            raise ValueError("only prism-built polyhedra serialize to the JSON schema")
        return {"id": self.id, "kind": self.kind, **self.meta}

    @classmethod
    def from_dict(cls, d: dict) -> "Polyhedron":
        return cls.from_prism(d["id"], d["base"], d["floor_ft"], d["ceiling_ft"], d.get("kind", CORRIDOR))


def contains(P: Polyhedron, pts, tol: float = INSIDE_TOL_M) -> np.ndarray:
    """Vectorized inclusion test for ``(n, 3)`` ECEF points (boundary counts as inside)."""
    pts = np.atleast_2d(pts)
    s = pts @ P.normals.T - P.offsets
    return np.all(s <= tol, axis=1)


def point_in_polyhedron(p, P: Polyhedron) -> bool:
    return bool(contains(P, np.asarray(p, dtype=float)[None, :])[0])


def _face_distances(P: Polyhedron, pts) -> np.ndarray:
    """Distance in meters from each point to each closed face, shape (n, 6)."""
    V = P.vertices[P.faces]                       # (6, 4, 3)
    E = np.roll(V, -1, axis=1) - V                # edge a -> b
    M = np.cross(P.normals[:, None, :], E)        # in-plane, pointing into the face
    W = pts[:, None, None, :] - V[None]           # (n, 6, 4, 3)
    in_face = np.all(np.einsum("nfkc,fkc->nfk", W, M) >= 0.0, axis=2)
    plane = np.abs(pts @ P.normals.T - P.offsets)
    ee = np.einsum("fkc,fkc->fk", E, E)
    t = np.einsum("nfkc,fkc->nfk", W, E)
    # angle at a is at most 90 deg and angle at b at least 90 deg: foot lies on the edge
    between = (t >= 0.0) & (t <= ee)
    perp = np.linalg.norm(np.cross(E[None], W), axis=-1) / np.sqrt(ee)
    wn = np.linalg.norm(W, axis=-1)
    vert = np.minimum(wn, np.roll(wn, -1, axis=2))
    edge = np.where(between, perp, vert).min(axis=2)
    return np.where(in_face, plane, edge)


def _face_distances_literal(P: Polyhedron, pts, eps: float = ANGLE_EPS) -> np.ndarray:
    """Face distances using only the two edges meeting at the first vertex.

    Kept for comparison: it is wrong for points whose closest feature is one
    of the two far edges of a face.
    """
    V = P.vertices[P.faces]
    p1, p2, p4 = V[:, 0], V[:, 1], V[:, 3]
    e41 = p4 - p1
    e21 = p2 - p1

    def angle(a, e):
        w = pts[:, None, :] - a[None]
        c = np.einsum("nfc,fc->nf", w, e) / (np.linalg.norm(w, axis=-1) * np.linalg.norm(e, axis=-1) + eps)
        return np.arccos(np.clip(c, -1.0, 1.0))

    half = math.pi / 2
    c14 = (angle(p1, e41) <= half) & (angle(p4, e41) >= half)
    c12 = (angle(p1, e21) <= half) & (angle(p2, e21) >= half)
    plane = np.abs(pts @ P.normals.T - P.offsets)
    w1 = pts[:, None, :] - p1[None]
    d41 = np.linalg.norm(np.cross(e41[None], w1), axis=-1) / np.linalg.norm(e41, axis=-1)
    d21 = np.linalg.norm(np.cross(e21[None], w1), axis=-1) / np.linalg.norm(e21, axis=-1)
    dv = np.linalg.norm(pts[:, None, None, :] - V[None], axis=-1).min(axis=2)
    return np.select([c14 & c12, c14, c12], [plane, d41, d21], dv)


def distances(P: Polyhedron, pts, literal: bool = False) -> np.ndarray:
    """Minimum distance in feet from each ECEF point to ``P`` (0 inside)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    out = np.zeros(len(pts))
    outside = ~contains(P, pts)
    if outside.any():
        fd = (_face_distances_literal if literal else _face_distances)(P, pts[outside])
        out[outside] = fd.min(axis=1) * FT_PER_M
    return out


def min_distance(p, P: Polyhedron, literal: bool = False) -> float:
    return float(distances(P, np.asarray(p, dtype=float)[None, :], literal)[0])


def proximity_cost(p, P: Polyhedron, d_max: float = 500.0) -> float:
    """1 inside or on the boundary, decaying linearly to 0 at ``d_max`` feet."""
    return float(proximity_from_distance(min_distance(p, P), d_max))


def proximity_from_distance(d, d_max: float = 500.0):
    if d_max <= 0:
        raise ValueError("d_max must be positive")
    return 1.0 - np.minimum(d, d_max) / d_max


@dataclass
class PolyhedronSet:
    members: list[Polyhedron]
    kind: str = CORRIDOR

    def __post_init__(self):
        ids = [m.id for m in self.members]
        if len(set(ids)) != len(ids):
            raise PolyhedronError("polyhedron ids must be unique within a set")
        if self.kind not in KINDS:
            raise PolyhedronError(f"unknown kind {self.kind!r}")

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def _near(self, pts, pad: float) -> np.ndarray:
        """(n, members) mask of points within each bounding sphere grown by ``pad`` meters."""
        centers = np.array([P.center for P in self.members])
        radii = np.array([P.radius for P in self.members])
        return cdist(pts, centers) < radii * (1 + 1e-9) + pad

    def costs(self, pts, d_max: float = 500.0) -> np.ndarray:
        """Largest member proximity cost at each ECEF point; 0 for an empty set."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.zeros(len(pts))
        if not len(pts) or not self.members:
            return out
        reach = d_max * M_PER_FT
        near_all = self._near(pts, reach)
        for m in np.flatnonzero(near_all.any(axis=0)):
            P = self.members[m]
            idx = np.flatnonzero(near_all[:, m])
            # the largest signed plane distance is a lower bound on the true
            # distance to a convex body, so points beyond d_max of some face
            # plane cannot contribute
            lower = np.max(pts[idx] @ P.normals.T - P.offsets, axis=1)
            idx = idx[lower < reach]
            if idx.size:
                xi = proximity_from_distance(distances(P, pts[idx]), d_max)
                out[idx] = np.maximum(out[idx], xi)
        return out

    def inside_any(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.zeros(len(pts), dtype=bool)
        if not len(pts) or not self.members:
            return out
        near_all = self._near(pts, 0.0)
        for m in np.flatnonzero(near_all.any(axis=0)):
            idx = np.flatnonzero(near_all[:, m])
            out[idx] |= contains(self.members[m], pts[idx])
        return out

    def min_distances(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if not self.members:
            return np.full(len(pts), np.inf)
        return np.min([distances(P, pts) for P in self.members], axis=0)


def set_cost(p, pset: PolyhedronSet, d_max: float = 500.0) -> float:
    return float(pset.costs(np.asarray(p, dtype=float)[None, :], d_max)[0])


def load_polyhedra(path) -> tuple[PolyhedronSet, PolyhedronSet]:
    """Read a polyhedra JSON file into (corridors, no-fly zones)."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data.get("polyhedra", [])
    polys = [Polyhedron.from_dict(d) for d in data]
    return (PolyhedronSet([p for p in polys if p.kind == CORRIDOR], CORRIDOR),
            PolyhedronSet([p for p in polys if p.kind == NOFLY], NOFLY))


def save_polyhedra(path, *sets: PolyhedronSet) -> None:
    polys = [p.to_dict() for s in sets for p in s]
    Path(path).write_text(json.dumps({"polyhedra": polys}, indent=2))


def proximity_heatmap(pset: PolyhedronSet, spec, d_max: float = 500.0):
    """Precompute the set cost at every cell centre of ``spec``."""
    from landingrisk.traffic_grid import AirspaceGrid

    lat_e, lon_e, alt_e = spec.edges()
    lat_c = (lat_e[:-1] + lat_e[1:]) / 2
    lon_c = (lon_e[:-1] + lon_e[1:]) / 2
    alt_c = (alt_e[:-1] + alt_e[1:]) / 2
    LA, LO, AL = np.meshgrid(lat_c, lon_c, alt_c, indexing="ij")
    pts = lla_to_ecef(LA.ravel(), LO.ravel(), AL.ravel())
    vals = pset.costs(pts, d_max).reshape(spec.shape)
    return AirspaceGrid.from_values(spec, np.clip(vals, 0.0, 1.0), pset.kind)
