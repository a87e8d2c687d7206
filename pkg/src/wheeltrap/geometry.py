"""Electrode primitives and deterministic structured surface meshing.

Interfaces use micrometers (the natural unit of the trap drawings); panel
meshes are stored in meters for the field solver.  Meshing is structured
per primitive with mild grading toward edges, so identical inputs always
produce identical panel lists.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .constants import UM
from .errors import ParameterError, ResolutionError

RF_A = "RF_A"
RF_B = "RF_B"
DC_PC = "DC_PC"
DC_MM = "DC_MM"
GROUND = "GROUND"
FIBER_FACET_PC = "FIBER_FACET_PC"
FIBER_FACET_MM = "FIBER_FACET_MM"

#: labels treated as fixed-charge dielectric surfaces, not conductors
FACET_LABELS = (FIBER_FACET_PC, FIBER_FACET_MM)

KINDS = ("box-blade", "hollow-cylinder", "disk", "sphere", "plate")

_DIM_KEYS = {
    "box-blade": ("lx", "ly", "lz"),
    "hollow-cylinder": ("inner_diameter", "outer_diameter", "length"),
    "disk": ("diameter",),
    "sphere": ("diameter",),
    "plate": ("lx", "ly"),
}


@dataclass(frozen=True)
class ElectrodePrimitive:
    """One rigid electrode surface with a conductor-group label.

    ``frame`` columns are the local x/y/z axes expressed in the lab frame;
    ``center_um`` is the local origin.  Boxes and cylinders enclose metal
    volume; disks, plates and facets are open (zero-volume) surfaces.
    """

    kind: str
    label: str
    center_um: tuple[float, float, float]
    dims_um: dict[str, float]
    frame: tuple = (
        (1.0, 0.0, 0.0),
        (0.0, 1.0, 0.0),
        (0.0, 0.0, 1.0),
    )

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown primitive kind {self.kind!r}")
        keys = _DIM_KEYS[self.kind]
        for key in keys:
            if key not in self.dims_um:
                raise ParameterError(f"{self.label}: missing dimension {key!r}")
            if not self.dims_um[key] > 0.0:
                raise ParameterError(
                    f"{self.label}: dimension {key!r} must be positive, "
                    f"got {self.dims_um[key]}"
                )
        extra = set(self.dims_um) - set(keys)
        if extra:
            raise ParameterError(f"{self.label}: unexpected dimensions {sorted(extra)}")
        if self.kind == "hollow-cylinder":
            if not self.dims_um["inner_diameter"] < self.dims_um["outer_diameter"]:
                raise ParameterError(
                    f"{self.label}: inner_diameter must be below outer_diameter"
                )
        f = np.asarray(self.frame, dtype=float)
        if f.shape != (3, 3) or not np.allclose(f.T @ f, np.eye(3), atol=1e-12):
            raise ParameterError(f"{self.label}: frame must be orthonormal")

    @property
    def frame_matrix(self) -> np.ndarray:
        return np.asarray(self.frame, dtype=float)

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.center_um, dtype=float)

    def analytic_area_um2(self) -> float:
        """Closed-form surface area, used to validate meshes."""
        d = self.dims_um
        if self.kind == "box-blade":
            return 2.0 * (
                d["lx"] * d["ly"] + d["ly"] * d["lz"] + d["lz"] * d["lx"]
            )
        if self.kind == "hollow-cylinder":
            ri, ro = d["inner_diameter"] / 2.0, d["outer_diameter"] / 2.0
            length = d["length"]
            return (
                2.0 * np.pi * ri * length
                + 2.0 * np.pi * ro * length
                + 2.0 * np.pi * (ro**2 - ri**2)
            )
        if self.kind == "disk":
            return np.pi * (d["diameter"] / 2.0) ** 2
        if self.kind == "sphere":
            return 4.0 * np.pi * (d["diameter"] / 2.0) ** 2
        return d["lx"] * d["ly"]  # plate

    def smallest_feature_um(self) -> float:
        d = self.dims_um
        if self.kind == "box-blade":
            return min(d["lx"], d["ly"], d["lz"])
        if self.kind == "hollow-cylinder":
            wall = (d["outer_diameter"] - d["inner_diameter"]) / 2.0
            return min(d["length"], wall)
        if self.kind in ("disk", "sphere"):
            return d["diameter"] / 2.0
        return min(d["lx"], d["ly"])  # plate

    def contains(self, points_m: np.ndarray) -> np.ndarray:
        """True for points strictly inside the metal volume (meters)."""
        pts = np.atleast_2d(points_m) / UM
        local = (pts - self.center) @ self.frame_matrix
        d = self.dims_um
        if self.kind == "box-blade":
            half = np.array([d["lx"], d["ly"], d["lz"]]) / 2.0
            return np.all(np.abs(local) < half, axis=1)
        if self.kind == "hollow-cylinder":
            rho = np.hypot(local[:, 0], local[:, 1])
            ri, ro = d["inner_diameter"] / 2.0, d["outer_diameter"] / 2.0
            return (rho > ri) & (rho < ro) & (np.abs(local[:, 2]) < d["length"] / 2.0)
        if self.kind == "sphere":
            return np.linalg.norm(local, axis=1) < d["diameter"] / 2.0
        return np.zeros(len(pts), dtype=bool)  # open surfaces


@dataclass(frozen=True)
class WheelTrapParams:
    """Dimensions of the wheel-trap/fiber-cavity geometry, in micrometers.

    Defaults follow the published trap: 250 um ion-electrode distance,
    hollow endcaps with 250/500 um inner/outer diameter, 500 um cavity
    length, fibers recessed 10 um into the bores.  Blade shapes are
    simplified rectangular prisms; the wafer thickness (300 um) sets the
    blade extent along the trap axis.
    """

    ion_electrode_distance_um: float = 250.0
    endcap_inner_diameter_um: float = 250.0
    endcap_outer_diameter_um: float = 500.0
    cavity_length_um: float = 500.0
    fiber_recess_um: float = 10.0
    fiber_diameter_pc_um: float = 230.0
    fiber_diameter_mm_um: float = 220.0
    fiber_offset_um: float = 0.0
    rf_blade_width_um: float = 260.0
    rf_blade_depth_um: float = 400.0
    blade_thickness_um: float = 300.0
    comp_tip_distance_um: float = 480.0
    comp_blade_width_um: float = 150.0
    comp_blade_depth_um: float = 250.0
    endcap_length_um: float = 600.0
    include_fibers: bool = True

    def __post_init__(self):
        positive = (
            "ion_electrode_distance_um",
            "endcap_inner_diameter_um",
            "endcap_outer_diameter_um",
            "cavity_length_um",
            "fiber_diameter_pc_um",
            "fiber_diameter_mm_um",
            "rf_blade_width_um",
            "rf_blade_depth_um",
            "blade_thickness_um",
            "comp_tip_distance_um",
            "comp_blade_width_um",
            "comp_blade_depth_um",
            "endcap_length_um",
        )
        for name in positive:
            if not getattr(self, name) > 0.0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        if self.fiber_recess_um < 0.0:
            raise ParameterError(f"fiber_recess_um must be >= 0, got {self.fiber_recess_um}")
        if self.include_fibers:
            fiber_max = max(self.fiber_diameter_pc_um, self.fiber_diameter_mm_um)
            if self.endcap_inner_diameter_um < fiber_max:
                raise ParameterError(
                    "endcap_inner_diameter_um must be at least the fiber diameter "
                    f"({self.endcap_inner_diameter_um} < {fiber_max})"
                )
        if self.cavity_length_um / 2.0 <= self.fiber_recess_um:
            raise ParameterError("cavity_length_um too short for the fiber recess")


def _rot_z(cos: float, sin: float) -> tuple:
    return ((cos, -sin, 0.0), (sin, cos, 0.0), (0.0, 0.0, 1.0))


_FLIP_Z = ((1.0, 0.0, 0.0), (0.0, -1.0, 0.0), (0.0, 0.0, -1.0))
_SQ2 = np.sqrt(0.5)


def build_wheel_trap(params: WheelTrapParams) -> list[ElectrodePrimitive]:
    """Construct the electrode primitives of the trap/cavity system.

    Returns four RF blades (two opposing pairs RF_A along x, RF_B along
    y), four compensation blades on the diagonals, two hollow endcap
    tubes along z, and, when fibers are included, two recessed fiber
    facet disks.  The fiber transverse offset displaces the endcaps and
    facets together, as in the experiment.
    """
    p = params
    prims: list[ElectrodePrimitive] = []

    blade_dims = {
        "lx": p.rf_blade_depth_um,
        "ly": p.rf_blade_width_um,
        "lz": p.blade_thickness_um,
    }
    tip = p.ion_electrode_distance_um + p.rf_blade_depth_um / 2.0
    rf_frames = [
        (RF_A, (tip, 0.0, 0.0), _rot_z(1.0, 0.0)),
        (RF_A, (-tip, 0.0, 0.0), _rot_z(-1.0, 0.0)),
        (RF_B, (0.0, tip, 0.0), _rot_z(0.0, 1.0)),
        (RF_B, (0.0, -tip, 0.0), _rot_z(0.0, -1.0)),
    ]
    for label, center, frame in rf_frames:
        prims.append(
            ElectrodePrimitive("box-blade", label, center, dict(blade_dims), frame)
        )

    comp_dims = {
        "lx": p.comp_blade_depth_um,
        "ly": p.comp_blade_width_um,
        "lz": p.blade_thickness_um,
    }
    comp_tip = p.comp_tip_distance_um + p.comp_blade_depth_um / 2.0
    diagonals = [
        (_SQ2, _SQ2),
        (-_SQ2, _SQ2),
        (-_SQ2, -_SQ2),
        (_SQ2, -_SQ2),
    ]
    for i, (cx, sx) in enumerate(diagonals, start=1):
        prims.append(
            ElectrodePrimitive(
                "box-blade",
                f"COMP_{i}",
                (comp_tip * cx, comp_tip * sx, 0.0),
                dict(comp_dims),
                _rot_z(cx, sx),
            )
        )

    endcap_dims = {
        "inner_diameter": p.endcap_inner_diameter_um,
        "outer_diameter": p.endcap_outer_diameter_um,
        "length": p.endcap_length_um,
    }
    z_face = p.cavity_length_um / 2.0 - p.fiber_recess_um
    z_center = z_face + p.endcap_length_um / 2.0
    dx = p.fiber_offset_um
    prims.append(
        ElectrodePrimitive(
            "hollow-cylinder", DC_PC, (dx, 0.0, z_center), dict(endcap_dims)
        )
    )
    prims.append(
        ElectrodePrimitive(
            "hollow-cylinder", DC_MM, (dx, 0.0, -z_center), dict(endcap_dims)
        )
    )

    if p.include_fibers:
        z_facet = p.cavity_length_um / 2.0
        prims.append(
            ElectrodePrimitive(
                "disk",
                FIBER_FACET_PC,
                (dx, 0.0, z_facet),
                {"diameter": p.fiber_diameter_pc_um},
                _FLIP_Z,  # facet faces the ion (-z)
            )
        )
        prims.append(
            ElectrodePrimitive(
                "disk",
                FIBER_FACET_MM,
                (dx, 0.0, -z_facet),
                {"diameter": p.fiber_diameter_mm_um},
            )
        )
    return prims


# ---------------------------------------------------------------------------
# structured meshers (local coordinates, micrometers)

def _graded_axis(length: float, h: float, grade: float = 0.5) -> np.ndarray:
    """1D node positions on [-length/2, length/2], refined toward both ends."""
    n = max(2, int(np.ceil(length / h * (1.0 + grade * (np.pi / 2.0 - 1.0)))))
    s = np.linspace(0.0, 1.0, n + 1)
    t = (1.0 - grade) * s + grade * 0.5 * (1.0 - np.cos(np.pi * s))
    return (t - 0.5) * length


def _quads_to_tris(grid: np.ndarray) -> np.ndarray:
    """Split an (nu+1, nv+1, 3) structured grid into triangles (n, 3, 3)."""
    p00 = grid[:-1, :-1]
    p10 = grid[1:, :-1]
    p01 = grid[:-1, 1:]
    p11 = grid[1:, 1:]
    t1 = np.stack([p00, p10, p11], axis=2)
    t2 = np.stack([p00, p11, p01], axis=2)
    tris = np.concatenate([t1, t2], axis=2)
    return tris.reshape(-1, 3, 3)


def _mesh_rectangle(a: float, b: float, h: float) -> np.ndarray:
    """Triangles covering [-a/2, a/2] x [-b/2, b/2] in the local xy plane."""
    xs = _graded_axis(a, h)
    ys = _graded_axis(b, h)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    grid = np.stack([gx, gy, np.zeros_like(gx)], axis=-1)
    return _quads_to_tris(grid)


def _embed_box_face(tris2d: np.ndarray, axis: int, sign: float, half: np.ndarray):
    """Place a rectangle mesh on one box face with outward orientation."""
    n = len(tris2d)
    out = np.zeros((n, 3, 3))
    others = [i for i in range(3) if i != axis]
    out[:, :, others[0]] = tris2d[:, :, 0]
    out[:, :, others[1]] = tris2d[:, :, 1]
    out[:, :, axis] = sign * half[axis]
    # enforce outward normal: flip vertex order where needed
    e1 = out[:, 1] - out[:, 0]
    e2 = out[:, 2] - out[:, 0]
    normal = np.cross(e1, e2)
    flip = normal[:, axis] * sign < 0
    out[flip] = out[flip][:, ::-1, :]
    return out


def _mesh_box(lx: float, ly: float, lz: float, h: float) -> np.ndarray:
    half = np.array([lx, ly, lz]) / 2.0
    sides = []
    for axis, (a, b) in enumerate([(ly, lz), (lx, lz), (lx, ly)]):
        tris2d = _mesh_rectangle(a, b, h)
        for sign in (+1.0, -1.0):
            sides.append(_embed_box_face(tris2d, axis, sign, half))
    return np.concatenate(sides, axis=0)


def _theta_nodes(radius: float, h: float, oversample: float = 1.0) -> np.ndarray:
    # chordal area deficit goes as dtheta^2; flat rings need extra angular
    # resolution to hold the 2% per-primitive area budget
    floor = int(np.ceil(16 * oversample))
    n = max(floor, int(np.ceil(2.0 * np.pi * radius / h * oversample)))
    return np.linspace(0.0, 2.0 * np.pi, n + 1)


def _mesh_cylinder_shell(radius, length, h, outward=True):
    theta = _theta_nodes(radius, h)
    zs = _graded_axis(length, h)
    gt, gz = np.meshgrid(theta, zs, indexing="ij")
    grid = np.stack(
        [radius * np.cos(gt), radius * np.sin(gt), gz], axis=-1
    )
    tris = _quads_to_tris(grid)
    if not outward:
        tris = tris[:, ::-1, :]
    return tris


def _mesh_annulus(r_in, r_out, h, up=True):
    theta = _theta_nodes(r_out, h, oversample=1.5)
    rs = r_in + (_graded_axis(r_out - r_in, h) + (r_out - r_in) / 2.0)
    gr, gt = np.meshgrid(rs, theta, indexing="ij")
    grid = np.stack(
        [gr * np.cos(gt), gr * np.sin(gt), np.zeros_like(gr)], axis=-1
    )
    tris = _quads_to_tris(grid)
    if not up:
        tris = tris[:, ::-1, :]
    return tris


def _mesh_disk(radius: float, h: float) -> np.ndarray:
    theta = _theta_nodes(radius, h, oversample=2.0)
    nr = max(2, int(np.ceil(radius / h * 1.2)))
    s = np.linspace(0.0, 1.0, nr + 1)
    rs = radius * (0.6 * s + 0.4 * np.sin(0.5 * np.pi * s))
    # center fan
    fan = []
    for k in range(len(theta) - 1):
        fan.append(
            [
                [0.0, 0.0, 0.0],
                [rs[1] * np.cos(theta[k]), rs[1] * np.sin(theta[k]), 0.0],
                [rs[1] * np.cos(theta[k + 1]), rs[1] * np.sin(theta[k + 1]), 0.0],
            ]
        )
    parts = [np.array(fan)]
    if nr > 1:
        gr, gt = np.meshgrid(rs[1:], theta, indexing="ij")
        grid = np.stack(
            [gr * np.cos(gt), gr * np.sin(gt), np.zeros_like(gr)], axis=-1
        )
        parts.append(_quads_to_tris(grid))
    return np.concatenate(parts, axis=0)


_ICOSA_PHI = (1.0 + np.sqrt(5.0)) / 2.0
_ICOSA_VERTS = np.array(
    [
        [-1, _ICOSA_PHI, 0], [1, _ICOSA_PHI, 0], [-1, -_ICOSA_PHI, 0], [1, -_ICOSA_PHI, 0],
        [0, -1, _ICOSA_PHI], [0, 1, _ICOSA_PHI], [0, -1, -_ICOSA_PHI], [0, 1, -_ICOSA_PHI],
        [_ICOSA_PHI, 0, -1], [_ICOSA_PHI, 0, 1], [-_ICOSA_PHI, 0, -1], [-_ICOSA_PHI, 0, 1],
    ],
    dtype=float,
)
_ICOSA_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ]
)


def _mesh_sphere(radius: float, h: float) -> np.ndarray:
    base_edge = radius / np.sin(2.0 * np.pi / 5.0)
    level = max(1, int(np.ceil(np.log2(base_edge / h)))) if h < base_edge else 1
    verts = _ICOSA_VERTS / np.linalg.norm(_ICOSA_VERTS[0])
    faces = _ICOSA_FACES.copy()
    for _ in range(level):
        cache: dict[tuple[int, int], int] = {}
        new_faces = []
        verts_list = list(verts)

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts_list[i] + verts_list[j]
                m = m / np.linalg.norm(m)
                cache[key] = len(verts_list)
                verts_list.append(m)
            return cache[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        verts = np.array(verts_list)
        faces = np.array(new_faces)
    return radius * verts[faces]


@dataclass(frozen=True)
class PanelMesh:
    """Flat-triangle surface mesh with per-panel electrode labels.

    Vertices, centroids, and areas are in meters; the resolution ``h_um``
    records the target edge length used to build it.
    """

    vertices_m: np.ndarray  # (n, 3, 3)
    centroids_m: np.ndarray  # (n, 3)
    areas_m2: np.ndarray  # (n,)
    normals: np.ndarray  # (n, 3)
    labels: np.ndarray  # (n,) str
    primitive_index: np.ndarray  # (n,) int
    primitives: tuple[ElectrodePrimitive, ...]
    h_um: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_panels(self) -> int:
        return len(self.areas_m2)

    @property
    def conductor_mask(self) -> np.ndarray:
        return ~np.isin(self.labels, FACET_LABELS)

    def panels_with_label(self, label: str) -> np.ndarray:
        return np.flatnonzero(self.labels == label)

    @property
    def conductor_labels(self) -> tuple[str, ...]:
        seen = []
        for lab in self.labels:
            if lab not in seen and lab not in FACET_LABELS:
                seen.append(lab)
        return tuple(seen)

    @property
    def facet_labels(self) -> tuple[str, ...]:
        seen = []
        for lab in self.labels:
            if lab in FACET_LABELS and lab not in seen:
                seen.append(lab)
        return tuple(seen)

    @property
    def diameters_m(self) -> np.ndarray:
        """Longest edge per panel; sets near-field integration thresholds."""
        if "diam" not in self._cache:
            v = self.vertices_m
            e = np.stack(
                [
                    np.linalg.norm(v[:, 1] - v[:, 0], axis=1),
                    np.linalg.norm(v[:, 2] - v[:, 1], axis=1),
                    np.linalg.norm(v[:, 0] - v[:, 2], axis=1),
                ],
                axis=1,
            )
            self._cache["diam"] = e.max(axis=1)
        return self._cache["diam"]

    def area_by_primitive(self) -> np.ndarray:
        out = np.zeros(len(self.primitives))
        np.add.at(out, self.primitive_index, self.areas_m2)
        return out

    def to_csv(self, path) -> None:
        """One panel per row; coordinates in um, areas in um^2."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "v1x_um", "v1y_um", "v1z_um",
                    "v2x_um", "v2y_um", "v2z_um",
                    "v3x_um", "v3y_um", "v3z_um",
                    "cx_um", "cy_um", "cz_um",
                    "nx", "ny", "nz",
                    "area_um2", "label",
                ]
            )
            v_um = self.vertices_m / UM
            c_um = self.centroids_m / UM
            a_um2 = self.areas_m2 / UM**2
            for i in range(self.n_panels):
                row = [f"{x:.9g}" for x in v_um[i].ravel()]
                row += [f"{x:.9g}" for x in c_um[i]]
                row += [f"{x:.9g}" for x in self.normals[i]]
                row += [f"{a_um2[i]:.9g}", str(self.labels[i])]
                writer.writerow(row)


_MESHERS = {
    "box-blade": lambda d, h: _mesh_box(d["lx"], d["ly"], d["lz"], h),
    "disk": lambda d, h: _mesh_disk(d["diameter"] / 2.0, h),
    "sphere": lambda d, h: _mesh_sphere(d["diameter"] / 2.0, h),
    "plate": lambda d, h: _mesh_rectangle(d["lx"], d["ly"], h),
}


def _mesh_hollow_cylinder(d: dict, h: float) -> np.ndarray:
    ri, ro = d["inner_diameter"] / 2.0, d["outer_diameter"] / 2.0
    length = d["length"]
    outer = _mesh_cylinder_shell(ro, length, h, outward=True)
    inner = _mesh_cylinder_shell(ri, length, h, outward=False)
    top = _mesh_annulus(ri, ro, h, up=True)
    top[:, :, 2] += length / 2.0
    bottom = _mesh_annulus(ri, ro, h, up=False)
    bottom[:, :, 2] -= length / 2.0
    return np.concatenate([outer, inner, top, bottom], axis=0)


_MESHERS["hollow-cylinder"] = _mesh_hollow_cylinder

#: tolerance on per-primitive mesh area versus the closed-form area
AREA_TOLERANCE = 0.02


def mesh_surface(
    primitives: list[ElectrodePrimitive] | ElectrodePrimitive,
    h_um: float,
) -> PanelMesh:
    """Triangulate every primitive surface at target edge length ``h_um``.

    Panels are merged in primitive order, then local panel order, so the
    result is deterministic.  Raises ResolutionError when ``h_um`` exceeds
    a primitive's smallest feature or the area check fails.
    """
    if isinstance(primitives, ElectrodePrimitive):
        primitives = [primitives]
    if not h_um > 0.0:
        raise ParameterError(f"mesh resolution h must be positive, got {h_um}")
    for prim in primitives:
        feature = prim.smallest_feature_um()
        if h_um > feature:
            raise ResolutionError(
                f"h = {h_um} um exceeds the smallest feature ({feature:.3g} um) "
                f"of {prim.label} ({prim.kind})"
            )

    all_tris, labels, prim_idx = [], [], []
    for k, prim in enumerate(primitives):
        local = _MESHERS[prim.kind](prim.dims_um, h_um)
        lab = local @ prim.frame_matrix.T + prim.center
        all_tris.append(lab * UM)
        labels += [prim.label] * len(local)
        prim_idx += [k] * len(local)

    vertices = np.concatenate(all_tris, axis=0)
    e1 = vertices[:, 1] - vertices[:, 0]
    e2 = vertices[:, 2] - vertices[:, 0]
    cross = np.cross(e1, e2)
    areas = 0.5 * np.linalg.norm(cross, axis=1)
    if np.any(areas <= 0.0):
        raise ResolutionError("degenerate zero-area panel produced; decrease h")
    normals = cross / (2.0 * areas)[:, None]
    centroids = vertices.mean(axis=1)

    mesh = PanelMesh(
        vertices_m=vertices,
        centroids_m=centroids,
        areas_m2=areas,
        normals=normals,
        labels=np.array(labels),
        primitive_index=np.array(prim_idx),
        primitives=tuple(primitives),
        h_um=float(h_um),
    )

    mesh_areas = mesh.area_by_primitive()
    for k, prim in enumerate(primitives):
        exact = prim.analytic_area_um2() * UM**2
        err = abs(mesh_areas[k] - exact) / exact
        if err > AREA_TOLERANCE:
            raise ResolutionError(
                f"mesh area of {prim.label} off by {100 * err:.2f}% "
                f"(> {100 * AREA_TOLERANCE:.0f}%); decrease h"
            )
    return mesh
