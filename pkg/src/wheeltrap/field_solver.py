"""Boundary-element electrostatics on labeled panel meshes.

Collocation with constant charge density per panel.  Matrix entries use
the closed-form potential of a uniformly charged flat triangle for self
and near pairs and centroid monopoles in the far field.  The dense system
is factorized once and reused for every unit-voltage electrode basis and
for the fixed facet-charge sources, so voltage and charge sweeps only
cost superposition.

Field evaluation represents each panel as one centroid charge (far) or a
midpoint-subdivided cluster of point charges (near).  Because that is a
finite sum of point charges, the evaluated potential is exactly harmonic
and E is exactly -grad(phi) away from the panels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve, get_lapack_funcs

from .constants import COULOMB_CONSTANT, E_PER_UM2, UM
from .errors import DomainError, ParameterError, ResourceError, SolverError
from .geometry import FACET_LABELS, PanelMesh

#: centroid distance (units of panel diameter) below which matrix entries
#: switch from centroid monopoles to the analytic triangle integral
NEAR_FACTOR = 4.0

#: evaluation quadrature: each panel is replaced by a fixed cluster of
#: point charges, subdivided until sub-triangles are at most this size,
#: so the evaluated potential is smooth everywhere off the surfaces
TARGET_SUB_DIAMETER_M = 25e-6
MAX_BASE_LEVEL = 3
#: extra subdivision applied to panels closer than this many diameters
BOOST_DISTANCE_FACTOR = 2.5
BOOST_LEVELS = 2

#: default cap on the collocation problem size
MAX_PANELS = 20000


def triangle_potential(points_m: np.ndarray, tri_vertices_m: np.ndarray) -> np.ndarray:
    """Closed-form integral of 1/|r - r'| over flat triangles.

    ``points_m`` is (m, 3) paired with ``tri_vertices_m`` (m, 3, 3); the
    result is the potential integral (units of length) for each pair.
    Valid for any observation point, including points in the triangle
    plane and at its centroid.
    """
    p = np.atleast_2d(points_m)
    tris = tri_vertices_m.reshape(-1, 3, 3)
    v0, v1, v2 = tris[:, 0], tris[:, 1], tris[:, 2]
    n = np.cross(v1 - v0, v2 - v0)
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    d = np.einsum("ij,ij->i", n, p - v0)
    p0 = p - d[:, None] * n
    abs_d = np.abs(d)

    total = np.zeros(len(tris))
    for a, b in ((v0, v1), (v1, v2), (v2, v0)):
        edge = b - a
        s = edge / np.linalg.norm(edge, axis=1, keepdims=True)
        m = np.cross(s, n)  # in-plane, points out of the triangle
        t = np.einsum("ij,ij->i", p0 - a, m)
        l_minus = np.einsum("ij,ij->i", a - p0, s)
        l_plus = np.einsum("ij,ij->i", b - p0, s)
        r_minus = np.linalg.norm(p - a, axis=1)
        r_plus = np.linalg.norm(p - b, axis=1)
        r0sq = t**2 + d**2

        num = r_plus + l_plus
        den = r_minus + l_minus
        alt_num = r_minus - l_minus
        alt_den = r_plus - l_plus
        use_alt = den < alt_den  # equivalent quotient, numerically safer
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(
                use_alt, np.log(alt_num / alt_den), np.log(num / den)
            )
        f = np.where(r0sq < 1e-30 * np.maximum(r_plus, r_minus) ** 2, 0.0, f)

        beta = np.arctan2(t * l_plus, r0sq + abs_d * r_plus) - np.arctan2(
            t * l_minus, r0sq + abs_d * r_minus
        )
        total += -t * f + abs_d * beta
    return total


def _subdivide_tris(tris: np.ndarray, level: int) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint subdivision; returns centroids (n, 4**level, 3) and areas."""
    out = tris.reshape(len(tris), 1, 3, 3)
    for _ in range(level):
        a, b, c = out[..., 0, :], out[..., 1, :], out[..., 2, :]
        ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
        children = np.stack(
            [
                np.stack([a, ab, ca], axis=-2),
                np.stack([ab, b, bc], axis=-2),
                np.stack([ca, bc, c], axis=-2),
                np.stack([ab, bc, ca], axis=-2),
            ],
            axis=2,
        )
        out = children.reshape(len(tris), -1, 3, 3)
    cent = out.mean(axis=-2)
    e1 = out[..., 1, :] - out[..., 0, :]
    e2 = out[..., 2, :] - out[..., 0, :]
    areas = 0.5 * np.linalg.norm(np.cross(e1, e2), axis=-1)
    return cent, areas


class _PanelSources:
    """Fixed point-charge quadrature per panel for field evaluation.

    Each panel is subdivided once, by its own diameter, into a cluster of
    sub-centroid charges; the representation does not depend on the query
    point, so phi is an exact point-charge potential: smooth, harmonic,
    and consistent with E everywhere off the surfaces.  Panels closer to
    the query than a few diameters get a finer temporary cluster.
    """

    def __init__(self, mesh: PanelMesh):
        self.mesh = mesh
        diam = mesh.diameters_m
        with np.errstate(divide="ignore"):
            want = np.ceil(np.log2(diam / TARGET_SUB_DIAMETER_M))
        base_level = np.clip(np.nan_to_num(want), 0, MAX_BASE_LEVEL).astype(int)
        self.base_level = base_level

        centers, weights, owner = [], [], []
        for level in range(MAX_BASE_LEVEL + 1):
            idx = np.flatnonzero(base_level == level)
            if len(idx) == 0:
                continue
            cent, areas = _subdivide_tris(mesh.vertices_m[idx], level)
            n_sub = cent.shape[1]
            centers.append(cent.reshape(-1, 3))
            weights.append(areas.reshape(-1))
            owner.append(np.repeat(idx, n_sub))
        owner = np.concatenate(owner)
        order = np.argsort(owner, kind="stable")  # panel-contiguous slices
        self.sub_centers = np.concatenate(centers)[order]
        self.sub_areas = np.concatenate(weights)[order]
        self.sub_owner = owner[order]
        counts = np.bincount(self.sub_owner, minlength=mesh.n_panels)
        self.sub_start = np.concatenate([[0], np.cumsum(counts)])

    def _fine_cluster(self, panel: int):
        level = self.base_level[panel] + BOOST_LEVELS
        cent, areas = _subdivide_tris(self.mesh.vertices_m[panel][None], level)
        return cent[0], areas[0]

    def phi_e(self, sigma: np.ndarray, points_m: np.ndarray, block: int = 48):
        mesh = self.mesh
        pts = np.atleast_2d(points_m)
        phi = np.zeros(len(pts))
        e_field = np.zeros((len(pts), 3))
        q = sigma[self.sub_owner] * self.sub_areas
        for start in range(0, len(pts), block):
            sl = slice(start, min(start + block, len(pts)))
            p = pts[sl]
            d = p[:, None, :] - self.sub_centers[None, :, :]
            r = np.linalg.norm(d, axis=2)
            w = COULOMB_CONSTANT * q[None, :] / r
            phi[sl] = w.sum(axis=1)
            e_field[sl] = np.einsum("bm,bmk->bk", w / r**2, d)

            cdist = np.linalg.norm(
                p[:, None, :] - mesh.centroids_m[None, :, :], axis=2
            )
            close_pairs = np.nonzero(
                cdist < BOOST_DISTANCE_FACTOR * mesh.diameters_m[None, :]
            )
            for bi, panel in zip(*close_pairs):
                if sigma[panel] == 0.0:
                    continue
                row = start + bi
                s0, s1 = self.sub_start[panel], self.sub_start[panel + 1]
                dd = pts[row] - self.sub_centers[s0:s1]
                rr = np.linalg.norm(dd, axis=1)
                ww = COULOMB_CONSTANT * q[s0:s1] / rr
                phi[row] -= ww.sum()
                e_field[row] -= (ww / rr**2) @ dd
                fine_c, fine_a = self._fine_cluster(panel)
                dd = pts[row] - fine_c
                rr = np.linalg.norm(dd, axis=1)
                ww = COULOMB_CONSTANT * sigma[panel] * fine_a / rr
                phi[row] += ww.sum()
                e_field[row] += (ww / rr**2) @ dd
        return phi, e_field


@dataclass(frozen=True)
class FieldSample:
    """Potential and field at one point; E is exactly -grad(phi)."""

    position_m: np.ndarray
    potential_v: float
    e_field_v_per_m: np.ndarray

    @property
    def position_um(self) -> np.ndarray:
        return self.position_m / UM


@dataclass(frozen=True)
class BasisSolution:
    """Per-electrode unit-voltage charge bases plus facet-charge responses.

    ``sigma_basis[label]`` holds conductor-panel charge densities (C/m^2)
    for 1 V on that electrode group with every other conductor grounded.
    ``facet_induced[facet]`` is the grounded-conductor response to a unit
    (1 C/m^2) homogeneous charge on that fiber facet.  Immutable: safe to
    share across threads.
    """

    mesh: PanelMesh
    conductor_index: np.ndarray
    sigma_basis: dict[str, np.ndarray]
    facet_induced: dict[str, np.ndarray]
    diagnostics: dict
    _sources: _PanelSources = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "_sources", _PanelSources(self.mesh))

    @property
    def conductor_labels(self) -> tuple[str, ...]:
        return tuple(self.sigma_basis.keys())

    def conductor_charge_density(
        self,
        voltages: dict[str, float] | None = None,
        sigma_pc: float = 0.0,
        sigma_mm: float = 0.0,
    ) -> np.ndarray:
        """Superposed conductor-panel densities (C/m^2); sigma in e/um^2."""
        out = np.zeros(len(self.conductor_index))
        for label, volts in (voltages or {}).items():
            if label not in self.sigma_basis:
                raise ParameterError(f"unknown electrode label {label!r}")
            if volts != 0.0:
                out += volts * self.sigma_basis[label]
        for label, sig in (("FIBER_FACET_PC", sigma_pc), ("FIBER_FACET_MM", sigma_mm)):
            if sig != 0.0:
                if label not in self.facet_induced:
                    raise ParameterError(f"mesh has no facet {label!r}")
                out += sig * E_PER_UM2 * self.facet_induced[label]
        return out

    def electrode_charge(self, label: str, sigma_cond: np.ndarray) -> float:
        """Total charge (C) on one electrode group for given densities."""
        idx_all = self.conductor_index
        mask = self.mesh.labels[idx_all] == label
        return float(np.sum(sigma_cond[mask] * self.mesh.areas_m2[idx_all][mask]))

    def _full_sigma(self, voltages, sigma_pc, sigma_mm):
        sigma = np.zeros(self.mesh.n_panels)
        sigma[self.conductor_index] = self.conductor_charge_density(
            voltages, sigma_pc, sigma_mm
        )
        for label, sig in (("FIBER_FACET_PC", sigma_pc), ("FIBER_FACET_MM", sigma_mm)):
            idx = self.mesh.panels_with_label(label)
            if len(idx):
                sigma[idx] = sig * E_PER_UM2
        return sigma

    def potential_and_field(
        self,
        points_um: np.ndarray,
        voltages: dict[str, float] | None = None,
        sigma_pc: float = 0.0,
        sigma_mm: float = 0.0,
        check_domain: bool = True,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Potential (V) and field (V/m) at points given in micrometers."""
        pts = np.atleast_2d(np.asarray(points_um, dtype=float)) * UM
        if check_domain:
            inside = np.zeros(len(pts), dtype=bool)
            for prim in self.mesh.primitives:
                inside |= prim.contains(pts)
            if np.any(inside):
                bad = pts[inside][0] / UM
                raise DomainError(
                    f"field point inside conductor volume at {bad} um"
                )
        sigma = self._full_sigma(voltages, sigma_pc, sigma_mm)
        return self._sources.phi_e(sigma, pts)


def direct_panel_field(
    mesh: PanelMesh, sigma_by_label: dict[str, float], points_um: np.ndarray
):
    """Potential/field of prescribed panel charges alone (no conductor
    response); sigma given in e/um^2.  Used as the free-space source term
    and as a test oracle against the charged-disk formula."""
    sigma = np.zeros(mesh.n_panels)
    for label, value in sigma_by_label.items():
        idx = mesh.panels_with_label(label)
        if len(idx) == 0:
            raise ParameterError(f"mesh has no panels labeled {label!r}")
        sigma[idx] = value * E_PER_UM2
    pts = np.atleast_2d(np.asarray(points_um, dtype=float)) * UM
    return _PanelSources(mesh).phi_e(sigma, pts)


def _assemble_block(mesh, targets, sources, src_diam, block=256):
    """Collocation matrix block: potential at target centroids per unit
    charge density on source panels."""
    n_t, n_s = len(targets), len(sources)
    tc = mesh.centroids_m[targets]
    sc = mesh.centroids_m[sources]
    areas = mesh.areas_m2[sources]
    verts = mesh.vertices_m[sources]
    out = np.empty((n_t, n_s))
    for start in range(0, n_t, block):
        sl = slice(start, min(start + block, n_t))
        d = tc[sl][:, None, :] - sc[None, :, :]
        r = np.linalg.norm(d, axis=2)
        with np.errstate(divide="ignore"):
            blk = areas[None, :] / r
        near = r < NEAR_FACTOR * src_diam[None, :]
        if np.any(near):
            ti, si = np.nonzero(near)
            blk[ti, si] = triangle_potential(tc[sl][ti], verts[si])
        out[sl] = blk
    return COULOMB_CONSTANT * out


def solve_basis(mesh: PanelMesh, max_panels: int = MAX_PANELS) -> BasisSolution:
    """Solve the Dirichlet problem once per electrode label and facet.

    The dense collocation matrix over conductor panels is assembled and
    LU-factorized a single time; all right-hand sides reuse the factors.
    Facet charges are fixed sources solved against grounded conductors.
    """
    if mesh.n_panels > max_panels:
        raise ResourceError(
            f"mesh has {mesh.n_panels} panels, above the cap of {max_panels}"
        )
    cond_idx = np.flatnonzero(mesh.conductor_mask)
    if len(cond_idx) == 0:
        raise ParameterError("mesh contains no conductor panels")

    diam = mesh.diameters_m
    a_matrix = _assemble_block(mesh, cond_idx, cond_idx, diam[cond_idx])
    anorm = np.abs(a_matrix).sum(axis=0).max()
    lu, piv = lu_factor(a_matrix)
    gecon = get_lapack_funcs("gecon", (a_matrix,))
    rcond, _ = gecon(lu, anorm)
    if rcond < 1e-13:
        raise SolverError(
            f"collocation system ill-conditioned: condition estimate "
            f"{1.0 / max(rcond, 1e-300):.3e}"
        )

    labels_c = mesh.labels[cond_idx]
    sigma_basis: dict[str, np.ndarray] = {}
    residuals: dict[str, float] = {}
    for label in mesh.conductor_labels:
        rhs = (labels_c == label).astype(float)
        sig = lu_solve((lu, piv), rhs)
        sigma_basis[label] = sig
        residuals[label] = float(np.max(np.abs(a_matrix @ sig - rhs)))

    facet_induced: dict[str, np.ndarray] = {}
    for label in mesh.facet_labels:
        f_idx = mesh.panels_with_label(label)
        g_cf = _assemble_block(mesh, cond_idx, f_idx, diam[f_idx])
        rhs = -g_cf.sum(axis=1)  # unit density on every facet panel
        sig = lu_solve((lu, piv), rhs)
        facet_induced[label] = sig
        residuals[label] = float(np.max(np.abs(a_matrix @ sig - rhs)))

    diagnostics = {
        "panel_count": int(mesh.n_panels),
        "conductor_panels": int(len(cond_idx)),
        "h_um": mesh.h_um,
        "condition_estimate": float(1.0 / rcond),
        "max_residual_v": residuals,
    }
    return BasisSolution(
        mesh=mesh,
        conductor_index=cond_idx,
        sigma_basis=sigma_basis,
        facet_induced=facet_induced,
        diagnostics=diagnostics,
    )


def evaluate(
    solution: BasisSolution,
    voltages: dict[str, float] | None,
    sigma_pc: float,
    sigma_mm: float,
    point_um,
) -> FieldSample:
    """Superposed potential and field at a single point (micrometers)."""
    phi, e_field = solution.potential_and_field(
        np.asarray(point_um, dtype=float).reshape(1, 3),
        voltages,
        sigma_pc,
        sigma_mm,
    )
    return FieldSample(
        position_m=np.asarray(point_um, dtype=float) * UM,
        potential_v=float(phi[0]),
        e_field_v_per_m=e_field[0],
    )
