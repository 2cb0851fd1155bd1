"""Deterministic 2.5D ray tracer: image-method reflections, slab transmissions,
single knife-edge diffraction, incoherent power summation.

Geometry is extruded in z: every reflecting facet and every transmission
boundary is a vertical plane over a footprint edge, so reflections are planar
mirrors in the x-y plane and the z-profile of any unfolded path is a straight
line. Path power is

    gain = free_space(L) * prod(reflection R) * prod(transmission T) * 10^(-J/10)

with L the 3D unfolded length, all coefficients TE/TM power-averaged, and the
sum over paths taken incoherently (random phase expectation). Transmission
through a crossed object applies the geometric mean of the slab coefficient
over its crossed boundary edges, which keeps path loss exactly reciprocal.

Edge-grazing rules are deterministic: boundary hit parameters live in the
half-open interval [0, 1) along each facet, and crossing tests ignore a 1e-6 m
neighborhood of segment endpoints so that reflection/diffraction anchor points
do not count as crossings of their own object.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fresnel import (
    free_space_gain,
    fresnel_nu,
    fresnel_slab_coefficients,
    knife_edge_loss_db,
    slab_power_coefficients,
    C_LIGHT,
)
from .scene import (
    MAP_PIXEL_M,
    MAP_SIZE,
    NOISE_FLOOR_DB,
    RX_HEIGHT_M,
    RadioMap,
    Scene,
    Transmitter,
    empty_map_for_scene,
)

__all__ = ["TraceConfig", "PropagationPath", "trace_paths", "path_loss",
           "trace_radio_map", "fresnel_slab_coefficients"]

MIN_DIST_M = 0.01           # spreading-loss distance guard near the Tx
_EPS = 1e-9
_TOUCH_M = 1e-6             # endpoint neighborhood excluded from crossing tests
_GRAZE_CAP = np.pi / 2 - 1e-9


@dataclass(slots=True)
class TraceConfig:
    max_reflections: int = 3
    max_transmissions: int = 3
    max_diffractions: int = 1
    frequency_hz: float = 5.92e9
    noise_floor_db: float = NOISE_FLOOR_DB
    rx_height_m: float = RX_HEIGHT_M
    rx_grid_step_m: float = MAP_PIXEL_M


@dataclass(slots=True)
class PropagationPath:
    """One geometric path with its interaction list and power budget."""
    interactions: list          # [{kind, object_id, point: (x, y, z)}, ...]
    total_length_m: float
    power_gain: float

    @property
    def n_reflections(self) -> int:
        return sum(1 for i in self.interactions if i["kind"] == "reflection")

    @property
    def n_transmissions(self) -> int:
        return sum(1 for i in self.interactions if i["kind"] == "transmission")

    @property
    def n_diffractions(self) -> int:
        return sum(1 for i in self.interactions if i["kind"] == "diffraction")


# ---- flattened world -------------------------------------------------------

class _World:
    """Scene flattened to edge/facet arrays for vectorized queries."""

    def __init__(self, scene: Scene):
        objs = scene.objects
        self.objs = objs
        self.n_obj = len(objs)
        self.obj_er = np.array([o.material.rel_permittivity for o in objs])
        self.obj_sig = np.array([o.material.conductivity for o in objs])
        self.obj_thick = np.array([o.material.thickness for o in objs])
        self.obj_z0 = np.array([o.z_min for o in objs])
        self.obj_z1 = np.array([o.z_max for o in objs])

        q0, q1, eobj = [], [], []
        for oi, o in enumerate(objs):
            fp = o.footprint
            q0.append(fp)
            q1.append(np.roll(fp, -1, axis=0))
            eobj.append(np.full(len(fp), oi))
        if objs:
            self.q0 = np.concatenate(q0)
            self.q1 = np.concatenate(q1)
            self.eobj = np.concatenate(eobj)
        else:
            self.q0 = np.zeros((0, 2))
            self.q1 = np.zeros((0, 2))
            self.eobj = np.zeros(0, dtype=int)
        self.n_edges = len(self.q0)
        ev = self.q1 - self.q0
        elen = np.hypot(ev[:, 0], ev[:, 1])
        elen[elen < _EPS] = 1.0
        self.edir = ev / elen[:, None]
        # CCW footprint: outward normal is the edge direction rotated -90 deg
        self.enrm = np.stack([self.edir[:, 1], -self.edir[:, 0]], axis=1)
        self.elen = elen
        self.ez0 = self.obj_z0[self.eobj] if self.n_edges else np.zeros(0)
        self.ez1 = self.obj_z1[self.eobj] if self.n_edges else np.zeros(0)
        # edges are contiguous per object: reduceat boundaries for aggregation
        counts = np.array([len(o.footprint) for o in objs], dtype=int)
        self.obj_edge_start = np.concatenate([[0], np.cumsum(counts)[:-1]]) \
            if objs else np.zeros(0, dtype=int)

        # reflection facets: edges whose front half-space reaches the interior
        ix0, iy0, ix1, iy1 = scene.interior_bounds()
        corners = np.array([[ix0, iy0], [ix1, iy0], [ix1, iy1], [ix0, iy1]])
        keep = np.zeros(self.n_edges, dtype=bool)
        for i in range(self.n_edges):
            d = (corners - self.q0[i]) @ self.enrm[i]
            keep[i] = bool((d > 1e-6).any())
        self.facet_edge = np.nonzero(keep)[0]
        self.fp0 = self.q0[self.facet_edge]
        self.fp1 = self.q1[self.facet_edge]
        self.fn = self.enrm[self.facet_edge]
        self.fdir = self.edir[self.facet_edge]
        self.flen = self.elen[self.facet_edge]
        self.fobj = self.eobj[self.facet_edge]
        self.fz0 = self.ez0[self.facet_edge]
        self.fz1 = self.ez1[self.facet_edge]
        self.n_facets = len(self.facet_edge)

        self.facing = self._facing_matrix()
        # vertical edges for diffraction: one per footprint vertex
        self.vq = self.q0.copy()
        self.vobj = self.eobj.copy()

    def _facing_matrix(self) -> np.ndarray:
        """facing[i, j]: a ray leaving facet i's front side can hit facet j's front."""
        F = self.n_facets
        if F == 0:
            return np.zeros((0, 0), dtype=bool)
        # some endpoint of j strictly in front of i, and vice versa
        def fronts(pts):
            rel0 = np.einsum("jd,id->ij", pts, self.fn) \
                - np.einsum("id,id->i", self.fp0, self.fn)[:, None]
            return rel0
        a0 = fronts(self.fp0)
        a1 = fronts(self.fp1)
        j_front_of_i = (a0 > 1e-9) | (a1 > 1e-9)
        facing = j_front_of_i & j_front_of_i.T
        np.fill_diagonal(facing, False)
        return facing


def _mirror_rows(pts: np.ndarray, p0: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Mirror each row of pts across its own line (p0[i], normal n[i])."""
    d = np.einsum("sd,sd->s", pts - p0, n)
    return pts - 2.0 * d[:, None] * n


def _sequences(world: _World, tx_xy: np.ndarray, max_refl: int):
    """Enumerate facet index sequences with their chained Tx images.

    Returns a list over path order k = 1..max_refl of (seqs (S, k) int,
    images (S, k, 2)). A sequence survives only if each successive image lies
    strictly in front of the next facet (necessary for a valid specular chain).
    """
    out = []
    F = world.n_facets
    if F == 0 or max_refl <= 0:
        return out
    d0 = np.einsum("fd,fd->f", tx_xy[None, :] - world.fp0, world.fn)
    first = np.nonzero(d0 > 1e-9)[0]
    if len(first) == 0:
        return out
    seqs = first[:, None]
    imgs = _mirror_rows(np.repeat(tx_xy[None, :], len(first), axis=0),
                        world.fp0[first], world.fn[first])[:, None, :]
    out.append((seqs, imgs))
    for _ in range(1, max_refl):
        last = seqs[:, -1]
        allowed = world.facing[last]                         # (S, F)
        rel = np.einsum("sd,fd->sf", imgs[:, -1], world.fn) \
            - np.einsum("fd,fd->f", world.fp0, world.fn)[None, :]
        mask = allowed & (rel > 1e-9)
        si, fj = np.nonzero(mask)
        if len(si) == 0:
            break
        new_seqs = np.concatenate([seqs[si], fj[:, None]], axis=1)
        new_img = _mirror_rows(imgs[si, -1], world.fp0[fj], world.fn[fj])
        imgs = np.concatenate([imgs[si], new_img[:, None, :]], axis=1)
        seqs = new_seqs
        out.append((seqs, imgs))
    return out


# ---- crossing / transmission machinery --------------------------------------

def _segment_crossings(world: _World, s0, s1, z0, z1, frequency_hz,
                       skip_obj=None):
    """Transmission bookkeeping for a batch of segments against all objects.

    s0, s1: (P, 2) segment endpoints; z0, z1: (P,) endpoint heights.
    Returns (n_pen (P, n_obj), log_T (P, n_obj)): per-object penetration
    counts (crossed boundary edges paired up, odd leftovers rounded up) and
    log power transmittance (geometric mean over the crossed edges per
    penetration, which is direction-symmetric). Crossings of skip_obj[p] are
    ignored: a diffraction path's knife-edge loss already carries its owner's
    blockage, so the owner is transparent to its own bent legs.
    """
    P = len(s0)
    if world.n_edges == 0 or P == 0:
        z = np.zeros((P, world.n_obj))
        return z.astype(int), z
    d = s1 - s0                                              # (P, 2)
    seg_len = np.hypot(d[:, 0], d[:, 1])
    e = world.q1 - world.q0                                  # (E, 2)
    denom = d[:, 0][:, None] * e[None, :, 1] - d[:, 1][:, None] * e[None, :, 0]
    ok = np.abs(denom) > _EPS
    denom = np.where(ok, denom, 1.0)
    w0 = world.q0[None, :, :] - s0[:, None, :]               # (P, E, 2)
    t = (w0[..., 0] * e[None, :, 1] - w0[..., 1] * e[None, :, 0]) / denom
    s = (w0[..., 0] * d[:, None, 1] - w0[..., 1] * d[:, None, 0]) / denom
    # endpoint guard in meters, then half-open [0, 1) along the edge
    tg = _TOUCH_M / np.maximum(seg_len, _TOUCH_M)
    cross = ok & (t > tg[:, None]) & (t < 1.0 - tg[:, None]) \
        & (s >= -1e-12) & (s < 1.0 - 1e-12)
    if skip_obj is not None:
        cross &= world.eobj[None, :] != np.asarray(skip_obj)[:, None]
    if cross.any():
        zc = z0[:, None] + t * (z1 - z0)[:, None]
        cross &= (zc >= world.ez0[None, :] - _EPS) & (zc <= world.ez1[None, :] + _EPS)

    n_obj = world.n_obj
    if not cross.any():
        z = np.zeros((P, n_obj))
        return z.astype(int), z

    # incidence cosine vs the (vertical) edge plane, from the 3D direction
    seg3 = np.hypot(seg_len, z1 - z0)
    with np.errstate(invalid="ignore", divide="ignore"):
        cosi = np.abs(d @ world.enrm.T) / np.maximum(seg3, _EPS)[:, None]
    ang = np.arccos(np.clip(cosi, 0.0, 1.0))
    ang = np.minimum(ang, _GRAZE_CAP)
    _, T = slab_power_coefficients(world.obj_er[world.eobj][None, :],
                                   world.obj_sig[world.eobj][None, :],
                                   world.obj_thick[world.eobj][None, :],
                                   ang, frequency_hz)
    with np.errstate(divide="ignore"):
        logT = np.where(cross, np.log(np.maximum(T, 1e-300)), 0.0)

    bounds = world.obj_edge_start
    n_cross = np.add.reduceat(cross.astype(np.int64), bounds, axis=1)
    sum_log = np.add.reduceat(logT, bounds, axis=1)
    n_pen = (n_cross + 1) // 2
    # geometric mean over crossed edges, applied once per penetration
    with np.errstate(invalid="ignore"):
        log_T_obj = np.where(n_cross > 0, sum_log * n_pen / np.maximum(n_cross, 1), 0.0)
    return n_pen, log_T_obj


# ---- core tracer -------------------------------------------------------------

_SEQ_CHUNK = 256
_PAIR_CHUNK = 16384


def _trace_core(scene: Scene, tx: Transmitter, rx_xy: np.ndarray, rx_z: float,
                config: TraceConfig, collect: bool = False):
    """Total incoherent power gain per receiver point; optionally path records.

    rx_xy: (N, 2). Returns (power (N,), paths: list of N lists or None).
    """
    world = _World(scene)
    f = config.frequency_hz
    tx_xy = np.asarray(tx.position[:2], dtype=float)
    tx_z = float(tx.position[2])
    N = len(rx_xy)
    power = np.zeros(N)
    paths = [[] for _ in range(N)] if collect else None
    dz = rx_z - tx_z

    def spread(length3):
        return free_space_gain(np.maximum(length3, MIN_DIST_M), f)

    # ---- line of sight (with transmissions) ----
    n_pen, log_T = _segment_crossings(
        world, np.repeat(tx_xy[None, :], N, axis=0), rx_xy,
        np.full(N, tx_z), np.full(N, rx_z), f)
    pen_tot = n_pen.sum(axis=1)
    los_ok = pen_tot <= config.max_transmissions
    d2 = np.hypot(rx_xy[:, 0] - tx_xy[0], rx_xy[:, 1] - tx_xy[1])
    d3 = np.hypot(d2, dz)
    los_gain = spread(d3) * np.exp(log_T.sum(axis=1))
    power += np.where(los_ok, los_gain, 0.0)
    los_blocked_by = n_pen > 0          # (N, n_obj): reused by diffraction
    if collect:
        for i in np.nonzero(los_ok)[0]:
            inter = _transmission_records(world, n_pen[i])
            paths[i].append(PropagationPath(inter, max(d3[i], MIN_DIST_M),
                                            float(los_gain[i])))

    # ---- specular reflections ----
    for seqs, imgs in _sequences(world, tx_xy, config.max_reflections):
        S, k = seqs.shape
        for c0 in range(0, S, _SEQ_CHUNK):
            sl = slice(c0, min(c0 + _SEQ_CHUNK, S))
            _reflection_chunk(world, seqs[sl], imgs[sl], tx_xy, tx_z, rx_xy,
                              rx_z, config, power, paths, spread)

    # ---- single knife-edge diffraction ----
    if config.max_diffractions >= 1 and world.n_edges:
        _diffraction_paths(world, tx_xy, tx_z, rx_xy, rx_z, config, power,
                           paths, spread, los_blocked_by)
    return power, paths


def _transmission_records(world: _World, n_pen_row) -> list:
    out = []
    for oi in np.nonzero(n_pen_row)[0]:
        for _ in range(int(n_pen_row[oi])):
            out.append({"kind": "transmission", "object_id": world.objs[oi].id,
                        "point": None})
    return out


def _reflection_chunk(world, seqs, imgs, tx_xy, tx_z, rx_xy, rx_z, config,
                      power, paths, spread):
    """Validate one chunk of same-order mirror sequences against all receivers."""
    S, k = seqs.shape
    N = len(rx_xy)
    f = config.frequency_hz
    dz = rx_z - tx_z

    # unfolded 2D/3D length from the deepest image
    I_k = imgs[:, k - 1]                                     # (S, 2)
    diff = I_k[:, None, :] - rx_xy[None, :, :]               # (S, N, 2)
    L2 = np.hypot(diff[..., 0], diff[..., 1])
    L2 = np.maximum(L2, _EPS)

    # first backward step on the full (S, N) grid, then compact to pairs
    fidx = seqs[:, k - 1]
    p0 = world.fp0[fidx]                                     # (S, 2)
    nrm = world.fn[fidx]
    fd = world.fdir[fidx]
    fl = world.flen[fidx]
    denom = np.einsum("snd,sd->sn", diff, nrm)
    ok = denom < -_EPS          # rx in front, image behind: d.n < 0
    denom = np.where(ok, denom, -1.0)
    t = np.einsum("snd,sd->sn", p0[:, None, :] - rx_xy[None, :, :], nrm) / denom
    ok &= (t > _EPS) & (t < 1.0 - _EPS)
    hit = rx_xy[None, :, :] + t[..., None] * diff            # (S, N, 2)
    sline = np.einsum("snd,sd->sn", hit - p0[:, None, :], fd) / fl[:, None]
    ok &= (sline >= -1e-12) & (sline < 1.0 - 1e-12)
    cum = np.hypot(hit[..., 0] - rx_xy[None, :, 0], hit[..., 1] - rx_xy[None, :, 1])
    zhit = rx_z + (tx_z - rx_z) * cum / L2
    ok &= (zhit >= world.fz0[fidx][:, None] - _EPS) & (zhit <= world.fz1[fidx][:, None] + _EPS)
    si, ni = np.nonzero(ok)
    if len(si) == 0:
        return

    P = len(si)
    pts = np.zeros((P, k, 2))
    pts[:, k - 1] = hit[si, ni]
    cumr = cum[si, ni]
    L2p = L2[si, ni]
    L3p = np.hypot(L2p, dz)
    ratio = L2p / L3p
    dhat = diff[si, ni] / L2p[:, None]
    cosr = np.zeros((P, k))
    cosr[:, k - 1] = np.abs(np.einsum("pd,pd->p", dhat, nrm[si])) * ratio
    alive = np.ones(P, dtype=bool)
    zs = np.zeros((P, k))
    zs[:, k - 1] = zhit[si, ni]

    cur = pts[:, k - 1].copy()
    for m in range(k - 1, 0, -1):
        fi = seqs[si, m - 1]
        I_m = imgs[si, m - 1]
        p0m = world.fp0[fi]
        nm = world.fn[fi]
        dm = I_m - cur
        den = np.einsum("pd,pd->p", dm, nm)
        okm = alive & (den < -_EPS)
        den = np.where(den < -_EPS, den, -1.0)
        tm = np.einsum("pd,pd->p", p0m - cur, nm) / den
        okm &= (tm > _EPS) & (tm < 1.0 - _EPS)
        hitm = cur + tm[:, None] * dm
        sm = np.einsum("pd,pd->p", hitm - p0m, world.fdir[fi]) / world.flen[fi]
        okm &= (sm >= -1e-12) & (sm < 1.0 - 1e-12)
        cumm = cumr + np.hypot(hitm[:, 0] - cur[:, 0], hitm[:, 1] - cur[:, 1])
        zm = rx_z + (tx_z - rx_z) * cumm / L2p
        okm &= (zm >= world.fz0[fi] - _EPS) & (zm <= world.fz1[fi] + _EPS)
        alive = okm
        l2 = np.hypot(dm[:, 0], dm[:, 1])
        dhm = dm / np.maximum(l2, _EPS)[:, None]
        cosr[:, m - 1] = np.abs(np.einsum("pd,pd->p", dhm, nm)) * ratio
        pts[:, m - 1] = hitm
        zs[:, m - 1] = zm
        cumr = cumm
        cur = hitm
        if not alive.any():
            return

    keep = np.nonzero(alive)[0]
    si, ni = si[keep], ni[keep]
    pts, cosr, zs = pts[keep], cosr[keep], zs[keep]
    L2p, L3p = L2p[keep], L3p[keep]

    # finish in bounded sub-batches: P x n_edges arrays appear below
    for b0 in range(0, len(keep), _PAIR_CHUNK):
        bs = slice(b0, min(b0 + _PAIR_CHUNK, len(keep)))
        _finish_reflection_pairs(world, seqs, config, tx_xy, tx_z, rx_xy, rx_z,
                                 si[bs], ni[bs], pts[bs], cosr[bs], zs[bs],
                                 L3p[bs], power, paths, spread)


def _finish_reflection_pairs(world, seqs, config, tx_xy, tx_z, rx_xy, rx_z,
                             si, ni, pts, cosr, zs, L3p, power, paths, spread):
    P, k = pts.shape[:2]
    fobj = world.fobj[seqs[si]]                              # (P, k)
    ang = np.minimum(np.arccos(np.clip(cosr, 0.0, 1.0)), _GRAZE_CAP)
    R, _ = slab_power_coefficients(world.obj_er[fobj], world.obj_sig[fobj],
                                   world.obj_thick[fobj], ang,
                                   config.frequency_hz)
    gain = spread(L3p) * np.prod(R, axis=1)

    # transmissions along the k+1 segments (tx -> p_1 -> ... -> p_k -> rx)
    start = np.repeat(tx_xy[None, :], P, axis=0)
    z_start = np.full(P, tx_z)
    pen_tot = np.zeros(P, dtype=np.int64)
    logT_tot = np.zeros(P)
    pen_by_obj = np.zeros((P, world.n_obj), dtype=np.int64) if paths is not None else None
    for m in range(k + 1):
        end = pts[:, m] if m < k else rx_xy[ni]
        z_end = zs[:, m] if m < k else np.full(P, rx_z)
        n_pen, log_T = _segment_crossings(world, start, end, z_start, z_end,
                                          config.frequency_hz)
        pen_tot += n_pen.sum(axis=1)
        logT_tot += log_T.sum(axis=1)
        if pen_by_obj is not None:
            pen_by_obj += n_pen
        start, z_start = end, z_end
    okb = pen_tot <= config.max_transmissions
    gain = gain * np.exp(logT_tot) * okb

    np.add.at(power, ni, gain)
    if paths is not None:
        for j in range(P):
            if not okb[j] or gain[j] <= 0.0:
                continue
            inter = []
            for m in range(k):
                oid = world.objs[world.fobj[seqs[si[j], m]]].id
                inter.append({"kind": "reflection", "object_id": oid,
                              "point": (float(pts[j, m, 0]), float(pts[j, m, 1]),
                                        float(zs[j, m]))})
            inter.extend(_transmission_records(world, pen_by_obj[j]))
            paths[ni[j]].append(PropagationPath(inter, float(L3p[j]), float(gain[j])))


def _diffraction_paths(world, tx_xy, tx_z, rx_xy, rx_z, config, power, paths,
                       spread, los_blocked_by):
    """One-bend paths around vertical edges of objects that block the direct ray."""
    f = config.frequency_hz
    lam = C_LIGHT / f
    N = len(rx_xy)
    E = len(world.vq)
    cand = los_blocked_by[:, world.vobj]                     # (N, E)
    ni_all, ei_all = np.nonzero(cand)
    for b0 in range(0, len(ni_all), _PAIR_CHUNK):
        bs = slice(b0, min(b0 + _PAIR_CHUNK, len(ni_all)))
        _diffraction_pairs(world, tx_xy, tx_z, rx_xy, rx_z, config, power,
                           paths, spread, lam, ni_all[bs], ei_all[bs])


def _diffraction_pairs(world, tx_xy, tx_z, rx_xy, rx_z, config, power, paths,
                       spread, lam, ni, ei):
    f = config.frequency_hz
    if len(ni) == 0:
        return
    q = world.vq[ei]
    d1_2 = np.hypot(q[:, 0] - tx_xy[0], q[:, 1] - tx_xy[1])
    d2_2 = np.hypot(rx_xy[ni, 0] - q[:, 0], rx_xy[ni, 1] - q[:, 1])
    ok = (d1_2 > _TOUCH_M) & (d2_2 > _TOUCH_M)
    tot2 = d1_2 + d2_2
    zbend = tx_z + (rx_z - tx_z) * d1_2 / np.maximum(tot2, _EPS)
    ok &= (zbend >= world.obj_z0[world.vobj[ei]] - _EPS) \
        & (zbend <= world.obj_z1[world.vobj[ei]] + _EPS)
    ni, ei, q = ni[ok], ei[ok], q[ok]
    d1_2, d2_2, zbend = d1_2[ok], d2_2[ok], zbend[ok]
    if len(ni) == 0:
        return

    d1_3 = np.hypot(d1_2, zbend - tx_z)
    d2_3 = np.hypot(d2_2, rx_z - zbend)
    # clearance: planar distance from the edge to the direct tx-rx line
    dlos = rx_xy[ni] - tx_xy
    llos = np.hypot(dlos[:, 0], dlos[:, 1])
    h = np.abs(dlos[:, 0] * (q[:, 1] - tx_xy[1]) - dlos[:, 1] * (q[:, 0] - tx_xy[0])) \
        / np.maximum(llos, _EPS)
    nu = fresnel_nu(h, np.maximum(d1_3, MIN_DIST_M), np.maximum(d2_3, MIN_DIST_M), lam)
    J = knife_edge_loss_db(nu)

    P = len(ni)
    owner = world.vobj[ei]
    txs = np.repeat(tx_xy[None, :], P, axis=0)
    pen1, logT1 = _segment_crossings(world, txs, q, np.full(P, tx_z), zbend, f,
                                     skip_obj=owner)
    pen2, logT2 = _segment_crossings(world, q, rx_xy[ni], zbend,
                                     np.full(P, rx_z), f, skip_obj=owner)
    pen_tot = pen1.sum(axis=1) + pen2.sum(axis=1)
    okp = pen_tot <= config.max_transmissions
    gain = spread(d1_3 + d2_3) * 10.0 ** (-J / 10.0) \
        * np.exp(logT1.sum(axis=1) + logT2.sum(axis=1)) * okp
    np.add.at(power, ni, gain)
    if paths is not None:
        for j in range(P):
            if not okp[j] or gain[j] <= 0.0:
                continue
            inter = [{"kind": "diffraction", "object_id": world.objs[owner[j]].id,
                      "point": (float(q[j, 0]), float(q[j, 1]), float(zbend[j]))}]
            inter.extend(_transmission_records(world, pen1[j] + pen2[j]))
            paths[ni[j]].append(PropagationPath(
                inter, float(d1_3[j] + d2_3[j]), float(gain[j])))


# ---- public operations -------------------------------------------------------

def trace_paths(scene: Scene, tx: Transmitter, rx, config: TraceConfig | None = None):
    """All propagation paths between one Tx and one Rx point.

    Returns PropagationPath records ordered by (interaction count, length).
    Raises ValueError if rx coincides with the Tx position.
    """
    config = config or TraceConfig()
    rx = np.asarray(rx, dtype=float)
    if np.allclose(rx, tx.position, atol=1e-12):
        raise ValueError("rx coincides with tx")
    _, paths = _trace_core(scene, tx, rx[None, :2], float(rx[2]), config,
                           collect=True)
    out = paths[0]
    out.sort(key=lambda p: (len(p.interactions), p.total_length_m))
    return out


def path_loss(paths, noise_floor_db: float = NOISE_FLOOR_DB) -> float:
    """Incoherent power sum in dB; empty path list hits the noise floor."""
    total = sum(p.power_gain for p in paths)
    if total <= 0.0:
        return noise_floor_db
    return max(10.0 * np.log10(total), noise_floor_db)


def trace_radio_map(scene: Scene, tx: Transmitter,
                    config: TraceConfig | None = None) -> RadioMap:
    """Ground-truth path-loss map on the fixed 32x32 receiver grid."""
    config = config or TraceConfig()
    ix0, iy0, ix1, iy1 = scene.interior_bounds()
    x, y, z = tx.position
    if not (ix0 < x < ix1 and iy0 < y < iy1 and 0.0 < z < scene.room_height):
        raise ValueError("tx outside the room interior")
    rm = empty_map_for_scene(scene, rx_height=config.rx_height_m,
                             pixel_size=config.rx_grid_step_m)
    centers = rm.pixel_centers()
    rr, cc = np.nonzero(rm.valid_mask)
    rx_xy = centers[rr, cc]
    if len(rx_xy) == 0:
        return rm
    power, _ = _trace_core(scene, tx, rx_xy, config.rx_height_m, config)
    with np.errstate(divide="ignore"):
        pl = np.where(power > 0.0, 10.0 * np.log10(np.maximum(power, 1e-300)),
                      config.noise_floor_db)
    pl = np.maximum(pl, config.noise_floor_db)
    rm.values[rr, cc] = pl
    return rm
