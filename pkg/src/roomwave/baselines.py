"""Classical predictors: FSPL with fitted constant, Gaussian RBF, TPS.

All three map (Tx, observations) -> RadioMap on the 32x32 grid in dB domain.
The FSPL distance term shares free_space_gain_db with the tracer, so an
empty-room traced map and fspl_predict(a=0) agree to float precision.

rbf_fit_predict is the bare kernel solver. The shipped GRBF predictor is
grbf_predict, which interpolates residuals about the fitted FSPL curve: a
gaussian kernel has no polynomial tail, so fed raw dB values it decays to
0 dB away from the observations, while the detrended form falls back to the
physics curve there. TPS carries its own affine term and needs no trend.
"""

from dataclasses import dataclass, asdict

import numpy as np

from .fresnel import free_space_gain_db
from .scene import NOISE_FLOOR_DB, OUT_OF_ROOM_SENTINEL, ObservationSet, RadioMap, Transmitter
from .trace import MIN_DIST_M

KERNELS = ("gaussian", "thin_plate_spline")


class ConditioningError(RuntimeError):
    """Interpolation system singular beyond regularization."""

    def __init__(self, message, condition_estimate):
        super().__init__(f"{message} (condition estimate {condition_estimate:.3e})")
        self.condition_estimate = condition_estimate


@dataclass
class RbfConfig:
    kernel: str = "gaussian"
    shape_epsilon: float = None     # gaussian only; None = average obs spacing
    regularization: float = 1e-10

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.shape_epsilon is not None and self.shape_epsilon <= 0:
            raise ValueError("shape_epsilon must be positive")
        if self.regularization < 0:
            raise ValueError("regularization must be >= 0")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


# ---- FSPL ----------------------------------------------------------------------

def _pixel_points3(geometry: RadioMap):
    c = geometry.pixel_centers()
    z = np.full(c.shape[:2], geometry.rx_height)
    return np.concatenate([c, z[..., None]], axis=-1)


def fspl_base(tx: Transmitter, geometry: RadioMap) -> np.ndarray:
    """(32, 32) free-space path loss (a = 0), distance floored at the guard."""
    p = _pixel_points3(geometry)
    d = np.linalg.norm(p - np.asarray(tx.position), axis=-1)
    return free_space_gain_db(np.maximum(d, MIN_DIST_M), tx.frequency_hz)


def fspl_predict(tx: Transmitter, geometry: RadioMap, a: float = 0.0,
                 noise_floor_db: float = NOISE_FLOOR_DB) -> RadioMap:
    vals = np.maximum(fspl_base(tx, geometry) + a, noise_floor_db)
    vals = np.where(geometry.valid_mask, vals, OUT_OF_ROOM_SENTINEL)
    return RadioMap(values=vals, valid_mask=geometry.valid_mask.copy(),
                    origin=geometry.origin.copy(), pixel_size=geometry.pixel_size,
                    rx_height=geometry.rx_height, map_id=geometry.map_id)


def fit_fspl_offset(obs: ObservationSet, tx: Transmitter,
                    geometry: RadioMap) -> float:
    """Closed-form MSE minimizer: mean residual against the a=0 curve."""
    if obs.rows.size == 0:
        raise ValueError("cannot fit FSPL offset without observations")
    base = fspl_base(tx, geometry)[obs.rows, obs.cols]
    return float(np.mean(obs.values_db - base))


# ---- RBF interpolation ----------------------------------------------------------

def _gaussian(r, eps):
    return np.exp(-(r / eps) ** 2)


def default_shape_epsilon(points) -> float:
    """Half the average spacing between observations: 0.5*(bbox/n)^(1/dims).

    Density-aware, so the kernel matrix stays well conditioned from a handful
    of points up to the fully observed grid, and local enough that corrections
    fade toward the trend between observations. Degenerate clouds (single
    point, all coincident) fall back to 1 m.
    """
    pts = np.asarray(points, dtype=float)
    edges = pts.max(axis=0) - pts.min(axis=0)
    edges = edges[edges > 0]
    if edges.size == 0:
        return 1.0
    spacing = float(np.power(np.prod(edges) / len(pts), 1.0 / edges.size))
    return max(0.5 * spacing, 1e-6)


def _tps(r):
    out = np.zeros_like(r)
    nz = r > 0
    out[nz] = r[nz] ** 2 * np.log(r[nz])
    return out


def _solve(a_reg, b, a_true=None):
    """Solve a_true x = b using the regularized matrix as preconditioner.

    The diagonal shift keeps the factorization stable on clustered points but
    would rob the interpolant of node exactness; iterative refinement against
    the unshifted system claws that back. Each step contracts the residual by
    roughly reg / lambda_min, so it stalls only when the kernel matrix is
    numerically rank-deficient, which is then reported.
    """
    if a_true is None:
        a_true = a_reg
    scale = max(np.abs(b).max(), 1.0)
    try:
        sol = np.linalg.solve(a_reg, b)
        resid = b - a_true @ sol
        rnorm = np.abs(resid).max()
        for _ in range(50):
            if rnorm <= 1e-13 * scale:
                break
            cand = sol + np.linalg.solve(a_reg, resid)
            cand_resid = b - a_true @ cand
            cand_norm = np.abs(cand_resid).max()
            if cand_norm >= rnorm:          # hit the numerical floor
                break
            stalled = cand_norm >= 0.5 * rnorm
            sol, resid, rnorm = cand, cand_resid, cand_norm
            if stalled:
                break
    except np.linalg.LinAlgError:
        raise ConditioningError("interpolation system is singular",
                                np.inf) from None
    if not np.isfinite(sol).all() or rnorm > 1e-6 * scale:
        raise ConditioningError("interpolation system ill-conditioned",
                                float(np.linalg.cond(a_true)))
    return sol


def rbf_fit_predict(obs: ObservationSet, config: RbfConfig,
                    geometry: RadioMap) -> RadioMap:
    n = obs.rows.size
    pts = obs.positions(geometry)
    y = np.asarray(obs.values_db, dtype=float)

    if config.kernel == "gaussian":
        if n < 1:
            raise ValueError("gaussian RBF needs at least one observation")
        eps = config.shape_epsilon
        if eps is None:
            eps = default_shape_epsilon(pts)
        rr = np.linalg.norm(pts[:, None] - pts[None, :], axis=-1)
        k = _gaussian(rr, eps)
        w = _solve(k + config.regularization * np.eye(n), y, k)

        q = geometry.pixel_centers().reshape(-1, 2)
        kq = _gaussian(np.linalg.norm(q[:, None] - pts[None, :], axis=-1), eps)
        pred = (kq @ w).reshape(geometry.values.shape)
    else:
        if n < 3:
            raise ValueError("thin-plate spline needs at least 3 observations")
        p = np.column_stack([np.ones(n), pts])
        if np.linalg.matrix_rank(p) < 3:
            raise ValueError("thin-plate spline needs non-collinear observations")
        rr = np.linalg.norm(pts[:, None] - pts[None, :], axis=-1)
        a = np.zeros((n + 3, n + 3))
        a[:n, :n] = _tps(rr)
        a[:n, n:] = p
        a[n:, :n] = p.T
        a_reg = a.copy()
        a_reg[:n, :n] += config.regularization * np.eye(n)
        b = np.concatenate([y, np.zeros(3)])
        sol = _solve(a_reg, b, a)
        w, c = sol[:n], sol[n:]

        q = geometry.pixel_centers().reshape(-1, 2)
        kq = _tps(np.linalg.norm(q[:, None] - pts[None, :], axis=-1))
        pred = (kq @ w + c[0] + q @ c[1:]).reshape(geometry.values.shape)

    vals = np.where(geometry.valid_mask, pred, OUT_OF_ROOM_SENTINEL)
    return RadioMap(values=vals, valid_mask=geometry.valid_mask.copy(),
                    origin=geometry.origin.copy(), pixel_size=geometry.pixel_size,
                    rx_height=geometry.rx_height, map_id=geometry.map_id)


def grbf_predict(obs: ObservationSet, tx: Transmitter, geometry: RadioMap,
                 config: RbfConfig = None) -> RadioMap:
    """Gaussian-kernel interpolation of FSPL-detrended observations.

    The fitted distance curve carries the large-scale decay; the kernel system
    only explains residual shadowing, and where the kernels die out the
    prediction returns to the physics curve. Observation values are still
    reproduced exactly at the nodes.
    """
    cfg = config or RbfConfig(kernel="gaussian")
    if cfg.kernel != "gaussian":
        raise ValueError("grbf_predict is the gaussian-kernel route")
    trend = fspl_base(tx, geometry) + fit_fspl_offset(obs, tx, geometry)
    residual = ObservationSet(obs.rows, obs.cols,
                              obs.values_db - trend[obs.rows, obs.cols],
                              obs.source_map_id)
    out = rbf_fit_predict(residual, cfg, geometry)
    out.values = np.where(geometry.valid_mask, out.values + trend,
                          OUT_OF_ROOM_SENTINEL)
    return out
