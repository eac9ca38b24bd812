"""Metric layer of the Grushin sphere.

Distances come in three flavours: the closed-form comparison function

    Phi(p, q) = |theta - theta'| + min{ |dphi|^{1/2},
                                        |dphi| / max{|tan theta|, |tan theta'|} },

the numerical sub-Riemannian distance (Dijkstra on a uniform (theta, phi)
grid for the degenerate metric ds^2 = dtheta^2 + dphi^2 / tan^2 theta), and
the great-circle distance.  Ball volumes are available in closed form
(min{1, r^2 max{r, |theta|}}) and by cell summation over the Dijkstra field.
The weight w_r(z, z') = |theta| / max{r, |theta'|} and its integral lemma
round out the module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit

from .harmonics import gauss_grid

_POLE_SNAP = 1e-3  # |theta| > pi/2 - this is treated as the pole
_PHI_COST_CLAMP = 1e3  # cap on the per-unit-phi edge cost near the equator


class ConfigurationError(ValueError):
    """A grid/resolution parameter is unusable."""


@dataclass(frozen=True)
class SpherePoint:
    """Latitude/longitude coordinates (theta, phi) of a point of S^2."""

    theta: float
    phi: float

    def __post_init__(self):
        if not -math.pi / 2 <= self.theta <= math.pi / 2:
            raise ValueError(f"theta={self.theta} outside [-pi/2, pi/2]")
        object.__setattr__(self, "phi", self.phi % (2.0 * math.pi))

    def embed(self) -> np.ndarray:
        """Unit vector (cos t cos p, cos t sin p, sin t) in R^3."""
        ct = math.cos(self.theta)
        return np.array([ct * math.cos(self.phi), ct * math.sin(self.phi), math.sin(self.theta)])


@dataclass(frozen=True)
class DistanceResult:
    value: float
    method: str
    resolution: float
    error_estimate: float


def _arc(phi1: float, phi2: float) -> float:
    d = abs(phi1 - phi2) % (2.0 * math.pi)
    return min(d, 2.0 * math.pi - d)


def phi_distance(p: SpherePoint, q: SpherePoint) -> float:
    """Closed-form distance estimate Phi; symmetric, zero iff p = q."""
    dphi = _arc(p.phi, q.phi)
    dtheta = abs(p.theta - q.theta)
    if dphi == 0.0:
        return dtheta
    tmax = max(abs(math.tan(p.theta)), abs(math.tan(q.theta)))
    if tmax == 0.0:
        branch = math.sqrt(dphi)  # the other branch is +inf by convention
    else:
        branch = min(math.sqrt(dphi), dphi / tmax)
    return dtheta + branch


def riemannian_distance(p: SpherePoint, q: SpherePoint) -> float:
    """Great-circle distance arccos(N(p) . N(q)) in [0, pi]."""
    c = float(np.dot(p.embed(), q.embed()))
    return math.acos(min(1.0, max(-1.0, c)))


def ball_volume_closed(p: SpherePoint, r: float) -> float:
    """Model ball volume min{1, r^2 max{r, |theta|}} (constant-1 normalization)."""
    if r < 0.0:
        raise ValueError("radius must be >= 0")
    return min(1.0, r * r * max(r, abs(p.theta)))


def weight(r: float, z: SpherePoint, zp: SpherePoint) -> float:
    """Equator-detecting weight |theta| / max{r, |theta'|}; not symmetric."""
    if r <= 0.0:
        raise ValueError("r must be > 0")
    return abs(z.theta) / max(r, abs(zp.theta))


# ---------------------------------------------------------------------------
# Dijkstra on the degenerate metric
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _heap_push(heap, pos, keys, size, v):
    heap[size] = v
    pos[v] = size
    i = size
    while i > 0:
        parent = (i - 1) >> 1
        if keys[heap[i]] < keys[heap[parent]]:
            heap[i], heap[parent] = heap[parent], heap[i]
            pos[heap[i]] = i
            pos[heap[parent]] = parent
            i = parent
        else:
            break
    return size + 1


@njit(cache=True, inline="always")
def _heap_decrease(heap, pos, keys, i):
    while i > 0:
        parent = (i - 1) >> 1
        if keys[heap[i]] < keys[heap[parent]]:
            heap[i], heap[parent] = heap[parent], heap[i]
            pos[heap[i]] = i
            pos[heap[parent]] = parent
            i = parent
        else:
            break


@njit(cache=True, inline="always")
def _heap_pop(heap, pos, keys, size):
    top = heap[0]
    size -= 1
    if size > 0:
        heap[0] = heap[size]
        pos[heap[0]] = 0
        i = 0
        while True:
            left = 2 * i + 1
            if left >= size:
                break
            small = left
            right = left + 1
            if right < size and keys[heap[right]] < keys[heap[left]]:
                small = right
            if keys[heap[small]] < keys[heap[i]]:
                heap[i], heap[small] = heap[small], heap[i]
                pos[heap[i]] = i
                pos[heap[small]] = small
                i = small
            else:
                break
    pos[top] = -2
    return top, size


@njit(cache=True, inline="always")
def _relax(heap, pos, dist, size, v, nd):
    if nd < dist[v]:
        dist[v] = nd
        if pos[v] == -1:
            size = _heap_push(heap, pos, dist, size, v)
        elif pos[v] >= 0:
            _heap_decrease(heap, pos, dist, pos[v])
    return size


@njit(cache=True, nogil=True)
def _dijkstra_sphere(ntheta, nphi, h_theta, h_phi, src):
    """Single-source distances on the global grid; poles are single nodes.

    Interior rows are j = 1..ntheta-2 with theta_j = -pi/2 + j*h_theta; node
    ids are (j-1)*nphi + k, then south pole, then north pole."""
    ninter = (ntheta - 2) * nphi
    south = ninter
    north = ninter + 1
    n = ninter + 2
    # per-row phi-cost factors (clamped cotangent), for flat and slanted edges
    cot_row = np.empty(ntheta)
    cot_half = np.empty(ntheta)
    for j in range(ntheta):
        th = -0.5 * math.pi + j * h_theta
        t = abs(math.tan(th))
        cot_row[j] = _PHI_COST_CLAMP if t < 1.0 / _PHI_COST_CLAMP else min(1.0 / t, _PHI_COST_CLAMP)
        tm = abs(math.tan(th + 0.5 * h_theta))
        cot_half[j] = (
            _PHI_COST_CLAMP if tm < 1.0 / _PHI_COST_CLAMP else min(1.0 / tm, _PHI_COST_CLAMP)
        )
    dist = np.full(n, np.inf)
    pos = np.full(n, -1, dtype=np.int32)
    heap = np.empty(n, dtype=np.int32)
    size = 0
    dist[src] = 0.0
    size = _heap_push(heap, pos, dist, size, src)
    while size > 0:
        u, size = _heap_pop(heap, pos, dist, size)
        du = dist[u]
        if u == south or u == north:
            j = 1 if u == south else ntheta - 2
            for k in range(nphi):
                size = _relax(heap, pos, dist, size, (j - 1) * nphi + k, du + h_theta)
            continue
        j = u // nphi + 1
        k = u % nphi
        kl = k - 1 if k > 0 else nphi - 1
        kr = k + 1 if k < nphi - 1 else 0
        base = (j - 1) * nphi
        flat = h_phi * cot_row[j]
        size = _relax(heap, pos, dist, size, base + kl, du + flat)
        size = _relax(heap, pos, dist, size, base + kr, du + flat)
        if j > 1:
            down = base - nphi
            diag = math.sqrt(h_theta * h_theta + (h_phi * cot_half[j - 1]) ** 2)
            size = _relax(heap, pos, dist, size, down + k, du + h_theta)
            size = _relax(heap, pos, dist, size, down + kl, du + diag)
            size = _relax(heap, pos, dist, size, down + kr, du + diag)
        else:
            size = _relax(heap, pos, dist, size, south, du + h_theta)
        if j < ntheta - 2:
            up = base + nphi
            diag = math.sqrt(h_theta * h_theta + (h_phi * cot_half[j]) ** 2)
            size = _relax(heap, pos, dist, size, up + k, du + h_theta)
            size = _relax(heap, pos, dist, size, up + kl, du + diag)
            size = _relax(heap, pos, dist, size, up + kr, du + diag)
        else:
            size = _relax(heap, pos, dist, size, north, du + h_theta)
    return dist


@njit(cache=True, nogil=True)
def _dijkstra_box(ntheta, nphi, theta0, h, src):
    """Single-source distances on a non-periodic local box grid."""
    n = ntheta * nphi
    cot_row = np.empty(ntheta)
    cot_half = np.empty(ntheta)
    for j in range(ntheta):
        th = theta0 + j * h
        t = abs(math.tan(th))
        cot_row[j] = _PHI_COST_CLAMP if t < 1.0 / _PHI_COST_CLAMP else min(1.0 / t, _PHI_COST_CLAMP)
        tm = abs(math.tan(th + 0.5 * h))
        cot_half[j] = (
            _PHI_COST_CLAMP if tm < 1.0 / _PHI_COST_CLAMP else min(1.0 / tm, _PHI_COST_CLAMP)
        )
    dist = np.full(n, np.inf)
    pos = np.full(n, -1, dtype=np.int32)
    heap = np.empty(n, dtype=np.int32)
    size = 0
    dist[src] = 0.0
    size = _heap_push(heap, pos, dist, size, src)
    while size > 0:
        u, size = _heap_pop(heap, pos, dist, size)
        du = dist[u]
        j = u // nphi
        k = u % nphi
        flat = h * cot_row[j]
        if k > 0:
            size = _relax(heap, pos, dist, size, u - 1, du + flat)
        if k < nphi - 1:
            size = _relax(heap, pos, dist, size, u + 1, du + flat)
        if j > 0:
            diag = math.sqrt(h * h + (h * cot_half[j - 1]) ** 2)
            size = _relax(heap, pos, dist, size, u - nphi, du + h)
            if k > 0:
                size = _relax(heap, pos, dist, size, u - nphi - 1, du + diag)
            if k < nphi - 1:
                size = _relax(heap, pos, dist, size, u - nphi + 1, du + diag)
        if j < ntheta - 1:
            diag = math.sqrt(h * h + (h * cot_half[j]) ** 2)
            size = _relax(heap, pos, dist, size, u + nphi, du + h)
            if k > 0:
                size = _relax(heap, pos, dist, size, u + nphi - 1, du + diag)
            if k < nphi - 1:
                size = _relax(heap, pos, dist, size, u + nphi + 1, du + diag)
    return dist


def _grid_shape(resolution: float) -> tuple[int, int, float, float]:
    if resolution <= 0.0:
        raise ConfigurationError("resolution must be > 0")
    if math.pi / resolution < 32 or 2.0 * math.pi / resolution < 32:
        raise ConfigurationError(
            f"resolution {resolution} too coarse: fewer than 32 cells across an axis"
        )
    ntheta = int(math.ceil(math.pi / resolution)) + 1
    nphi = int(math.ceil(2.0 * math.pi / resolution))
    return ntheta, nphi, math.pi / (ntheta - 1), 2.0 * math.pi / nphi


def _snap(p: SpherePoint, ntheta: int, nphi: int, h_theta: float, h_phi: float) -> int:
    ninter = (ntheta - 2) * nphi
    if p.theta < -math.pi / 2 + _POLE_SNAP:
        return ninter  # south pole
    if p.theta > math.pi / 2 - _POLE_SNAP:
        return ninter + 1  # north pole
    j = int(round((p.theta + math.pi / 2) / h_theta))
    j = min(max(j, 1), ntheta - 2)
    k = int(round(p.phi / h_phi)) % nphi
    return (j - 1) * nphi + k


@lru_cache(maxsize=4)
def _distance_field(resolution: float, src_node: int) -> np.ndarray:
    ntheta, nphi, h_theta, h_phi = _grid_shape(resolution)
    return _dijkstra_sphere(ntheta, nphi, h_theta, h_phi, src_node)


def eikonal_distance(p: SpherePoint, q: SpherePoint, resolution: float = 1 / 512) -> DistanceResult:
    """Numerical sub-Riemannian distance via grid Dijkstra.

    Single-source fields are cached, so batches of queries sharing a source
    point cost one Dijkstra run.
    """
    ntheta, nphi, h_theta, h_phi = _grid_shape(resolution)
    src = _snap(p, ntheta, nphi, h_theta, h_phi)
    dst = _snap(q, ntheta, nphi, h_theta, h_phi)
    field = _distance_field(resolution, src)
    value = float(field[dst])
    h = max(h_theta, h_phi)
    return DistanceResult(
        value=value,
        method="eikonal",
        resolution=resolution,
        error_estimate=4.0 * h + 0.09 * value,
    )


def eikonal_distances_from(
    p: SpherePoint, targets, resolution: float = 1 / 512
) -> list[DistanceResult]:
    """Distances from one source to many targets off a single Dijkstra run."""
    return [eikonal_distance(p, q, resolution) for q in targets]


def ball_volume_numeric(p: SpherePoint, r, resolution: float = 1 / 512) -> float | list[float]:
    """Measure of the numerical ball {z : dist(z, p) < r}, dmu = cos(theta) dtheta dphi.

    Accepts a single radius or a list (one Dijkstra run either way).  Small
    balls away from the poles are measured on a refined local box so the
    equatorial phi-thinness of sub-Riemannian balls stays resolved; large
    radii fall back to the global grid at the requested resolution.
    """
    radii = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(radii <= 0.0) or np.any(radii > math.pi + 1.0):
        raise ValueError("radii must lie in (0, pi]")
    rmax = float(radii.max())
    if rmax <= 0.45 and abs(p.theta) + rmax + 0.2 < math.pi / 2 - 0.05:
        h = min(resolution, 1 / 4096)
        margin = 0.15
        th_half = rmax + margin
        ph_half = margin + 1.7 * rmax * max(1.0, math.tan(min(abs(p.theta) + rmax, 1.45)))
        ntheta = 2 * int(math.ceil(th_half / h)) + 1
        nphi = 2 * int(math.ceil(ph_half / h)) + 1
        theta0 = p.theta - (ntheta // 2) * h
        src = (ntheta // 2) * nphi + nphi // 2
        dist = _dijkstra_box(ntheta, nphi, theta0, h, src)
        border = np.concatenate(
            [dist[:nphi], dist[-nphi:], dist[::nphi], dist[nphi - 1 :: nphi]]
        )
        if border.min() <= rmax:
            raise ConfigurationError("local volume box too small for requested radius")
        theta = theta0 + (np.arange(ntheta * nphi) // nphi) * h
        cell = np.cos(theta) * h * h
        out = [float(cell[dist < rv].sum()) for rv in radii]
    else:
        ntheta, nphi, h_theta, h_phi = _grid_shape(resolution)
        src = _snap(p, ntheta, nphi, h_theta, h_phi)
        field = _distance_field(resolution, src)
        j = np.arange((ntheta - 2) * nphi) // nphi + 1
        theta = -math.pi / 2 + j * h_theta
        cell = np.cos(theta) * h_theta * h_phi
        out = [float(cell[field[: (ntheta - 2) * nphi] < rv].sum()) for rv in radii]
    return out[0] if np.isscalar(r) else out


# ---------------------------------------------------------------------------
# weight integral lemma
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightLemmaResult:
    lhs: float
    rhs_model: float
    ratio: float
    weightsineq_constant: float


def weight_lemma_check(
    alpha: float,
    beta: float,
    r: float,
    zp: SpherePoint,
    n_x: int = 512,
    n_phi: int = 1024,
) -> WeightLemmaResult:
    """Quadrature check of the weighted integral bound.

    Computes lhs = int (1 + Phi(z, z')/r)^{-beta} (1 + w_r(z, z'))^{-alpha} dmu(z)
    with Phi standing in for the sub-Riemannian distance, compares it to the
    model volume V(z', r), and measures the pointwise constant in
    1 + w_r <= C (1 + Phi/r) over the same grid.
    """
    if not (alpha + beta > 3.0):
        raise ValueError(f"precondition alpha+beta > 3 violated: {alpha}+{beta}")
    if not alpha < 1.0:
        raise ValueError(f"precondition alpha < 1 violated: alpha={alpha}")
    if alpha < 0.0 or beta < 0.0:
        raise ValueError("alpha and beta must be >= 0")
    if r <= 0.0:
        raise ValueError("r must be > 0")
    g = gauss_grid(n_x)
    theta = np.arcsin(g.nodes)[:, None]
    phi = (2.0 * math.pi / n_phi) * np.arange(n_phi)[None, :]
    dphi = np.abs(phi - zp.phi) % (2.0 * math.pi)
    dphi = np.minimum(dphi, 2.0 * math.pi - dphi)
    tmax = np.maximum(np.abs(np.tan(theta)), abs(math.tan(zp.theta)))
    with np.errstate(divide="ignore", invalid="ignore"):
        lin = np.where(tmax > 0.0, dphi / tmax, np.inf)
    branch = np.where(dphi > 0.0, np.minimum(np.sqrt(dphi), lin), 0.0)
    big_phi = np.abs(theta - zp.theta) + branch
    w = np.abs(theta) / max(r, abs(zp.theta)) + np.zeros_like(dphi)
    integrand = (1.0 + big_phi / r) ** (-beta) * (1.0 + w) ** (-alpha)
    lhs = float(g.weights @ integrand.sum(axis=1)) * (2.0 * math.pi / n_phi)
    rhs = ball_volume_closed(zp, r)
    ineq_c = float(np.max((1.0 + w) / (1.0 + big_phi / r)))
    return WeightLemmaResult(lhs=lhs, rhs_model=rhs, ratio=lhs / rhs, weightsineq_constant=ineq_c)
