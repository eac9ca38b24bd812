"""Spectral calculus for the Grushin operator on the sphere.

A multiplier F acts diagonally on the spherical-harmonic basis through the
eigenvalues lambda(l, m) = l(l+1) - m^2.  This module materializes kernel
columns K(z, z') = sum F(lambda) Y(z) conj(Y(z')), measures L1 operator
norms as sups of column masses, computes the cell-sup norm ||F||_{N,2}, the
volume/distance/weight-penalized triple norm, the normalized Plancherel
block sums, heat-kernel columns with Gaussian fits, Bochner-Riesz and
Mihlin-Hoermander sweeps, and the two auxiliary inequality checks (the
weighted commutation bound and the sum-vs-integral lemma).

Columns are real and even in delta-phi by construction: the m and -m terms
are merged into a cosine series, which is evaluated with an inverse FFT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import _spectral_kernels as _k
from ._util import neumaier_sum, ordered_parallel_map
from .geometry import SpherePoint, ball_volume_closed, phi_distance
from .harmonics import gauss_grid, profile_table

TWO_PI = 2.0 * math.pi
FOUR_PI = 4.0 * math.pi

# plain-float recurrences in the column kernels are exact only below this
_COLUMN_LMAX = 1400


class ConfigurationError(ValueError):
    pass


def eigenvalue(l: int, m: int) -> float:
    """lambda(l, m) = l(l+1) - m^2, cross-checked between its factorizations."""
    if l < 0 or abs(m) > l:
        raise ValueError(f"invalid harmonic index (l={l}, m={m}): need |m| <= l")
    lam = float(l * (l + 1) - m * m)
    lam2 = (l - m + 0.5) * (l + m + 0.5) - 0.25
    assert lam == lam2, "eigenvalue factorizations disagree"
    return lam


# ---------------------------------------------------------------------------
# multiplier specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Bump:
    """Smooth bump exp(4/(b-a)^2 - 1/((u-a)(b-u))) on (a, b), peak 1."""

    a: float
    b: float

    def __post_init__(self):
        if not 0.0 <= self.a < self.b:
            raise ValueError("need 0 <= a < b")

    def evaluate(self, lam):
        lam = np.asarray(lam, dtype=float)
        inside = (lam > self.a) & (lam < self.b)
        out = np.zeros_like(lam)
        u = lam[inside]
        w = self.b - self.a
        out[inside] = np.exp(4.0 / (w * w) - 1.0 / ((u - self.a) * (self.b - u)))
        return out if out.ndim else float(out)

    def support_max(self) -> float:
        return self.b

    def critical_lams(self):
        return [0.5 * (self.a + self.b)]


@dataclass(frozen=True)
class BochnerRiesz:
    """F(lam) = (1 - t*lam)_+^delta, supported in [0, 1/t]."""

    delta: float
    t: float

    def __post_init__(self):
        if self.delta < 0.0 or self.t <= 0.0:
            raise ValueError("need delta >= 0 and t > 0")

    def evaluate(self, lam):
        lam = np.asarray(lam, dtype=float)
        out = np.maximum(1.0 - self.t * lam, 0.0) ** self.delta
        return out if out.ndim else float(out)

    def support_max(self) -> float:
        return 1.0 / self.t

    def critical_lams(self):
        return [0.0, 1.0 / self.t]


@dataclass(frozen=True)
class Heat:
    """F(lam) = exp(-r2 * lam)."""

    r2: float

    def __post_init__(self):
        if self.r2 <= 0.0:
            raise ValueError("need r2 > 0")

    def evaluate(self, lam):
        lam = np.asarray(lam, dtype=float)
        out = np.exp(-self.r2 * lam)
        return out if out.ndim else float(out)

    def support_max(self) -> float:
        return math.inf

    def critical_lams(self):
        return [0.0]

    def certified_lmax(self, tol: float = 1e-12) -> int:
        """Smallest L with sum_{l>L} (2l+1) e^{-r2 l} / (4 pi) < tol.

        Valid because min_m lambda(l, m) = lambda(l, l) = l, so the dropped
        terms are pointwise dominated via the addition theorem.
        """
        L = 1
        while self.truncation_tail(L) >= tol:
            L *= 2
            if L > 10**7:
                raise ConfigurationError("heat truncation bound did not converge")
        lo, hi = L // 2, L
        while lo + 1 < hi:
            mid = (lo + hi) // 2
            if self.truncation_tail(mid) < tol:
                hi = mid
            else:
                lo = mid
        return hi

    def truncation_tail(self, L: int) -> float:
        q = math.exp(-self.r2)
        if q >= 1.0:
            return math.inf
        # sum_{l>L} (2l+1) q^l = q^{L+1} [2((L+1) - L q)/(1-q)^2 + 1/(1-q)]
        lead = q ** (L + 1)
        return lead * (2.0 * ((L + 1) - L * q) / (1.0 - q) ** 2 + 1.0 / (1.0 - q)) / FOUR_PI


@dataclass(frozen=True)
class IndicatorZero:
    """Indicator of the eigenvalue 0 (the constant-function projection)."""

    def evaluate(self, lam):
        lam = np.asarray(lam, dtype=float)
        out = np.where(lam == 0.0, 1.0, 0.0)
        return out if out.ndim else float(out)

    def support_max(self) -> float:
        return 0.0

    def critical_lams(self):
        return [0.0]


@dataclass(frozen=True)
class Tabulated:
    """Linear interpolation of (lam, value) samples; zero outside the table."""

    lams: tuple
    values: tuple

    def evaluate(self, lam):
        lam = np.asarray(lam, dtype=float)
        out = np.interp(lam, self.lams, self.values, left=0.0, right=0.0)
        return out if out.ndim else float(out)

    def support_max(self) -> float:
        return float(max(self.lams))

    def critical_lams(self):
        return list(self.lams)


# ---------------------------------------------------------------------------
# index-set packing
# ---------------------------------------------------------------------------


def _pack_support(lam_max: float, l_cap: int):
    """Packed (mmax, lhi, start, lam) arrays for {(l,m): lambda <= lam_max, l <= l_cap}."""
    if lam_max < 0.0:
        lam_max = 0.0
    mmax = min(l_cap, int(math.floor(lam_max + 1e-9)))
    lhi = np.empty(mmax + 1, dtype=np.int64)
    for m in range(mmax + 1):
        top = int(math.floor(math.sqrt(m * m + lam_max + 0.25) - 0.5 + 1e-9))
        lhi[m] = min(l_cap, top)
    start = np.zeros(mmax + 1, dtype=np.int64)
    total = 0
    for m in range(mmax + 1):
        start[m] = total
        if lhi[m] >= m:
            total += lhi[m] - m + 1
    lam = np.empty(total)
    for m in range(mmax + 1):
        if lhi[m] < m:
            continue
        ls = np.arange(m, lhi[m] + 1, dtype=np.float64)
        lam[start[m] : start[m] + ls.shape[0]] = ls * (ls + 1.0) - float(m) * float(m)
    return mmax, lhi, start, lam


def spectral_gap_min(l_max: int = 10**4) -> float:
    """min over l <= l_max of sqrt(lambda) over positive eigenvalues."""
    best = math.inf
    for l in range(1, l_max + 1):
        lam = float(l * (l + 1) - l * l)  # minimized at m = l for each l
        if 0.0 < lam < best:
            best = lam
    return math.sqrt(best)


# ---------------------------------------------------------------------------
# kernel columns
# ---------------------------------------------------------------------------


@dataclass
class KernelColumn:
    theta_prime: float
    theta: np.ndarray
    x_weights: np.ndarray
    dphi: np.ndarray
    values: np.ndarray  # (n_theta, n_dphi), real
    spec: object
    l_max: int
    truncation_error: float

    def l1_mass(self) -> float:
        """Integral of |K| against dmu = dx dphi over the column grids."""
        return float(
            self.x_weights @ np.abs(self.values).sum(axis=1) * (TWO_PI / self.dphi.shape[0])
        )

    def l2_norm_sq(self) -> float:
        return float(self.x_weights @ (self.values**2).sum(axis=1) * (TWO_PI / self.dphi.shape[0]))


def _required_lmax(spec, sqrt_arg: bool) -> float:
    smax = spec.support_max()
    if sqrt_arg:
        smax = smax * smax if math.isfinite(smax) else math.inf
    return smax


def _fvals_for(spec, lam: np.ndarray, sqrt_arg: bool, t_scale: float = 1.0) -> np.ndarray:
    arg = np.sqrt(lam) if sqrt_arg else lam
    return np.asarray(spec.evaluate(t_scale * arg), dtype=float)


def _assemble_columns(G: np.ndarray, n_phi: int) -> np.ndarray:
    """K[..., j] = sum_m G[m, ...] cos(m * 2 pi j / n_phi) via inverse FFT."""
    mmax = G.shape[0] - 1
    if n_phi < 2 * (mmax + 1):
        raise ConfigurationError(f"n_phi={n_phi} cannot carry cosine degree {mmax}")
    cf = np.zeros(G.shape[1:] + (n_phi // 2 + 1,))
    cf[..., 0] = G[0]
    cf[..., 1 : mmax + 1] = 0.5 * np.moveaxis(G[1:], 0, -1)
    return np.fft.irfft(cf, n=n_phi, axis=-1) * n_phi


def kernel_column(
    spec,
    theta_prime: float,
    l_max: int | None = None,
    sqrt_arg: bool = False,
    n_x: int | None = None,
    n_phi: int | None = None,
    allow_truncation: bool = False,
) -> KernelColumn:
    """Materialize K(., z') on a Gauss-x by uniform-dphi grid.

    For compactly supported specs l_max must cover the support (the smallest
    admissible degree equals floor(sup support) because lambda(l, l) = l)
    unless allow_truncation is set.  Heat kinds choose their own certified
    l_max when none is given, and the truncation tail rides along.
    """
    trunc = 0.0
    req = _required_lmax(spec, sqrt_arg)
    if isinstance(spec, Heat) and not sqrt_arg:
        certified = spec.certified_lmax()
        if l_max is None:
            l_max = certified
        trunc = spec.truncation_tail(l_max)
        lam_cut = -math.log(1e-18) / spec.r2
    else:
        if l_max is None:
            raise ConfigurationError("l_max is required for this spec")
        if math.isfinite(req) and l_max < req and not allow_truncation:
            raise ConfigurationError(
                f"l_max={l_max} does not cover the spec support; need l_max >= {int(req)}"
            )
        lam_cut = req if math.isfinite(req) else float(l_max * (l_max + 1))
    if l_max > _COLUMN_LMAX:
        raise ConfigurationError(
            f"column materialization limited to l_max <= {_COLUMN_LMAX} (got {l_max})"
        )
    if n_x is None:
        n_x = 2 * l_max + 2
    if n_phi is None:
        n_phi = max(64, 4 * l_max)
    g = gauss_grid(max(n_x, 4))
    mmax, lhi, start, lam = _pack_support(min(lam_cut, l_max * (l_max + 1.0)), l_max)
    fv = _fvals_for(spec, lam, sqrt_arg)
    G = _k.gcols(mmax, lhi, start, fv, g.nodes, np.array([math.sin(theta_prime)]))
    K = _assemble_columns(G[:, :, 0], n_phi)
    return KernelColumn(
        theta_prime=theta_prime,
        theta=np.arcsin(g.nodes),
        x_weights=g.weights,
        dphi=TWO_PI * np.arange(n_phi) / n_phi,
        values=K,
        spec=spec,
        l_max=l_max,
        truncation_error=trunc,
    )


def default_theta_primes(l_max: int, n: int = 129) -> np.ndarray:
    """Base-point latitudes in [0, pi/2]: uniform + near-equator geometric +
    the critical latitudes asin(a(l_max, m)) at order quantiles."""
    uni = np.linspace(0.0, math.pi / 2, n // 2)
    geo = (math.pi / 2) * np.power(10.0, np.linspace(-4, -0.35, n // 4))
    ms = np.unique((np.linspace(0.0, 1.0, n // 4) * l_max).astype(int))
    b = ms / (l_max + 0.5)
    crit = np.arcsin(np.sqrt((1.0 - b) * (1.0 + b)))
    out = np.unique(np.concatenate([uni, geo, crit, [0.0, math.pi / 2]]))
    return out


def l1_operator_norm(
    spec,
    l_max: int,
    theta_primes=None,
    sqrt_arg: bool = False,
    n_phi: int | None = None,
    allow_truncation: bool = False,
    threads=None,
    t_scale: float = 1.0,
) -> tuple[float, np.ndarray]:
    """L1->L1 norm as the sup over base points of the column L1 mass.

    Column masses are invariant under theta' -> -theta' (simultaneous flip
    of theta), so base points are sampled in [0, pi/2].  Returns the sup and
    the per-base-point masses.
    """
    req = _required_lmax(spec, sqrt_arg)
    if math.isfinite(req):
        req = req / t_scale  # active lambda range of F(t_scale * .)
    if math.isfinite(req) and l_max < req and not allow_truncation:
        raise ConfigurationError(
            f"l_max={l_max} does not cover the spec support; need l_max >= {int(math.ceil(req))}"
        )
    if l_max > _COLUMN_LMAX:
        raise ConfigurationError(f"l_max={l_max} beyond column limit {_COLUMN_LMAX}")
    if theta_primes is None:
        theta_primes = default_theta_primes(l_max)
    theta_primes = np.asarray(theta_primes, dtype=float)
    n_x = 2 * l_max + 2
    if n_phi is None:
        n_phi = max(64, 4 * l_max)
    g = gauss_grid(n_x)
    if isinstance(spec, Heat) and not sqrt_arg:
        req = min(req, -math.log(1e-18) / (spec.r2 * t_scale))
    lam_cap = min(req if math.isfinite(req) else math.inf, l_max * (l_max + 1.0))
    mmax, lhi, start, lam = _pack_support(lam_cap, l_max)
    fv = _fvals_for(spec, lam, sqrt_arg, t_scale)
    nz = np.nonzero(fv)[0]
    if nz.shape[0] == 0:
        return 0.0, np.zeros(theta_primes.shape[0])
    xprimes = np.sin(theta_primes)

    def run(chunk):
        lo, hi = chunk
        return _k.gcols(mmax, lhi, start, fv, g.nodes[lo:hi], xprimes)

    nchunks = max(1, min(8, n_x // 64))
    bounds_ = np.linspace(0, n_x, nchunks + 1).astype(int)
    parts = ordered_parallel_map(run, list(zip(bounds_[:-1], bounds_[1:])), threads)
    G = np.concatenate(parts, axis=1)
    # trim trailing zero orders so the FFT length tracks the active degree
    nz_m = np.nonzero(np.any(G != 0.0, axis=(1, 2)))[0]
    m_active = int(nz_m.max()) if nz_m.size else 0
    n_phi_eff = max(64, min(n_phi, 1 << (4 * (m_active + 1) - 1).bit_length()))
    masses = np.empty(theta_primes.shape[0])
    for q in range(theta_primes.shape[0]):
        K = _assemble_columns(G[: m_active + 1, :, q], n_phi_eff)
        masses[q] = g.weights @ np.abs(K).sum(axis=1) * (TWO_PI / n_phi_eff)
    return float(masses.max()), masses


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


def norm_n2(spec_or_fn, n_cells: int, samples_per_cell: int = 64) -> float:
    """||F||_{N,2}: root-mean of per-cell sups of |F|^2 over [0, 1].

    The caller passes F already rescaled to [0, 1] (F(N.) semantics).  Cell
    sups are taken over dense samples plus endpoints plus any interior
    critical points the built-in kinds declare.
    """
    if n_cells < 1:
        raise ValueError("need N >= 1")
    fn = spec_or_fn.evaluate if hasattr(spec_or_fn, "evaluate") else spec_or_fn
    crits = spec_or_fn.critical_lams() if hasattr(spec_or_fn, "critical_lams") else []
    total = 0.0
    for i in range(n_cells):
        lo = i / n_cells
        hi = (i + 1) / n_cells
        xs = np.linspace(lo, hi, samples_per_cell + 2)
        xs = np.concatenate([xs, [c for c in crits if lo < c < hi]])
        vals = np.abs(np.asarray(fn(xs), dtype=float))
        total += float(np.max(vals)) ** 2
    return math.sqrt(total / n_cells)


def sobolev_norm(spec_or_fn, s: float, n_min: int = 2**14, pad_factor: float = 8.0) -> float:
    """Bessel-potential Sobolev norm ||(1+|xi|^2)^{s/2} Fhat||_{L2}.

    F must be integrable with compact support [lo, hi]; the transform is a
    DFT over [lo, hi] padded to pad_factor times the support width, refined
    until doubling the sample count moves the result by under 1 percent.
    """
    if hasattr(spec_or_fn, "support_max"):
        hi = spec_or_fn.support_max()
        lo = getattr(spec_or_fn, "a", 0.0)
        fn = spec_or_fn.evaluate
    else:
        fn, lo, hi = spec_or_fn
    if not math.isfinite(hi):
        raise ValueError("sobolev_norm needs compact support")
    width = hi - lo
    pad = 0.5 * (pad_factor - 1.0) * width
    a, b = lo - pad, hi + pad
    prev = None
    m = n_min
    while m <= 2**21:
        xs = a + (b - a) * np.arange(m) / m
        fx = np.asarray(fn(np.clip(xs, lo, hi)) * ((xs >= lo) & (xs <= hi)), dtype=float)
        dx = (b - a) / m
        ghat = np.fft.rfft(fx) * dx / math.sqrt(TWO_PI)
        xi = TWO_PI * np.fft.rfftfreq(m, d=dx)
        w = (1.0 + xi * xi) ** s * np.abs(ghat) ** 2
        # negative frequencies duplicate all bins except DC (and Nyquist for even m)
        dxi = xi[1] - xi[0]
        total = 2.0 * w.sum() - w[0] - (w[-1] if m % 2 == 0 else 0.0)
        val = math.sqrt(total * dxi)
        if prev is not None and abs(val - prev) <= 0.01 * prev:
            return val
        prev = val
        m *= 2
    raise ConfigurationError("sobolev_norm did not converge within the sample budget")


@dataclass
class TripleNormResult:
    value: float
    per_theta: np.ndarray
    theta_primes: np.ndarray
    route: str


def triple_norm(
    spec,
    p: int,
    beta: float,
    alpha: float,
    r: float,
    l_max: int,
    theta_primes=None,
    sqrt_arg: bool = False,
    n_x: int | None = None,
    n_phi: int | None = None,
    allow_truncation: bool = False,
    threads=None,
) -> TripleNormResult:
    """sup over base points of V(z',r)^{1/p'} ||(1+Phi/r)^beta (1+w_r)^alpha K(., z')||_p.

    The distance is realized by the closed-form Phi and the volume by the
    model ball volume.  Three routes, agreeing where they overlap (tested
    against each other): a Parseval sum for p=2, beta=alpha=0; a 1-D
    x-quadrature for p=2, beta=0 (the phi integral is exact by Parseval in
    delta-phi since the weights do not depend on phi); and a full 2-D column
    quadrature otherwise.
    """
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    if r <= 0.0:
        raise ValueError("r must be > 0")
    if theta_primes is None:
        theta_primes = default_theta_primes(min(l_max, _COLUMN_LMAX))
    theta_primes = np.asarray(theta_primes, dtype=float)
    if theta_primes.size == 0:
        raise ValueError("empty base-point set")
    vol = np.array([ball_volume_closed(SpherePoint(t, 0.0), r) for t in theta_primes])
    vfac = np.sqrt(vol) if p == 2 else np.ones_like(vol)

    req = _required_lmax(spec, sqrt_arg)
    if math.isfinite(req) and l_max < req and not allow_truncation:
        raise ConfigurationError(
            f"l_max={l_max} does not cover the spec support; need l_max >= {int(math.ceil(req))}"
        )
    lam_cap = min(req if math.isfinite(req) else math.inf, l_max * (l_max + 1.0))
    if isinstance(spec, Heat) and not sqrt_arg:
        lam_cap = min(lam_cap, -math.log(1e-18) / spec.r2)

    if p == 2 and beta == 0.0 and alpha == 0.0:
        mmax, lhi, start, lam = _pack_support(lam_cap, l_max)
        f2 = _fvals_for(spec, lam, sqrt_arg) ** 2
        S = _k.sum_f2y2(mmax, lhi, start, f2, np.sin(theta_primes))
        per = vfac * np.sqrt(S)
        route = "parseval"
    elif p == 2 and beta == 0.0:
        mmax, lhi, start, lam = _pack_support(lam_cap, l_max)
        fv = _fvals_for(spec, lam, sqrt_arg)
        if n_x is None:
            n_x = max(l_max + 1, 64)  # exact for the polynomial part of sum_m G_m^2
        g = gauss_grid(n_x)
        xprimes = np.sin(theta_primes)
        ybufs = _k.profile_rows_scaled(mmax, lhi, start, lam.shape[0], xprimes)

        def run(chunk):
            lo_, hi_ = chunk
            return _k.weighted_s_chunk(mmax, lhi, start, fv, g.nodes[lo_:hi_], ybufs)

        nchunks = max(1, min(16, n_x // 256))
        bnd = np.linspace(0, n_x, nchunks + 1).astype(int)
        parts = ordered_parallel_map(run, list(zip(bnd[:-1], bnd[1:])), threads)
        S = np.concatenate(parts, axis=1)  # (nq, nx)
        theta = np.arcsin(g.nodes)
        per = np.empty(theta_primes.shape[0])
        for q, tp in enumerate(theta_primes):
            wgt = (1.0 + np.abs(theta) / max(r, abs(tp))) ** (2.0 * alpha)
            per[q] = vfac[q] * math.sqrt(TWO_PI * float(g.weights @ (wgt * S[q])))
        route = "weighted-x-quadrature"
    else:
        if l_max > _COLUMN_LMAX:
            raise ConfigurationError(
                f"2-D column route limited to l_max <= {_COLUMN_LMAX} (got {l_max})"
            )
        per = np.empty(theta_primes.shape[0])
        for q, tp in enumerate(theta_primes):
            col = kernel_column(
                spec, tp, l_max, sqrt_arg, n_x, n_phi, allow_truncation=allow_truncation
            )
            dphi_arc = np.minimum(col.dphi, TWO_PI - col.dphi)
            th = col.theta[:, None]
            tmax = np.maximum(np.abs(np.tan(th)), abs(math.tan(tp)))
            with np.errstate(divide="ignore", invalid="ignore"):
                lin = np.where(tmax > 0.0, dphi_arc[None, :] / tmax, np.inf)
            branch = np.where(dphi_arc[None, :] > 0.0, np.minimum(np.sqrt(dphi_arc), lin), 0.0)
            big_phi = np.abs(th - tp) + branch
            wgt = (1.0 + big_phi / r) ** beta * (1.0 + np.abs(th) / max(r, abs(tp))) ** alpha
            wk = wgt * np.abs(col.values)
            dphi_w = TWO_PI / col.dphi.shape[0]
            if p == 1:
                per[q] = vfac[q] * float(col.x_weights @ wk.sum(axis=1)) * dphi_w
            else:
                per[q] = vfac[q] * math.sqrt(float(col.x_weights @ (wk**2).sum(axis=1)) * dphi_w)
        route = "column-quadrature"
    return TripleNormResult(
        value=float(np.max(per)), per_theta=per, theta_primes=theta_primes, route=route
    )


# ---------------------------------------------------------------------------
# Plancherel block sums
# ---------------------------------------------------------------------------


def plancherel_sum_high(i: int, eps: float, alpha: float, x: float) -> float:
    """(1/i) max{1/i, |x|}^{1-2 alpha} sum over the high-|m| block at x."""
    if not 0.0 <= alpha < 0.5:
        raise ValueError("alpha must lie in [0, 1/2)")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if i < 1:
        raise ValueError("i must be >= 1")
    raw = _k.plancherel_sums(np.array([float(x)]), i, eps, np.array([alpha]), True)[0, i - 1, 0]
    return float(raw) / i * max(1.0 / i, abs(x)) ** (1.0 - 2.0 * alpha)


def plancherel_sum_low(i: int, eps: float, x: float) -> float:
    """(1/i) sum over the low-|m| block at x."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if i < 1:
        raise ValueError("i must be >= 1")
    raw = _k.plancherel_sums(np.array([float(x)]), i, eps, np.array([0.0]), False)[0, i - 1, 0]
    return float(raw) / i


@dataclass
class PlancherelScan:
    regime: str
    eps: float
    alphas: tuple
    i_values: np.ndarray
    sup_over_x: np.ndarray  # (n_i, n_alpha)
    argmax_x: np.ndarray


def plancherel_scan(
    i_max: int,
    eps: float = 0.5,
    alphas=(0.0, 0.25, 0.45),
    regime: str = "high",
    x_grid=None,
    threads=None,
) -> PlancherelScan:
    """Sup over x of the normalized block sums for i = 1..i_max."""
    if regime not in ("high", "low"):
        raise ValueError("regime must be 'high' or 'low'")
    alphas_arr = np.asarray(alphas if regime == "high" else [0.0], dtype=float)
    if regime == "high" and np.any((alphas_arr < 0.0) | (alphas_arr >= 0.5)):
        raise ValueError("alpha must lie in [0, 1/2)")
    if x_grid is None:
        j = np.arange(513)
        x_grid = np.unique(np.abs(np.cos(math.pi * j / 512.0)))
    x_grid = np.asarray(x_grid, dtype=float)

    def run(chunk):
        return _k.plancherel_sums(chunk, i_max, eps, alphas_arr, regime == "high")

    nchunks = max(1, min(8, x_grid.shape[0] // 16))
    chunks = np.array_split(x_grid, nchunks)
    parts = ordered_parallel_map(run, chunks, threads)
    raw = np.concatenate(parts, axis=0)  # (nx, i_max, n_alpha)
    ivals = np.arange(1, i_max + 1, dtype=float)
    if regime == "high":
        norm = (1.0 / ivals)[None, :, None] * np.maximum(
            1.0 / ivals[None, :, None], np.abs(x_grid)[:, None, None]
        ) ** (1.0 - 2.0 * alphas_arr[None, None, :])
    else:
        norm = (1.0 / ivals)[None, :, None]
    vals = norm * raw
    sup = vals.max(axis=0)
    argx = x_grid[vals.argmax(axis=0)]
    return PlancherelScan(
        regime=regime,
        eps=eps,
        alphas=tuple(alphas_arr),
        i_values=ivals.astype(int),
        sup_over_x=sup,
        argmax_x=argx,
    )


# ---------------------------------------------------------------------------
# heat kernel
# ---------------------------------------------------------------------------


@dataclass
class HeatFit:
    C: float
    b: float
    residual: float
    C_hold: float
    n_points: int


def heat_column_and_fit(
    r2: float,
    theta_prime: float = 0.4,
    n_phi: int | None = None,
) -> tuple[KernelColumn, HeatFit]:
    """Heat column with certified truncation plus a Gaussian-envelope fit.

    Fits log|K| = log C - log V(z', r) - b Phi(z, z')^2 / r^2 by least
    squares over grid points with |K| > 1e-12, then reports C_hold, the
    smallest constant making the bound hold on the whole grid at the fitted
    b (so the envelope holds with (C_hold, b) by construction; the paper
    asserts existence of such constants, and b > 0 is the testable face).
    """
    spec = Heat(r2)
    col = kernel_column(spec, theta_prime, n_phi=n_phi)
    r = math.sqrt(r2)
    zp = SpherePoint(theta_prime, 0.0)
    logv = math.log(ball_volume_closed(zp, r))
    th = col.theta[:, None] + np.zeros_like(col.dphi)[None, :]
    dphi_arc = np.minimum(col.dphi, TWO_PI - col.dphi)[None, :] + np.zeros_like(col.theta)[:, None]
    mask = np.abs(col.values) > 1e-12
    if not np.any(mask):
        raise ConfigurationError("heat column everywhere below fit threshold")
    ths = th[mask]
    dps = dphi_arc[mask]
    tmax = np.maximum(np.abs(np.tan(ths)), abs(math.tan(theta_prime)))
    with np.errstate(divide="ignore", invalid="ignore"):
        lin = np.where(tmax > 0.0, dps / tmax, np.inf)
    branch = np.where(dps > 0.0, np.minimum(np.sqrt(dps), lin), 0.0)
    u = (np.abs(ths - theta_prime) + branch) ** 2 / r2
    y = np.log(np.abs(col.values[mask]))
    A = np.stack([np.ones_like(u), -u], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    intercept, b = float(coef[0]), float(coef[1])
    resid = y - A @ coef
    c_fit = math.exp(intercept + logv)
    c_hold = math.exp(float(np.max(y + b * u)) + logv)
    return col, HeatFit(
        C=c_fit,
        b=b,
        residual=float(np.sqrt(np.mean(resid**2))),
        C_hold=c_hold,
        n_points=int(mask.sum()),
    )


def heat_triple_norm_sweep(r2_values, theta_primes=None, threads=None):
    """Table of the heat triple norm over a set of r^2 values."""
    rows = []
    for r2 in r2_values:
        spec = Heat(r2)
        l_max = spec.certified_lmax()
        res = triple_norm(
            spec,
            2,
            0.0,
            0.0,
            math.sqrt(r2),
            l_max,
            theta_primes=theta_primes,
            threads=threads,
        )
        rows.append({"r2": r2, "l_max": l_max, "triple_norm": res.value})
    return rows


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def distinct_eigenvalues(l_max: int) -> np.ndarray:
    vals = set()
    for l in range(l_max + 1):
        ll = l * (l + 1)
        for m in range(l + 1):
            vals.add(ll - m * m)
    return np.array(sorted(vals), dtype=float)


@dataclass
class MihlinResult:
    sup_ratio: float
    sobolev: float
    s: float
    l_max: int
    table: list = field(default_factory=list)


def mihlin_statistic(
    spec,
    s: float,
    l_max: int,
    n_targets: int = 20,
    c_values=(0.3, 0.5, 0.8, 1.0),
    theta_primes=None,
    lambda_targets=None,
    threads=None,
) -> MihlinResult:
    """sup over t of ||F(t lambda)||_{L1->L1} / ||F||_{W^{2,s}}.

    F must be compactly supported in [1/4, 1].  The t grid is t = c/lambda*
    over eigenvalue targets lambda* (a geometric subsample of the distinct
    spectrum up to lambda(l_max, 0), snapped to actual eigenvalues) and the
    kernel sums are truncated at degree l_max; the desk-scale criterion is
    stability of the sup between consecutive l_max budgets.
    """
    lo = getattr(spec, "a", 0.25)
    hi = spec.support_max()
    if not (0.2499 <= lo and hi <= 1.0001):
        raise ValueError("mihlin spec must be supported in [1/4, 1]")
    if s <= 1.0:
        raise ValueError("need s > 1 (= d/2)")
    denom = sobolev_norm(spec, s)
    if theta_primes is None:
        theta_primes = default_theta_primes(l_max)
    lam_max_all = l_max * (l_max + 1.0)
    if lambda_targets is None:
        distinct = distinct_eigenvalues(l_max)
        distinct = distinct[distinct >= 1.0]
        want = np.geomspace(1.0, lam_max_all, n_targets)
        idx = np.unique(np.searchsorted(distinct, want).clip(0, distinct.shape[0] - 1))
        lambda_targets = distinct[idx]
    table = []
    jobs = [(lam_star, c) for lam_star in lambda_targets for c in c_values]

    def run(job):
        lam_star, c = job
        t = c / lam_star
        norm, _ = l1_operator_norm(
            spec,
            l_max,
            theta_primes=theta_primes,
            allow_truncation=True,
            threads=1,
            t_scale=t,
        )
        return norm

    norms = ordered_parallel_map(run, jobs, threads)
    for (lam_star, c), norm in zip(jobs, norms):
        table.append({"lambda_target": lam_star, "c": c, "t": c / lam_star, "l1_norm": norm})
    sup = max(row["l1_norm"] for row in table)
    return MihlinResult(sup_ratio=sup / denom, sobolev=denom, s=s, l_max=l_max, table=table)


def bochner_riesz_sweep(
    delta: float,
    r_values,
    l_max: int | None = None,
    theta_primes=None,
    threads=None,
):
    """Per-R L1 norms of (1 - lambda/R^2)_+^delta with degree cap l_max.

    The spectrum active at scale R includes near-diagonal pairs of degree up
    to R^2; the sweep truncates at l_max >= max R (default 2 max R) and
    reports the truncation as part of the row.
    """
    r_values = [float(R) for R in r_values]
    if any(R <= 0 for R in r_values):
        raise ValueError("R values must be positive")
    if l_max is None:
        l_max = int(2 * max(r_values))
    if l_max < max(r_values):
        raise ValueError("need l_max >= max R")
    if theta_primes is None:
        theta_primes = default_theta_primes(min(l_max, _COLUMN_LMAX))
    rows = []
    for R in r_values:
        spec = BochnerRiesz(delta, 1.0 / (R * R))
        norm, _masses = l1_operator_norm(
            spec,
            l_max,
            theta_primes=theta_primes,
            allow_truncation=True,
            threads=threads,
        )
        rows.append({"R": R, "l1_norm": norm, "l_max": l_max})
    norms = [r["l1_norm"] for r in rows]
    lo = min(n for n in norms if n > 0) if any(n > 0 for n in norms) else 0.0
    spread = (max(norms) / lo) if lo > 0 else math.inf
    return {"delta": delta, "rows": rows, "max_over_min": spread, "flag_unstable": spread > 3.0}


# ---------------------------------------------------------------------------
# auxiliary inequality checks
# ---------------------------------------------------------------------------


def weighted_commutation_check(coeffs: dict, alpha: float, n_quad: int = 2048):
    """Check int |tan theta|^{2 alpha} |f|^2 dmu <= sum lambda^alpha |m|^{-2 alpha} |c|^2.

    coeffs maps (l, m) with m != 0 to complex amplitudes; f is the
    corresponding finite combination of spherical harmonics.  The phi
    integral is exact (coefficient pairs with m != m' integrate to zero), so
    the left side reduces to 1-D quadratures per order; split Gauss rules
    handle the |x|^{2 alpha} kink at the equator.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if not coeffs:
        raise ValueError("empty coefficient set")
    for (l, m), c in coeffs.items():
        if m == 0:
            raise ValueError(f"coefficient at (l={l}, m={m}) violates the m != 0 precondition")
        if abs(m) > l:
            raise ValueError(f"invalid index (l={l}, m={m})")
    lmax = max(l for (l, _m) in coeffs)
    g = gauss_grid(n_quad)
    # split [-1,1] into [-1,0] and [0,1] around the |x| kink
    xs = np.concatenate([0.5 * (g.nodes - 1.0), 0.5 * (g.nodes + 1.0)])
    ws = np.concatenate([0.5 * g.weights, 0.5 * g.weights])
    table = profile_table(lmax, xs)
    from .harmonics import pair_offset

    by_m: dict[int, np.ndarray] = {}
    for (l, m), c in coeffs.items():
        row = table[pair_offset(lmax, abs(m)) + (l - abs(m))]
        prof = row if m > 0 else ((-1.0) ** abs(m)) * row
        by_m.setdefault(m, np.zeros(xs.shape[0], dtype=complex))
        by_m[m] = by_m[m] + complex(c) * prof
    tan2a = np.abs(xs / np.sqrt((1.0 - xs) * (1.0 + xs))) ** (2.0 * alpha)
    lhs = 0.0
    for m, gm in by_m.items():
        lhs += TWO_PI * float(ws @ (tan2a * np.abs(gm) ** 2))
    rhs = 0.0
    for (l, m), c in coeffs.items():
        lam = eigenvalue(l, m)
        rhs += lam**alpha * abs(m) ** (-2.0 * alpha) * abs(c) ** 2
    return lhs, rhs


@dataclass
class SumIntegralResult:
    total: float
    integral: float
    ratio: float
    bound: float
    passed: bool


def sum_integral_check(
    phi,
    points,
    interval: tuple[float, float],
    kappa: float,
    phi_deriv=None,
    n_samples: int = 1001,
) -> SumIntegralResult:
    """Check sum_{x in R cap I} phi(x) <= 2 e kappa int_I phi.

    Preconditions are enforced: R must be 1/kappa-separated, |I| >= 1/kappa,
    and |phi'| <= kappa phi is verified by sampling (finite differences when
    no derivative is supplied).  The integral is adaptive quadrature at
    relative tolerance 1e-8.
    """
    if kappa < 1.0:
        raise ValueError("kappa must be >= 1")
    a, b = interval
    if b - a < 1.0 / kappa:
        raise ValueError(f"interval length {b - a} below the 1/kappa = {1 / kappa} minimum")
    pts = np.sort(np.asarray(points, dtype=float))
    if pts.shape[0] >= 2:
        sep = float(np.min(np.diff(pts)))
        if sep < 1.0 / kappa - 1e-12:
            raise ValueError(f"point set separation {sep} below 1/kappa = {1 / kappa}")
    xs = np.linspace(a, b, n_samples)
    fx = np.array([phi(x) for x in xs])
    if np.any(fx < 0.0):
        raise ValueError("phi must be nonnegative")
    if phi_deriv is not None:
        dfx = np.array([phi_deriv(x) for x in xs])
    else:
        h = (b - a) * 1e-7
        dfx = np.array([(phi(x + h) - phi(x - h)) / (2.0 * h) for x in xs])
    bad = np.abs(dfx) > kappa * fx * (1.0 + 1e-6) + 1e-12
    if np.any(bad):
        x_bad = xs[np.argmax(bad)]
        raise ValueError(f"|phi'| <= kappa phi fails near x = {x_bad}")
    inside = pts[(pts >= a) & (pts <= b)]
    total = neumaier_sum([phi(x) for x in inside])
    integral, _err = quad(phi, a, b, epsrel=1e-8, limit=400)
    bound = 2.0 * math.e * kappa
    ratio = total / integral if integral > 0 else math.inf
    return SumIntegralResult(
        total=float(total),
        integral=float(integral),
        ratio=float(ratio),
        bound=bound,
        passed=bool(total <= bound * integral),
    )
