"""Grid search over source intensities, rate-distance curves and critical distances.

Intensities live on an integer lattice (``index * mu_step``) so coarse and
fine grids share points exactly and results are reproducible bit for bit.
Ties between equal rates go to the smaller signal intensity.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import keyrate as kr
from .adversary import IrudParams
from .channel import db_from_transmittance, peak_diffraction_distance_m, total_transmittance
from .keyrate import Protocol, YieldModel
from .presets import ScenarioPreset, get_preset

THREADS_ENV = "SATQKD_THREADS"


@dataclass(frozen=True)
class SweepSpec:
    """What to optimise and over which grids.

    Distances are in km. ``nu_coarse_step`` and ``nu_refine_radius`` only
    matter for the two-decoy search, which scans the decoy pair coarsely
    and then refines around the best coarse pair at ``mu_step``.
    """

    protocol: Protocol
    preset: ScenarioPreset
    lmin_km: float | None = None
    lmax_km: float | None = None
    step_km: float = 10.0
    mu_step: float = 0.001
    mu_max: float = 1.0
    nu_coarse_step: float = 0.01
    nu_refine_radius: float = 0.01
    fixed_mu: float | None = None
    irud: IrudParams = field(default_factory=IrudParams)
    yield_model: YieldModel = YieldModel.ADDITIVE
    tail_bound: str = "signal"
    f_ec: float = kr.DEFAULT_EC_INEFFICIENCY

    def __post_init__(self):
        object.__setattr__(self, "protocol", Protocol(self.protocol))
        if isinstance(self.preset, str):
            object.__setattr__(self, "preset", get_preset(self.preset))
        if self.mu_step <= 0 or self.mu_max < self.mu_step:
            raise ValueError("the intensity grid must be non-empty")
        ratio = self.nu_coarse_step / self.mu_step
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("nu_coarse_step must be a whole multiple of mu_step")
        if self.step_km <= 0:
            raise ValueError("step_km must be positive")
        if self.fixed_mu is not None and not (0 < self.fixed_mu <= 1):
            raise ValueError("fixed_mu must lie in (0, 1]")

    @property
    def distance_min_km(self) -> float:
        return self.preset.min_distance_km if self.lmin_km is None else self.lmin_km

    @property
    def distance_max_km(self) -> float:
        return self.preset.distance_max_km if self.lmax_km is None else self.lmax_km

    def distances_km(self) -> np.ndarray:
        lo, hi = self.distance_min_km, self.distance_max_km
        if hi < lo:
            return np.empty(0)
        n = int(math.floor((hi - lo) / self.step_km + 1e-9)) + 1
        return lo + self.step_km * np.arange(n)

    def mu_grid(self) -> np.ndarray:
        n = int(round(self.mu_max / self.mu_step))
        return np.arange(1, n + 1) * self.mu_step

    def transmittance(self, distance_m):
        return total_transmittance(self.preset.scenario(), distance_m)


@dataclass(frozen=True)
class OptimumPoint:
    distance_m: float | None
    transmittance: float
    best_rate: float
    best_mu: float | None = None
    best_nu1: float | None = None
    best_nu2: float | None = None
    eve_info_at_optimum: float | None = None
    qber: float | None = None

    @property
    def loss_db(self) -> float:
        return db_from_transmittance(self.transmittance)


@dataclass(frozen=True)
class CriticalDistance:
    """Largest distance with a positive rate, bracketed to ``tolerance_km``.

    ``distance_km`` is None when no distance in range is secure.
    """

    distance_km: float | None
    lower_km: float | None
    upper_km: float | None


# --- per-protocol grid evaluators --------------------------------------------

def _nondecoy_rates(spec: SweepSpec, mu, delta):
    y0 = spec.preset.dark_count
    q_mu = kr.gain(mu, delta, y0, spec.yield_model)
    e_mu = kr.qber(q_mu, y0)
    i_eve = kr.eve_information(spec.protocol, mu, delta, spec.irud)
    return kr.nondecoy_rate_formula(spec.protocol.sifting, q_mu, e_mu, 1.0 - i_eve, spec.f_ec)


def _bb84_decoy_rates(spec: SweepSpec, mu, nu, delta):
    """Rate matrix over (mu, nu); pairs with nu >= mu are -inf."""
    y0 = spec.preset.dark_count
    q_mu = kr.gain(mu, delta, y0, spec.yield_model)
    q_nu = kr.gain(nu, delta, y0, spec.yield_model)
    cost = kr.error_correction_cost(q_mu, kr.qber(q_mu, y0), spec.f_ec)[:, None]
    mu_c = mu[:, None]
    y1 = kr.y1_lower_vacuum_weak(mu_c, nu[None, :], q_mu[:, None], q_nu[None, :], y0)
    valid = nu[None, :] < mu_c
    y1c = np.clip(np.where(valid, y1, 0.0), 0.0, 1.0)
    pos = y1c > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        e1 = np.where(pos, 0.5 * y0 / np.where(pos, y1c, 1.0), 0.5)
    distill = (mu_c * np.exp(-mu_c)) * y1c * kr._privacy_term(e1)
    rates = spec.protocol.sifting * (distill - cost)
    return np.where(valid, rates, -np.inf)


def _sarg04_decoy_rates(spec: SweepSpec, mu, nu1, nu2, delta):
    """Rate matrix over (mu, pair); pairs violating nu1 + nu2 < mu are -inf.

    Same bounds as :func:`keyrate.decoy_bounds_sarg04`, with the factors
    that depend on only one axis hoisted out of the matrix.
    """
    y0 = spec.preset.dark_count
    e0 = 0.5

    def observed(nu):
        q = kr.gain(nu, delta, y0, spec.yield_model)
        return q * np.exp(nu) - y0, kr.qber(q, y0, e0) * q * np.exp(nu) - e0 * y0

    # per pair
    g1, w1 = observed(nu1)
    g2, w2 = observed(nu2)
    y1 = kr.y1_lower_two_weak(nu1, nu2, g1, g2)
    y1c = np.clip(y1, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        e1 = np.where(y1c > 0, w1 / (nu1 * np.where(y1c > 0, y1c, 1.0)), 0.5)
        diff = w2 / nu2 - w1 / nu1
        e2_num = np.where(diff > 0, 2.0 * diff / (nu2 - nu1), 2.0 * w2 / nu2**2)
    single = y1c * kr._privacy_term(np.clip(e1, 0.0, 1.0))

    # per mu
    mu_c = mu[:, None]
    q_mu = kr.gain(mu_c, delta, y0, spec.yield_model)
    boltz = np.exp(-mu_c)
    cost = kr.error_correction_cost(q_mu, kr.qber(q_mu, y0), spec.f_ec)

    y2 = kr.y2_lower_two_weak(mu_c, nu1, nu2, g1, g2, q_mu, y0, y1, spec.tail_bound)
    valid = (nu1 + nu2)[None, :] < mu_c
    y2c = np.clip(np.where(valid, y2, 0.0), 0.0, 1.0)
    pos = y2c > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        e2 = e2_num / np.where(pos, y2c, 1.0)
    double = np.where(pos, y2c * kr._privacy_term(e2), 0.0)
    distill = mu_c * boltz * (single + 0.5 * mu_c * double)
    rates = spec.protocol.sifting * (distill - cost)
    return np.where(valid, rates, -np.inf)


def _pairs(idx_lo1, idx_hi1, idx_lo2, idx_hi2, step_idx=1):
    i1 = np.arange(idx_lo1, idx_hi1 + 1, step_idx)
    i2 = np.arange(idx_lo2, idx_hi2 + 1, step_idx)
    a, b = np.meshgrid(i1, i2, indexing="ij")
    keep = b > a
    return a[keep], b[keep]


def _best_sarg04(spec: SweepSpec, mu, delta, pair_idx):
    """Best (rate, mu_index, pair position) over a block of pairs."""
    i1, i2 = pair_idx
    nu1, nu2 = i1 * spec.mu_step, i2 * spec.mu_step
    best = (-np.inf, -1, -1)
    # chunk over mu to bound memory
    sums = nu1 + nu2
    for start in range(0, len(mu), 50):
        chunk = mu[start:start + 50]
        # pairs no mu in this chunk can host are skipped
        cols = np.flatnonzero(sums < chunk[-1])
        if cols.size == 0:
            continue
        block = _sarg04_decoy_rates(spec, chunk, nu1[cols], nu2[cols], delta)
        flat = int(np.argmax(block))
        r = block.flat[flat]
        if r > best[0]:
            row, col = divmod(flat, block.shape[1])
            best = (float(r), start + row, int(cols[col]))
    return best


def _search_sarg04(spec: SweepSpec, mu, delta):
    n_mu = int(round(spec.mu_max / spec.mu_step))
    coarse = int(round(spec.nu_coarse_step / spec.mu_step))
    radius = int(round(spec.nu_refine_radius / spec.mu_step))
    top = int(round(mu.max() / spec.mu_step))
    pairs = _pairs(coarse, top, coarse, top, coarse)
    keep = pairs[0] + pairs[1] < top
    pairs = (pairs[0][keep], pairs[1][keep])
    if pairs[0].size == 0:
        pairs = _pairs(1, top, 1, top)
        keep = pairs[0] + pairs[1] < top
        pairs = (pairs[0][keep], pairs[1][keep])
    if pairs[0].size == 0:
        return -np.inf, None, None, None
    rate, mi, col = _best_sarg04(spec, mu, delta, pairs)
    if not np.isfinite(rate):
        return -np.inf, None, None, None
    c1, c2 = int(pairs[0][col]), int(pairs[1][col])
    # the window always contains the incumbent, so each pass is >= the last;
    # keep sliding while the optimum lands on the window edge
    for _ in range(50):
        lo1, hi1 = max(1, c1 - radius), min(n_mu, c1 + radius)
        lo2, hi2 = max(1, c2 - radius), min(n_mu, c2 + radius)
        fine = _pairs(lo1, hi1, lo2, hi2)
        r2, mi2, col2 = _best_sarg04(spec, mu, delta, fine)
        if not r2 > rate:
            break
        rate, mi = r2, mi2
        c1, c2 = int(fine[0][col2]), int(fine[1][col2])
        if (lo1 < c1 < hi1 or c1 == 1) and (lo2 < c2 < hi2):
            break
    return rate, float(mu[mi]), c1 * spec.mu_step, c2 * spec.mu_step


def optimize_transmittance(spec: SweepSpec, delta: float, distance_m: float | None = None,
                           fixed_mu: float | None = None) -> OptimumPoint:
    """Best intensities for a channel of transmittance ``delta``."""
    fixed_mu = spec.fixed_mu if fixed_mu is None else fixed_mu
    mu = np.array([fixed_mu]) if fixed_mu is not None else spec.mu_grid()
    proto = spec.protocol
    nu1 = nu2 = None
    if proto in (Protocol.BB84, Protocol.SARG04):
        rates = _nondecoy_rates(spec, mu, delta)
        k = int(np.argmax(rates))
        rate, best_mu = float(rates[k]), float(mu[k])
    elif proto is Protocol.BB84_DECOY:
        nu = spec.mu_grid()
        nu = nu[nu < mu.max()]
        rate, best_mu = -np.inf, None
        # row blocks only see the decoys below their largest mu
        for start in range(0, len(mu), 100):
            chunk = mu[start:start + 100]
            k = int(np.searchsorted(nu, chunk[-1]))
            if k == 0:
                continue
            block = _bb84_decoy_rates(spec, chunk, nu[:k], delta)
            flat = int(np.argmax(block))
            if block.flat[flat] > rate:
                row, col = divmod(flat, k)
                rate, best_mu, nu1 = float(block.flat[flat]), float(chunk[row]), float(nu[col])
    else:
        rate, best_mu, nu1, nu2 = _search_sarg04(spec, mu, delta)
        rate = float(rate)
    if not rate > 0:
        return OptimumPoint(distance_m=distance_m, transmittance=float(delta), best_rate=0.0)
    eve = float(kr.eve_information(proto, best_mu, delta, spec.irud))
    q_mu = kr.gain(best_mu, delta, spec.preset.dark_count, spec.yield_model)
    return OptimumPoint(
        distance_m=distance_m, transmittance=float(delta), best_rate=rate,
        best_mu=best_mu, best_nu1=nu1, best_nu2=nu2, eve_info_at_optimum=eve,
        qber=float(kr.qber(q_mu, spec.preset.dark_count)),
    )


def optimize_at_distance(spec: SweepSpec, distance_m: float,
                         fixed_mu: float | None = None) -> OptimumPoint:
    delta = float(spec.transmittance(distance_m))
    return optimize_transmittance(spec, delta, distance_m, fixed_mu)


def _rate_positive(spec: SweepSpec, distance_km: float) -> bool:
    return optimize_at_distance(spec, distance_km * 1e3).best_rate > 0


def critical_distance(spec: SweepSpec, tolerance_km: float = 1.0,
                      search_limit_km: float = 1e6) -> CriticalDistance:
    """Largest distance with a positive optimised rate.

    The search starts at the sweep's lower distance, doubles until the rate
    vanishes, then bisects. Beyond the far-field onset the transmittance
    falls monotonically, so the secure region is a single interval.
    """
    lo = spec.distance_min_km
    if not _rate_positive(spec, lo):
        return CriticalDistance(None, None, lo)
    hi = lo * 2.0
    while _rate_positive(spec, hi):
        lo, hi = hi, hi * 2.0
        if hi > search_limit_km:
            return CriticalDistance(math.inf, lo, None)
    while hi - lo > tolerance_km:
        mid = 0.5 * (lo + hi)
        if _rate_positive(spec, mid):
            lo = mid
        else:
            hi = mid
    return CriticalDistance(lo, lo, hi)


def max_rate(spec: SweepSpec) -> OptimumPoint:
    """Highest optimised rate over the sweep's distance range.

    Only the diffraction term depends on distance and the rate grows with
    transmittance, so the maximum sits at the in-range distance closest to
    the diffraction peak.
    """
    p = spec.preset
    peak_km = peak_diffraction_distance_m(p.transmitter, p.receiver, p.wavelength_m) / 1e3
    best_km = min(max(peak_km, spec.distance_min_km), spec.distance_max_km)
    return optimize_at_distance(spec, best_km * 1e3)


def _map(fn, items):
    threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def max_distance_mu(spec: SweepSpec) -> float | None:
    """Optimum signal intensity at the farthest secure grid distance."""
    crit = critical_distance(replace(spec, fixed_mu=None))
    if crit.distance_km is None or not math.isfinite(crit.distance_km):
        return None
    grid = spec.distances_km()
    grid = grid[grid <= crit.distance_km]
    if grid.size == 0:
        return None
    return optimize_at_distance(replace(spec, fixed_mu=None), grid[-1] * 1e3).best_mu


def sweep_curve(spec: SweepSpec, mode: str = "optimized") -> list[OptimumPoint]:
    """Optimised (``"optimized"``) or constant-intensity (``"fixed-mu"``) curve.

    In fixed-mu mode without an explicit ``spec.fixed_mu`` the signal
    intensity is pinned to its optimum at the farthest secure distance;
    decoy intensities are still optimised.
    """
    distances = spec.distances_km()
    if distances.size == 0:
        return []
    if mode == "optimized":
        fixed = spec.fixed_mu
    elif mode == "fixed-mu":
        fixed = spec.fixed_mu if spec.fixed_mu is not None else max_distance_mu(spec)
        if fixed is None:
            return [OptimumPoint(d * 1e3, float(spec.transmittance(d * 1e3)), 0.0)
                    for d in distances]
    else:
        raise ValueError(f"unknown sweep mode {mode!r}")
    return _map(lambda d: optimize_at_distance(spec, d * 1e3, fixed), list(distances))
