"""End-to-end acceptance checks.

Each check prints one PASS/FAIL line. Run under pytest, or directly with
``python tests/test_acceptance.py`` for the eight lines alone.
"""
from __future__ import annotations

import functools
import math
import sys
import time

import numpy as np
import pytest

from satqkd import keyrate as kr
from satqkd.adversary import IrudParams, chi, mutual_info_bb84, mutual_info_sarg04, solve_irud_strategy
from satqkd.channel import db_from_transmittance, transmittance_from_db
from satqkd.keyrate import DetectionModel, Protocol
from satqkd.optimizer import SweepSpec, critical_distance, optimize_at_distance, sweep_curve
from satqkd.presets import PRESETS
from satqkd.reproduce import (
    REFERENCE_CRITICAL_KM,
    critical_distance_table,
    eve_crossing_loss_db,
    max_rate_table,
)
from satqkd.source import poisson_pn, poisson_tail

RESULTS: dict[int, tuple[bool, str]] = {}
ORDER = [Protocol.BB84, Protocol.SARG04, Protocol.BB84_DECOY, Protocol.SARG04_DECOY]


def record(n: int, ok: bool, detail: str) -> None:
    # printed in the terminal summary by conftest
    RESULTS[n] = (ok, detail)


# --- 1. Eve-information crossings ------------------------------------------

def check_crossings():
    t0 = time.perf_counter()
    bb = eve_crossing_loss_db(Protocol.BB84, 0.1)
    sg = eve_crossing_loss_db(Protocol.SARG04, 0.2)
    elapsed = time.perf_counter() - t0
    full_copy = eve_crossing_loss_db(Protocol.SARG04, 0.2, IrudParams(i2=1.0))
    ok = abs(bb - 13.3) <= 0.5 and abs(sg - 25.6) <= 1.5 and elapsed < 1.0
    detail = (f"BB84 mu=0.1 -> {bb:.2f} dB (13.3 +/- 0.5); SARG04 mu=0.2 -> {sg:.2f} dB "
              f"(25.6 +/- 1.5, I2={IrudParams().i2:.3f}, P_ok=1/2); {elapsed * 1e3:.0f} ms; "
              f"with I2=1 the SARG04 crossing is {full_copy:.2f} dB")
    return ok, detail


# --- 2 and 3. Tables --------------------------------------------------------

@functools.lru_cache(maxsize=None)
def _critical_cells():
    return critical_distance_table()


@functools.lru_cache(maxsize=None)
def _rate_cells():
    return max_rate_table()


def check_critical_table():
    cells = _critical_cells()
    misses, order_bad = [], []
    for c in cells:
        if c.reference is None:
            if c.computed is not None:
                misses.append(f"{c.scenario}/{c.protocol.value}: {c.computed:.0f} vs none")
        elif c.computed is None or abs(c.relative_deviation) > 0.15:
            got = "none" if c.computed is None else f"{c.computed:.0f}"
            dev = "" if c.computed is None else f" ({c.relative_deviation:+.0%})"
            misses.append(f"{c.scenario}/{c.protocol.value}: {got} vs {c.reference}{dev}")
    for name in REFERENCE_CRITICAL_KM:
        row = {c.protocol: c.computed for c in cells if c.scenario == name}
        seq = [-math.inf if row[p] is None else row[p] for p in ORDER]
        if not all(a < b for a, b in zip(seq, seq[1:])):
            order_bad.append(name)
    ok = not misses and not order_bad
    within = 16 - len(misses)
    detail = f"{within}/16 critical distances within 15%, ordering holds in {4 - len(order_bad)}/4 rows"
    if misses:
        detail += "; off: " + ", ".join(misses)
    return ok, detail


def check_rate_table():
    cells = _rate_cells()
    misses = []
    for c in cells:
        if c.reference is None:
            if c.computed is not None:
                misses.append(f"{c.scenario}/{c.protocol.value}: {c.computed:.2g} vs none")
        elif c.computed is None or abs(c.relative_deviation) > 0.25:
            got = "none" if c.computed is None else f"{c.computed:.2g}"
            misses.append(f"{c.scenario}/{c.protocol.value}: {got} vs {c.reference:.2g}")
    ok = not misses
    detail = f"{16 - len(misses)}/16 maximum rates within 25%"
    if misses:
        detail += "; off: " + ", ".join(misses)
    return ok, detail


# --- 4 and 5. Fixed-mu robustness and mu flatness on uplink 5 dB ------------

@functools.lru_cache(maxsize=None)
def _uplink_profile(protocol: Protocol):
    """Optimised and fixed-mu rates on 50 points across the secure range."""
    spec = SweepSpec(protocol=protocol, preset=PRESETS["uplink5db"])
    crit = critical_distance(spec)
    grid = np.linspace(spec.distance_min_km, crit.lower_km, 50)
    optimal = [optimize_at_distance(spec, d * 1e3) for d in grid]
    mu_star = optimal[-1].best_mu
    fixed = [optimize_at_distance(spec, d * 1e3, fixed_mu=mu_star) for d in grid]
    loss = np.array([1.0 - f.best_rate / o.best_rate for f, o in zip(fixed, optimal)])
    return grid, optimal, mu_star, loss


def check_fixed_mu():
    parts, ok = [], True
    for proto in (Protocol.BB84_DECOY, Protocol.SARG04_DECOY):
        grid, _, mu_star, loss = _uplink_profile(proto)
        k = int(np.argmax(loss))
        ok &= bool(loss.max() < 0.03)
        parts.append(f"{proto.value} mu*={mu_star:.3f} worst loss {loss.max():.2%} at {grid[k]:.0f} km")
    for proto in (Protocol.BB84, Protocol.SARG04):
        grid, _, mu_star, loss = _uplink_profile(proto)
        ok &= bool(loss[0] > 0.20)
        parts.append(f"{proto.value} mu*={mu_star:.3f} loss {loss[0]:.0%} at {grid[0]:.0f} km")
    return ok, "; ".join(parts) + " (decoy < 3%, non-decoy > 20%)"


def check_mu_flatness():
    grid, optimal, _, _ = _uplink_profile(Protocol.SARG04_DECOY)
    mus = np.array([p.best_mu for p in optimal])
    spread = mus.max() - mus.min()
    ok = spread <= 0.002 + 1e-12
    return ok, (f"SARG04-decoy optimum mu in [{mus.min():.3f}, {mus.max():.3f}] over "
                f"{grid[0]:.0f}-{grid[-1]:.0f} km, spread {spread:.3f} (<= 0.002)")


# --- 6. Decoy bound sandwich -------------------------------------------------

def check_sandwich():
    violations, checks = [], 0
    for delta in (1e-3, 1e-2, 1e-1, 0.5, 1.0):
        for y0 in (0.0, 5e-5, 1e-3):
            det = DetectionModel(delta, y0)
            y1, y2 = kr.yield_n(1, det), kr.yield_n(2, det)
            e1, e2 = kr.error_n(1, det), kr.error_n(2, det)
            bb = kr.decoy_bounds_bb84(0.5, 0.1, kr.simulate_decoy_observables([0, 0.1, 0.5], det), det)
            sg = kr.decoy_bounds_sarg04(
                0.5, 0.05, 0.15, kr.simulate_decoy_observables([0, 0.05, 0.15, 0.5], det), det)
            tests = {
                "Y1L(bb84)": bb.y1_lower <= y1, "e1U(bb84)": bb.e1_upper >= e1,
                "Y1L": sg.y1_lower <= y1, "Y2L": sg.y2_lower <= y2,
                "e1U": sg.e1_upper >= e1, "e2U": sg.e2_upper >= e2,
            }
            checks += len(tests)
            violations += [f"{k} at delta={delta:g}, Y0={y0:g}" for k, v in tests.items() if not v]
    ok = not violations
    detail = f"{checks} bound checks on a 5x3 (delta, Y0) grid, {len(violations)} violations"
    if violations:
        detail += ": " + ", ".join(violations)
    return ok, detail


# --- 7. Numerical identities ---------------------------------------------------

def check_identities():
    worst = {}
    worst["poisson"] = max(
        abs(sum(poisson_pn(mu, n) for n in range(cut + 1)) + poisson_tail(mu, cut + 1) - 1.0)
        for mu in np.linspace(0.0, 20.0, 41) for cut in range(0, 51, 5)
    )
    worst["poisson sum"] = max(
        abs(math.fsum(poisson_pn(mu, n) for n in range(200)) - 1.0) for mu in np.linspace(0.0, 20.0, 41)
    )
    gain_err = 0.0
    for mu in np.linspace(0.0, 1.0, 21):
        for delta in np.logspace(-6, 0, 13):
            for y0 in (0.0, 5e-5, 1e-3):
                series = math.fsum((y0 + 1 - (1 - delta) ** n) * poisson_pn(mu, n) for n in range(40))
                gain_err = max(gain_err, abs(series - float(kr.gain(mu, delta, y0))))
    worst["gain"] = gain_err
    worst["dB"] = max(
        abs(transmittance_from_db(db_from_transmittance(t)) / t - 1.0) for t in np.logspace(-30, 0, 301)
    )
    irud = 0.0
    for mu in np.linspace(0.02, 1.0, 50):
        p1, p2, c = poisson_pn(mu, 1), poisson_pn(mu, 2), chi(mu)
        for frac in np.linspace(0.001, 0.999, 40):
            delta = (c + frac * (p1 + p2)) / mu
            if delta > 1:
                continue
            strat = solve_irud_strategy(float(mu), float(delta))
            irud = max(irud, abs(strat.received_mean(mu) - mu * delta) / (mu * delta))
    worst["IRUD"] = irud
    ok = all(v <= 1e-12 for v in worst.values())
    return ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (each <= 1e-12)"


# --- 8. Monotonicity on the preset sweep grids -------------------------------

def check_monotonicity():
    rate_bad, eve_bad, points = [], [], 0
    for name, preset in PRESETS.items():
        for proto in ORDER:
            spec = SweepSpec(protocol=proto, preset=preset)
            rates = [p.best_rate for p in sweep_curve(spec)]
            points += len(rates)
            bad = sum(b > a for a, b in zip(rates, rates[1:]))
            if bad:
                rate_bad.append(f"{name}/{proto.value}: {bad}")
        delta = spec.transmittance(spec.distances_km() * 1e3)
        for mu in (0.05, 0.1, 0.2, 0.5, 0.9):
            for fn in (mutual_info_bb84, mutual_info_sarg04):
                eve = [fn(mu, float(d)).i_eve for d in delta]
                bad = sum(b < a for a, b in zip(eve, eve[1:]))
                if bad:
                    eve_bad.append(f"{name}/{fn.__name__}/mu={mu}: {bad}")
    ok = not rate_bad and not eve_bad
    detail = (f"{points} optimised rate points over 4 presets x 4 protocols and I_Eve at 5 "
              f"intensities: {len(rate_bad)} rate, {len(eve_bad)} I_Eve violations")
    if not ok:
        detail += ": " + ", ".join(rate_bad + eve_bad)
    return ok, detail


CHECKS = {
    1: check_crossings,
    2: check_critical_table,
    3: check_rate_table,
    4: check_fixed_mu,
    5: check_mu_flatness,
    6: check_sandwich,
    7: check_identities,
    8: check_monotonicity,
}


@pytest.mark.parametrize("n", sorted(CHECKS), ids=[f"criterion_{n}" for n in sorted(CHECKS)])
def test_acceptance(n):
    ok, detail = CHECKS[n]()
    record(n, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    failures = 0
    for n, fn in CHECKS.items():
        ok, detail = fn()
        print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}", flush=True)
        failures += not ok
    sys.exit(1 if failures else 0)
