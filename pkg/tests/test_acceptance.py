"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest -v tests/test_acceptance.py``; the summary lines are
printed straight to the terminal (not captured). Thresholds here are the
acceptance thresholds and must not be tuned to make a run pass.
"""
import itertools
import math

import numpy as np
import pytest

from bicm4d import constellation as cons
from bicm4d import demapper, labeling, ldpc, rates, simulation
from bicm4d.channel import ChannelSpec, es_n0_to_n0, substream

SHIPPED = cons.SHIPPED


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
        return ok
    return emit


@pytest.fixture(scope="module")
def pm16_curve():
    # 1 dB steps: M=256 quadrature costs ~15 s per point
    return rates.rate_curve(cons.builtin("pm-16qam"), np.arange(-10.0, 22.0 + 1e-9, 1.0))


@pytest.fixture(scope="module")
def c16_curves():
    grid = rates.DEFAULT_GRID
    return (rates.rate_curve(cons.builtin("c4_16"), grid),
            rates.rate_curve(cons.builtin("so-pm-qpsk"), grid))


def test_criterion_01_zero_penalty(report, pm16_curve):
    q = rates.rate_curve(cons.builtin("pm-qpsk"), np.arange(-10.0, 16.0 + 1e-9, 0.5))
    dq = np.abs(q.column("mi") - q.column("gmi")).max()
    gap = pm16_curve.column("mi") - pm16_curve.column("gmi")
    i = int(np.argmax(gap))
    # GMI <= MI up to quadrature round-off
    ok = dq < 2e-3 and np.all(gap >= -1e-6)
    report(1, ok, f"PM-QPSK max|MI-GMI| = {dq:.2e} (< 2e-3); PM-16QAM GMI <= MI everywhere, "
                  f"largest gap {gap[i]:.4f} bit at {pm16_curve.es_n0_db[i]:.0f} dB, min gap {gap.min():.2e}")
    assert dq < 2e-3
    assert np.all(gap >= -1e-6)


def test_criterion_02_chain_rule(report, pm16_curve, c16_curves):
    worst = {}
    grid16 = np.arange(-10.0, 16.0 + 1e-9, 1.0)
    for name in ("pm-qpsk", "c4_16", "so-pm-qpsk"):
        cv = rates.rate_curve(cons.builtin(name), grid16)
        worst[name] = float(np.max(cv.column("gmi") - cv.column("mi")))
    worst["pm-16qam"] = float(np.max(pm16_curve.column("gmi") - pm16_curve.column("mi")))
    c256 = rates.rate_curve(cons.builtin("c4_256"), [-10.0, -4.0, 2.0, 8.0, 14.0, 20.0])
    worst["c4_256"] = float(np.max(c256.column("gmi") - c256.column("mi")))

    # 100 random labelings of PM-QPSK
    pm = cons.builtin("pm-qpsk")
    g = rates.quadrature_grid()
    snrs = [-8.0, -3.0, 0.0, 3.0, 6.0, 10.0, 14.0]
    rnd = -np.inf
    for s in range(100):
        c = pm.with_labels(substream(2024, s).permutation(16))
        for snr in snrs:
            m, b = rates.rate_terms(c, es_n0_to_n0(snr), g)
            rnd = max(rnd, b.sum() - m)
    worst["pm-qpsk x100 random labelings"] = rnd
    ok = all(v <= 2e-3 for v in worst.values())
    report(2, ok, "max(GMI - MI): " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
    assert ok


def test_criterion_03_asymptotic_gains(report):
    pm = cons.builtin("pm-qpsk")
    g16 = cons.asymptotic_gain_db(cons.builtin("c4_16"), pm)
    gso = cons.asymptotic_gain_db(cons.builtin("so-pm-qpsk"), pm)
    ok = abs(g16 - 1.11) <= 0.02 and abs(gso - 0.44) <= 0.02
    report(3, ok, f"C4,16 {g16:.4f} dB (1.11 +- 0.02), SO-PM-QPSK {gso:.4f} dB (0.44 +- 0.02)")
    assert ok


def test_criterion_04_gmi_crossing(report, c16_curves):
    a, b = c16_curves
    r = rates.find_crossing(a, b, "gmi")
    ok = r is not None and 3.0 <= r <= 3.5
    where = "none" if r is None else f"R = {r:.3f} bit/symbol"
    report(4, ok, f"C4,16 vs SO-PM-QPSK GMI crossing {where} (required in [3.0, 3.5])")
    assert ok


def test_criterion_05_low_rate_gap(report, c16_curves):
    c16 = c16_curves[0]
    eb_mi = rates.eb_n0_at_rate(c16, 1.0, "mi")
    eb_gmi = rates.eb_n0_at_rate(c16, 1.0, "gmi")
    gap = eb_gmi - eb_mi
    ok = gap >= 1.0
    report(5, ok, f"C4,16 at 1 bit/symbol: Eb/N0 MI {eb_mi:.3f} dB, GMI {eb_gmi:.3f} dB, gap {gap:.3f} dB (>= 1.0)")
    assert ok


def test_criterion_06_quadrature_vs_montecarlo(report):
    worst = 0.0
    where = ""
    for name in SHIPPED:
        c = cons.builtin(name)
        for i, snr in enumerate((-5.0, 0.0, 5.0, 10.0)):
            ch = ChannelSpec.from_es_n0_db(snr, c.dims)
            m, b = rates.rate_terms(c, ch.n0)
            est = rates.rates_montecarlo(c, ch, 1_000_000, substream(6, SHIPPED.index(name), i))
            for lab, q, mc, se in (("MI", m, est.mi, est.mi_se), ("GMI", b.sum(), est.gmi, est.gmi_se)):
                z = abs(q - mc) / se
                if z > worst:
                    worst, where = z, f"{name} {lab} at {snr:g} dB"
    ok = worst < 3.0
    report(6, ok, f"largest |quadrature - MC| = {worst:.2f} SE ({where}); 20 points x MI/GMI, 1e6 samples each")
    assert ok


def test_criterion_07_factorized_identity(report):
    worst = {}
    for name in ("pm-qpsk", "pm-16qam"):
        c = cons.builtin(name)
        rng = substream(7, len(name))
        ch = ChannelSpec.from_es_n0_db(rng.uniform(-5, 20), 4)
        y = c.points[rng.integers(0, c.M, 10_000)] + rng.normal(scale=ch.sigma, size=(10_000, 4))
        worst[name] = float(np.abs(demapper.llr_factorized(c, y, ch.n0) - demapper.llr_exact(c, y, ch.n0)).max())
    ok = all(v <= 1e-9 for v in worst.values())
    report(7, ok, "max |factorized - exact| over 1e4 outputs: "
                  + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
    assert ok


# coded BER: the r1_2 scan steps PM-QPSK in 0.25 dB until BER <= 1e-3
BER_R12_GRID = np.arange(4.0, 6.5 + 1e-9, 0.25)
BER_R910_GRID = tuple(np.arange(8.5, 11.5 + 1e-9, 0.25))
BER_SEED = 2011


def _point(c, code, es, max_blocks, min_errors):
    cfg = simulation.SimConfig(c, code, (float(es),), max_blocks=max_blocks, min_errors=min_errors,
                               seed=BER_SEED, workers=simulation.default_workers())
    return simulation.run_ber(cfg).points[0]


def test_criterion_08_coded_ordering(report):
    code = ldpc.builtin_code("r1_2")
    pm = cons.builtin("pm-qpsk")
    ref = None
    for es in BER_R12_GRID:
        p = _point(pm, code, es, 4000, 100)
        if p.ber <= 1e-3:
            ref = p
            break
    assert ref is not None, "PM-QPSK never reached BER 1e-3 on the scan grid"
    _, ref_hi = ref.ber_interval()
    parts = [f"r1_2: PM-QPSK reaches BER {ref.ber:.2e} at {ref.es_n0_db:.2f} dB"]
    ok_a = True
    for name in ("c4_16", "so-pm-qpsk"):
        p = _point(cons.builtin(name), code, ref.es_n0_db, 4000, 100)
        lo, _ = p.ber_interval()
        # the other format's 95% lower bound must exceed 3x PM-QPSK's 95% upper bound
        sep = lo > 3 * ref_hi
        ok_a &= sep
        parts.append(f"{name} BER {p.ber:.2e} (95% low {lo:.2e} vs 3x{ref_hi:.2e}: {'ok' if sep else 'no'})")

    code = ldpc.builtin_code("r9_10")
    wf = {}
    for name in ("c4_16", "so-pm-qpsk"):
        cfg = simulation.SimConfig(cons.builtin(name), code, BER_R910_GRID, max_blocks=3000, min_errors=100,
                                   seed=BER_SEED, workers=simulation.default_workers())
        wf[name] = simulation.waterfall_snr(simulation.run_ber(cfg))
    ok_b = None not in wf.values() and wf["c4_16"] < wf["so-pm-qpsk"]
    parts.append("r9_10 waterfall (BER 1e-3): " + ", ".join(
        f"{k} {'n/a' if v is None else f'{v:.2f} dB'}" for k, v in wf.items()))
    report(8, ok_a and ok_b, "; ".join(parts))
    assert ok_a, "rate-1/2 ordering"
    assert ok_b, "rate-9/10 ordering"


def test_criterion_09_shannon(report):
    spots = [-10.0, -1.5, 0.0, 7.3, 20.0]
    err = max(abs(rates.shannon_capacity(s, 4) - 2 * math.log2(1 + 10 ** (s / 10) / 2)) for s in spots)
    # extrapolate Eb/N0(R) to R -> 0 with a quadratic through small rates
    r = np.array([0.04, 0.02, 0.01])
    ebs = rates.shannon_eb_n0_db(r, 4)
    limit = float(np.polyval(np.polyfit(r, ebs, 2), 0.0))
    ok = err <= 1e-12 and abs(limit + 1.59) <= 0.05
    report(9, ok, f"max closed-form error {err:.1e} (<= 1e-12); R->0 limit {limit:.4f} dB (-1.59 +- 0.05)")
    assert ok


def test_criterion_10_labeling_oracle(report):
    rng = substream(10)
    pts = rng.normal(size=(4, 2))
    c = cons.normalize(cons.Constellation("rand4", pts, np.arange(4)))
    cfg = labeling.LabelingSearchConfig(targets_db=(3.0,), search_order=10, final_order=10, restarts=1)
    rows = []
    ok = True
    for cc in (c, cons.builtin("qpsk")):
        res = labeling.optimize_labeling(cc, cfg)
        best = max(labeling.mean_gmi(cc.with_labels(p), (3.0,)) for p in itertools.permutations(range(4)))
        good = abs(res.objective - best) <= 1e-12
        ok &= good
        rows.append(f"{cc.name} search {res.objective:.6f} vs exhaustive {best:.6f}")
    report(10, ok, "; ".join(rows) + " (24 labelings, 3 dB)")
    assert ok
