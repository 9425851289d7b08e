"""Frozen reference values and the engine checked against them.

The constants were produced once by ``tests/oracles.py`` (adaptive 1-D
integration, independent of the package) and are frozen here so that a
change in either the oracle or the engine shows up.
"""
import math

import numpy as np
import pytest

from bicm4d import constellation as cons
from bicm4d import demapper, rates
from bicm4d.channel import es_n0_to_n0

import oracles

# Es/N0 dB -> MI of PM-QPSK (= GMI, Gray product of 2-PAM)
PM_QPSK_MI = {
    -5: 0.4233768309621434,
    0: 1.161920453443392,
    5: 2.5653165153560122,
    10: 3.8014112994688025,
}
# Es/N0 dB -> (MI, GMI) of PM-16QAM (Gray product of 4-PAM)
PM16_RATES = {
    0: (1.1665977858941186, 1.0160611490796274),
    5: (2.6814793149402005, 2.5148468769585683),
    10: (4.877652416527441, 4.850746488905143),
    15: (7.15515592067264, 7.155147756181261),
}
SHANNON_4D_0DB = 2 * math.log2(1.5)


@pytest.mark.parametrize("snr", sorted(PM_QPSK_MI))
def test_oracle_reproduces_frozen_pm_qpsk(snr):
    mi, gmi = oracles.cartesian_rates(cons.pam(2), 4, snr)
    assert mi == pytest.approx(PM_QPSK_MI[snr], abs=1e-11)
    assert gmi == pytest.approx(mi, abs=1e-11)


@pytest.mark.parametrize("snr", [0, 10])
def test_oracle_reproduces_frozen_pm16(snr):
    mi, gmi = oracles.cartesian_rates(cons.pam(4), 4, snr)
    assert (mi, gmi) == pytest.approx(PM16_RATES[snr], abs=1e-10)


@pytest.mark.parametrize("snr", sorted(PM_QPSK_MI))
def test_pm_qpsk_rates_match_oracle(pm_qpsk, snr):
    mi, bit = rates.rate_terms(pm_qpsk, es_n0_to_n0(snr))
    assert mi == pytest.approx(PM_QPSK_MI[snr], abs=3e-6)
    assert bit.sum() == pytest.approx(PM_QPSK_MI[snr], abs=3e-6)
    # every bit carries a quarter: each is one 2-PAM channel
    np.testing.assert_allclose(bit, PM_QPSK_MI[snr] / 4, atol=1e-6)


@pytest.mark.parametrize("snr", sorted(PM16_RATES))
def test_pm16_rates_match_oracle(pm16, snr):
    mi, bit = rates.rate_terms(pm16, es_n0_to_n0(snr))
    assert mi == pytest.approx(PM16_RATES[snr][0], abs=1e-6)
    assert bit.sum() == pytest.approx(PM16_RATES[snr][1], abs=1e-6)


def test_shannon_frozen():
    assert rates.shannon_capacity(0.0, 4) == pytest.approx(SHANNON_4D_0DB, abs=1e-15)
    assert oracles.shannon(0.0, 4) == pytest.approx(SHANNON_4D_0DB, abs=1e-15)


def test_two_pam_llr_closed_form(rng):
    c = cons.builtin("2-pam")
    y = rng.normal(size=(200, 1)) * 2
    n0 = 0.7
    np.testing.assert_allclose(demapper.llr_exact(c, y, n0, clip=1e9)[:, 0],
                               oracles.two_pam_llr(y[:, 0], 1.0, n0), rtol=1e-12, atol=1e-12)
