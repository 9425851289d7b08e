import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bicm4d import constellation as cons
from bicm4d.constellation import (Constellation, ConstellationError, ConstellationFileError,
                                  asymptotic_gain_db, load_constellation, make_cartesian,
                                  min_squared_distance, normalize, pam, save_constellation)


def test_pm_qpsk_points_and_labels(pm_qpsk):
    assert (pm_qpsk.M, pm_qpsk.m, pm_qpsk.dims) == (16, 4, 4)
    np.testing.assert_allclose(np.abs(pm_qpsk.points), 0.5, atol=1e-15)
    # bit k controls dimension k; bit 0 -> positive
    for i, lab in enumerate(pm_qpsk.labels):
        for k in range(4):
            bit = (lab >> (3 - k)) & 1
            assert pm_qpsk.points[i, k] == pytest.approx(0.5 * (1 - 2 * bit))


def test_two_pam_single_dimension():
    c = make_cartesian(pam(2), 1)
    np.testing.assert_allclose(c.points[:, 0], [1.0, -1.0])
    assert list(c.labels) == [0, 1]
    assert c.energy == pytest.approx(1.0, abs=1e-15)


def test_pm16_shape(pm16):
    assert (pm16.M, pm16.m, pm16.dims) == (256, 8, 4)
    assert pm16.energy == pytest.approx(1.0, abs=1e-12)


def test_four_pam_gray_levels():
    a = pam(4)
    np.testing.assert_allclose(a.levels * math.sqrt(5), [1, 3, -1, -3])
    assert np.mean(a.levels) == pytest.approx(0, abs=1e-15)
    # adjacent levels differ in exactly one bit
    order = np.argsort(a.levels)
    labs = a.labels[order]
    assert all(bin(int(x ^ y)).count("1") == 1 for x, y in zip(labs, labs[1:]))


@pytest.mark.parametrize("size", [2, 4, 8, 16])
def test_pam_gray_property(size):
    a = pam(size)
    labs = a.labels[np.argsort(a.levels)]
    assert all(bin(int(x ^ y)).count("1") == 1 for x, y in zip(labs, labs[1:]))
    assert np.mean(a.levels**2) == pytest.approx(1.0)


@pytest.mark.parametrize("size,dims", [(2, 4), (4, 4), (4, 2), (8, 1)])
def test_cartesian_gray_property(size, dims):
    # every nearest-neighbor pair differs in exactly one bit
    c = make_cartesian(pam(size), dims)
    d2, _ = c.geometry
    dmin = min_squared_distance(c)
    ii, jj = np.nonzero(np.isclose(d2, dmin) & ~np.eye(c.M, dtype=bool))
    assert len(ii) == c.M * 2 * dims - 2 * size ** (dims - 1) * dims
    ham = [bin(int(c.labels[i] ^ c.labels[j])).count("1") for i, j in zip(ii, jj)]
    assert set(ham) == {1}


def test_normalize_examples():
    c = normalize(Constellation("x", [[2.0], [-2.0]], [0, 1]))
    np.testing.assert_allclose(c.points[:, 0], [1.0, -1.0])
    pm = Constellation("pm", np.array([[1 - 2 * ((l >> (3 - k)) & 1) for k in range(4)] for l in range(16)], float),
                       np.arange(16))
    assert pm.energy == 4.0
    np.testing.assert_allclose(np.abs(normalize(pm).points), 0.5)
    n1 = normalize(pm)
    np.testing.assert_array_equal(normalize(n1).points, n1.points)


def test_normalize_rejects_all_zero():
    # construction already rejects coincident points, so build the zero case by scaling
    c = Constellation("x", [[1.0], [-1.0]], [0, 1])
    object.__setattr__(c, "points", np.zeros((2, 1)))
    with pytest.raises(ConstellationError):
        normalize(c)


def test_min_squared_distance(pm_qpsk):
    assert min_squared_distance(pm_qpsk) == pytest.approx(1.0, abs=1e-12)
    assert min_squared_distance(make_cartesian(pam(2), 1)) == pytest.approx(4.0)


def test_shipped_anchor_gains(pm_qpsk, c4_16, so_pm_qpsk):
    assert asymptotic_gain_db(c4_16, pm_qpsk) == pytest.approx(1.11, abs=0.02)
    assert asymptotic_gain_db(so_pm_qpsk, pm_qpsk) == pytest.approx(0.44, abs=0.02)
    assert asymptotic_gain_db(pm_qpsk, pm_qpsk) == 0.0
    assert min_squared_distance(c4_16) == pytest.approx(10 ** (1.11 / 10), abs=0.01)


def test_gain_rejects_mismatched_m(pm_qpsk, pm16):
    with pytest.raises(ConstellationError):
        asymptotic_gain_db(pm16, pm_qpsk)


@given(st.floats(0.1, 10), st.floats(0.1, 10))
def test_gain_scale_invariance(a, b):
    c = Constellation("c", cons.builtin("c4_16").points * a, cons.builtin("c4_16").labels)
    r = Constellation("r", cons.builtin("pm-qpsk").points * b, cons.builtin("pm-qpsk").labels)
    g = asymptotic_gain_db(normalize(c), normalize(r))
    assert g == pytest.approx(asymptotic_gain_db(c, r), abs=1e-12)


@pytest.mark.parametrize("bad,msg", [
    (dict(points=np.zeros((3, 1)) + [[0], [1], [2]], labels=[0, 1, 2]), "power of 2"),
    (dict(points=[[0.0], [1.0]], labels=[0, 0]), "bijection"),
    (dict(points=[[0.0], [0.0]], labels=[0, 1]), "duplicate"),
    (dict(points=[[0.0], [np.nan]], labels=[0, 1]), "finite"),
])
def test_invariants_enforced(bad, msg):
    with pytest.raises(ConstellationError, match=msg):
        Constellation("bad", **bad)


def test_arrays_are_read_only(pm_qpsk):
    with pytest.raises(ValueError):
        pm_qpsk.points[0, 0] = 1.0


# --- files ------------------------------------------------------------------------

def test_round_trip(tmp_path, pm_qpsk, c4_16):
    for c in (pm_qpsk, c4_16):
        p = tmp_path / f"{c.name}.txt"
        save_constellation(c, p)
        back = load_constellation(p)
        np.testing.assert_array_equal(back.labels, c.labels)
        np.testing.assert_allclose(back.points, c.points, atol=1e-12)
        assert min_squared_distance(back) == pytest.approx(min_squared_distance(c), abs=1e-12)


def test_save_empty_path(pm_qpsk):
    with pytest.raises(OSError):
        save_constellation(pm_qpsk, "")


def _write(tmp_path, text):
    p = tmp_path / "c.txt"
    p.write_text(text)
    return p


def test_loader_normalizes(tmp_path):
    c = load_constellation(_write(tmp_path, "# two points\n1 2\n0 3\n1 -3\n"))
    np.testing.assert_allclose(c.points[:, 0], [1, -1])


@pytest.mark.parametrize("text,line,match", [
    ("1 2\n0 1\n0 -1\n", 3, "duplicate label 0"),
    ("1 3\n", 1, "power of 2"),
    ("1 2\n0 1\n1 x\n", 3, "bad coordinate"),
    ("1 2\n0 1 2\n1 -1\n", 2, "fields"),
    ("1 2\n0 1\n10 -1\n", 3, "1-bit"),
    ("1 2\n0 1\n1 1\n", 3, "duplicates"),
    ("# comment only\n2\n", 2, "header"),
])
def test_loader_errors_carry_line_numbers(tmp_path, text, line, match):
    with pytest.raises(ConstellationFileError, match=match) as e:
        load_constellation(_write(tmp_path, text))
    assert e.value.lineno == line


def test_loader_missing_points(tmp_path):
    with pytest.raises(ConstellationFileError, match="found 1"):
        load_constellation(_write(tmp_path, "1 2\n0 1\n"))


def test_builtin_registry():
    for name in cons.SHIPPED:
        c = cons.builtin(name)
        assert c.energy == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(KeyError):
        cons.builtin("nope")


def test_data_dir_override(tmp_path, monkeypatch, pm_qpsk):
    (tmp_path / "constellations").mkdir()
    save_constellation(pm_qpsk.with_labels(pm_qpsk.labels[::-1]), tmp_path / "constellations" / "c4_16.txt")
    monkeypatch.setenv("BICM4D_DATA_DIR", str(tmp_path))
    c = cons.builtin("c4_16")
    np.testing.assert_array_equal(c.labels, pm_qpsk.labels[::-1])
