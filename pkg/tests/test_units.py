import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pfsl.units import db_to_ratio, dbm_to_w, mag_db, ratio_to_db, w_to_dbm


def test_reference_points():
    assert w_to_dbm(1e-3) == 0.0
    assert w_to_dbm(1.0) == pytest.approx(30.0, abs=1e-12)
    assert dbm_to_w(-90.0) == pytest.approx(1e-12, rel=1e-12)
    assert mag_db(10.0) == pytest.approx(20.0)


def test_zero_power_is_minus_infinity():
    assert w_to_dbm(0.0) == -math.inf


def test_vectorised():
    p = np.array([1e-3, 1e-2])
    assert np.allclose(w_to_dbm(p), [0.0, 10.0])
    assert isinstance(w_to_dbm(1e-3), float)


@given(st.floats(min_value=1e-20, max_value=1e6))
def test_watt_dbm_roundtrip(p):
    assert dbm_to_w(w_to_dbm(p)) == pytest.approx(p, rel=1e-12)


@given(st.floats(min_value=-200, max_value=200))
def test_ratio_db_roundtrip(db):
    assert ratio_to_db(db_to_ratio(db)) == pytest.approx(db, abs=1e-10)
