import csv
import math

import numpy as np
import pytest

from pfsl import oracle, transient
from pfsl.core import Element, Kind, Netlist, Port
from pfsl.errors import ConfigError, DomainError
from pfsl.linear import ac_solve
from pfsl.transient import (KERNEL, energy_audit, spectrum_of, steady_state_spectrum, transient_solve)

F = 1e9


def _rc():
    return Netlist((Element("V1", Kind.CW_SOURCE, 1, 0, F, power=1e-3, z_src=50.0),
                    Element("R1", Kind.RESISTOR, 1, 2, 30.0),
                    Element("C1", Kind.CAPACITOR, 2, 0, 2e-12),
                    Element("L1", Kind.INDUCTOR, 2, 0, 20e-9, q=25.0, f_ref=F)), (Port(1),))


@pytest.fixture(scope="module")
def rc_wave():
    return transient_solve(_rc())


@pytest.fixture(scope="module")
def rv_wave():
    fx = oracle.series_rc(3.0)
    return fx, transient_solve(fx.net)


def test_linear_rc_matches_ac_solve(rc_wave):
    ac = ac_solve(_rc(), F)
    for node in (1, 2):
        got = steady_state_spectrum(rc_wave, F, node=node).phasors[1]
        assert abs(got - ac[node]) < 1e-3 * abs(ac[node])


def test_steady_state_is_periodic(rc_wave):
    spp = transient.STEPS_PER_PERIOD
    v = rc_wave.node(2)
    last, prev = v[-spp:], v[-2 * spp:-spp]
    assert np.max(np.abs(last - prev)) < 1e-6 * np.max(np.abs(last))


def test_whole_period_window_has_no_leakage():
    f0 = 1e9
    t = np.arange(64 * 200) / (200 * f0)
    x = np.cos(2 * math.pi * 2 * f0 * t + 0.3)
    mag = np.abs(spectrum_of(x, t, f0, 7))
    assert mag[2] == pytest.approx(1.0, rel=1e-12)
    assert 20 * np.log10(np.max(np.delete(mag, 2)) + 1e-300) < -100.0


def test_phasor_recovery():
    rng = np.random.default_rng(3)
    ph = rng.normal(size=6) + 1j * rng.normal(size=6)
    ph[0] = ph[0].real
    f0 = 7e8
    t = np.arange(32 * 128) / (128 * f0)
    x = ph[0].real + sum(np.real(ph[k] * np.exp(2j * math.pi * k * f0 * t)) for k in range(1, 6))
    assert np.allclose(spectrum_of(x, t, f0, 5), ph, atol=1e-9)


def test_halving_dt_changes_little(rv_wave):
    fx, w = rv_wave
    w2 = transient_solve(fx.net, dt=w.dt / 2)
    for k in (1, 2, 3):
        a = abs(steady_state_spectrum(w, F, node=2).phasors[k])
        b = abs(steady_state_spectrum(w2, F, node=2).phasors[k])
        assert abs(a - b) < 2e-3 * abs(steady_state_spectrum(w2, F, node=2).phasors[1])


@pytest.mark.parametrize("which", ["rc", "rv"])
def test_energy_balance(rc_wave, rv_wave, which):
    w = rc_wave if which == "rc" else rv_wave[1]
    audit = energy_audit(w, F)
    assert audit.p_sources > 0
    assert audit.mismatch < 5e-3


def test_kernels_agree():
    if KERNEL != "cython":
        pytest.skip("compiled kernel not built")
    net = oracle.series_rc(3.0).net
    a = transient_solve(net, duration=20 / F, kernel="python")
    b = transient_solve(net, duration=20 / F, kernel="cython")
    assert np.allclose(a.samples, b.samples, rtol=1e-10, atol=1e-13)
    assert np.allclose(a.currents, b.currents, rtol=1e-10, atol=1e-15)


def test_step_and_window_validation(rc_wave):
    with pytest.raises(ConfigError):
        transient_solve(_rc(), dt=1 / (50 * F))
    with pytest.raises(ConfigError):
        transient_solve(_rc(), duration=10 / F, kernel="fortran")
    short = transient_solve(_rc(), duration=20 / F)
    with pytest.raises(DomainError):
        steady_state_spectrum(short, F)
    with pytest.raises(DomainError):
        transient_solve(_rc(), duration=-1.0)
    with pytest.raises(ConfigError):
        rc_wave.column(99)


def test_period_doubling_above_threshold():
    fx = oracle.pfsl(4.0)
    f0 = fx.f_in / 2
    w = transient_solve(fx.net, duration=oracle.oracle_duration(fx.f_in, f0))
    v = transient.junction_voltage(w, "X1")
    sl = transient._window(w, f0, transient.N_PERIODS, transient.DISCARD)
    spec = np.abs(spectrum_of(v[sl], w.t[sl], f0, 3))
    assert spec[1] > 0.1 * spec[2]


def test_write_csv(tmp_path):
    w = transient_solve(_rc(), duration=2 / F)
    path = tmp_path / "w.csv"
    w.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t_s"] + [f"v_{lab}_v" for lab in w.labels]
    assert len(rows) == w.n_samples + 1
    assert float(rows[-1][1]) == pytest.approx(w.samples[-1, 0], rel=1e-11, abs=1e-15)
