import pytest

from pfsl import oracle


@pytest.fixture(scope="module")
def report():
    return oracle.run_oracle()


def test_every_fixture_within_one_percent(report):
    for name in report.divided:
        assert report.fixture_error(name) < oracle.TOL, name
    assert report.passed()


def test_divided_flags(report):
    assert report.divided["pfsl_4dBm"]
    assert not report.divided["pfsl_-10dBm"]
    assert not report.divided["series_rv_1V"]


def test_rows_cover_nodes_junctions_and_harmonics(report):
    rows = [r for r in report.rows if r.fixture == "shunt_tank_10dBm"]
    probes = {r.probe for r in rows}
    assert {"node 1", "node 2", "node 3", "junction X1"} <= probes
    assert {r.k for r in rows} == set(oracle.K_COMPARE)
    assert "period-doubled" in report.summary()


def test_fixture_powers():
    fx = oracle.series_rc(2.0)
    assert fx.p_in == pytest.approx(2.0**2 / 400)
    assert not fx.has_pag and oracle.pfsl(0.0).has_pag
