import io
import os

import numpy as np
import pytest
from numpy.testing import assert_allclose

from deltaxrr import xsf
from deltaxrr.errors import (
    ConfigError,
    DataGapError,
    DomainError,
    EnergyRangeError,
    ParseError,
    TableNotFoundError,
    TableStructureError,
)

GOOD_NFF = "E(eV) f1 f2\n100.0 1.0 0.1\n200.0 2.0 0.2\n300.0 2.5 0.15\n"


def test_constants():
    assert_allclose(xsf.CONSTANTS.r0_nm, 2.8179403262e-6, rtol=1e-12)
    assert_allclose(xsf.CONSTANTS.hc_ev_nm, 1239.841984, rtol=1e-12)
    assert_allclose(xsf.CONSTANTS.wavelength_nm(1300.0),
                    9.537246030769e-01, rtol=1e-12)
    with pytest.raises(DomainError):
        xsf.CONSTANTS.wavelength_nm(0.0)
    with pytest.raises(DomainError):
        xsf.CONSTANTS.wavelength_nm(-5.0)


def test_load_nff_from_string_bytes_and_filelike():
    t1 = xsf.load_nff(GOOD_NFF, "x")
    t2 = xsf.load_nff(GOOD_NFF.encode(), "x")
    t3 = xsf.load_nff(io.StringIO(GOOD_NFF), "x")
    for t in (t1, t2, t3):
        assert t.energies.size == 3
        assert_allclose(t.f1, [1.0, 2.0, 2.5])


def test_load_nff_missing_file():
    with pytest.raises(TableNotFoundError):
        xsf.load_nff("/nonexistent/path/q.nff", "q")


def test_parse_error_reports_line():
    with pytest.raises(ParseError) as e:
        xsf.load_nff("E f1 f2\n100.0 1.0\n", "x")
    assert "line 2" in str(e.value)
    with pytest.raises(ParseError) as e:
        xsf.load_nff("E f1 f2\n100.0 1.0 0.1\n200.0 oops 0.2\n", "x")
    assert "line 3" in str(e.value)


def test_table_structure_errors():
    with pytest.raises(TableStructureError):
        xsf.load_nff("E f1 f2\n100.0 1.0 0.1\n100.0 2.0 0.2\n", "x")
    with pytest.raises(TableStructureError):
        xsf.load_nff("E f1 f2\n200.0 1.0 0.1\n100.0 2.0 0.2\n", "x")
    with pytest.raises(TableStructureError):
        xsf.load_nff("E f1 f2\n100.0 1.0 -0.1\n200.0 2.0 0.2\n", "x")
    with pytest.raises(TableStructureError):
        xsf.load_nff("E f1 f2\n100.0 1.0 0.1\n", "x")


def test_packaged_tables_load(tables):
    assert tables["si"].energies.size == 848
    assert tables["as"].energies.size == 1324
    assert tables["o"].energies.size == 594
    assert tables["si"].energies[0] == 30.0
    assert tables["si"].energies[-1] == 30000.0


def test_tables_dir_resolution(tables, tmp_path, monkeypatch):
    # an explicit directory wins, the environment variable is next
    packaged = xsf.default_tables_dir()
    t = xsf.load_element("si", tables_dir=packaged)
    assert t.energies.size == tables["si"].energies.size
    monkeypatch.setenv(xsf.TABLES_ENV_VAR, str(tmp_path))
    with pytest.raises(TableNotFoundError):
        xsf.load_element("si")
    monkeypatch.delenv(xsf.TABLES_ENV_VAR)
    assert xsf.load_element("si").energies.size == tables["si"].energies.size


def test_scattering_factor_exact_node(tables):
    ars = tables["as"]
    # a tabulated energy returns the row itself, no interpolation residue
    f = xsf.scattering_factor(ars, 1323.10)
    assert f.real == ars.f1[664]
    assert f.imag == ars.f2[664]
    assert ars.energies[664] == 1323.10


def test_scattering_factor_linear_midpoint(tables):
    ars = tables["as"]
    e_mid = 0.5 * (ars.energies[664] + ars.energies[665])
    f = xsf.scattering_factor(ars, float(e_mid))
    f_lin = complex(0.5 * (ars.f1[664] + ars.f1[665]),
                    0.5 * (ars.f2[664] + ars.f2[665]))
    assert abs(f - f_lin) < 1e-12


def test_energy_range_error(tables):
    with pytest.raises(EnergyRangeError):
        xsf.scattering_factor(tables["si"], 5.0)
    with pytest.raises(EnergyRangeError):
        xsf.scattering_factor(tables["si"], 40000.0)


def test_sentinel_rows_raise_data_gap(tables):
    ars = tables["as"]
    sentinels = ars.energies[ars.f1 <= xsf.F1_SENTINEL_THRESHOLD]
    assert sentinels.size == 71
    assert sentinels[0] == 30.0 and sentinels[-1] == 44.95
    with pytest.raises(DataGapError):
        xsf.scattering_factor(ars, 40.0)        # exact sentinel node
    with pytest.raises(DataGapError):
        xsf.scattering_factor(ars, 45.0)        # bracket touches a sentinel
    f = xsf.scattering_factor(ars, 45.2)        # first usable row
    assert np.isfinite(f.real) and f.real > xsf.F1_SENTINEL_THRESHOLD


def test_frozen_scattering_factors(tables):
    assert_allclose(
        xsf.scattering_factor(tables["si"], 1300.0),
        complex(1.208660663804e+01, 7.117134672790e-01), rtol=1e-9)
    assert_allclose(
        xsf.scattering_factor(tables["si"], 1335.0),
        complex(1.203937705151e+01, 6.852266074274e-01), rtol=1e-9)
    assert_allclose(
        xsf.scattering_factor(tables["as"], 1300.0),
        complex(1.844869600000e+01, 5.222382800000e-01), rtol=1e-9)
    assert_allclose(
        xsf.scattering_factor(tables["as"], 1335.0),
        complex(1.632574200000e+01, 6.648935000000e+00), rtol=1e-9)
    assert_allclose(
        xsf.scattering_factor(tables["o"], 1300.0),
        complex(8.153902275187e+00, 5.992209551728e-01), rtol=1e-9)


def test_frozen_contrast_and_phase(tables):
    d_lo = xsf.delta_f(tables["as"], tables["si"], 1300.0)
    d_hi = xsf.delta_f(tables["as"], tables["si"], 1335.0)
    assert_allclose(d_lo, complex(6.362089361959e+00, -1.894751872790e-01),
                    rtol=1e-9)
    assert_allclose(d_hi, complex(4.286364948493e+00, 5.963708392573e+00),
                    rtol=1e-9)
    dphi = np.angle(d_hi) - np.angle(d_lo)
    assert_allclose(dphi / np.pi, 3.111083438757e-01, rtol=1e-9)
    # the contrast magnitude moves strongly across the edge pair while the
    # host factor barely moves
    assert_allclose(abs(d_hi) / abs(d_lo) - 1.0, 0.153873, rtol=1e-3)
    f_si_lo = xsf.scattering_factor(tables["si"], 1300.0)
    f_si_hi = xsf.scattering_factor(tables["si"], 1335.0)
    assert abs(abs(f_si_hi) / abs(f_si_lo) - 1.0) < 0.01


def test_material_validation(tables):
    with pytest.raises(ConfigError):
        xsf.Material("empty", [])
    with pytest.raises(ConfigError):
        xsf.Material("neg", [(tables["si"], -1.0)])
    with pytest.raises(ConfigError):
        xsf.Material("notatable", [(3.14, 1.0)])


def test_sld_and_derived_quantities(tables):
    m_si = xsf.silicon(table=tables["si"])
    rho = xsf.sld(m_si, 1300.0)
    assert_allclose(rho, complex(1.700923252437e-03, 1.001579700424e-04),
                    rtol=1e-9)
    assert_allclose(np.angle(rho), 5.881655635213e-02, rtol=1e-9)
    assert_allclose(xsf.critical_q(m_si, 1300.0), 2.923999451211e-01,
                    rtol=1e-9)
    assert_allclose(xsf.critical_q(m_si, 1335.0), 2.918280953764e-01,
                    rtol=1e-9)
    n = xsf.refractive_index(m_si, 1300.0)
    assert_allclose(1.0 - n.real, 2.462355887327e-04, rtol=1e-9)
    assert_allclose(n.imag, -1.449945297904e-05, rtol=1e-9)


def test_silica_and_vacuum(tables):
    sio2 = xsf.silica(si_table=tables["si"], o_table=tables["o"])
    assert_allclose(xsf.sld(sio2, 1300.0),
                    complex(1.768304014816e-03, 1.189577554810e-04),
                    rtol=1e-9)
    vac = xsf.vacuum(tables["si"])
    assert xsf.sld(vac, 1300.0) == 0.0
    assert xsf.refractive_index(vac, 1300.0) == 1.0
    assert xsf.critical_q(vac, 1300.0) == 0.0
