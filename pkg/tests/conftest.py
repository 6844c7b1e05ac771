import numpy as np
import pytest

from deltaxrr import cli, forward, model, xsf


@pytest.fixture(scope="session")
def tables():
    return {"si": xsf.load_element("si"),
            "o": xsf.load_element("o"),
            "as": xsf.load_element("as")}


@pytest.fixture(scope="session")
def stack1(tables):
    # 1 nm native oxide on Si, 0.1 nm rms interfaces
    return cli.build_stack(tables, oxide_nm=1.0, roughness_nm=0.1)


@pytest.fixture(scope="session")
def delta2(tables):
    # the buried-sheet benchmark: d = 18.1 nm, FWHM 0.9 nm, N2D 2.77 nm^-2
    return model.DeltaLayerSpec.gaussian_fwhm(18.1, 0.9, 2.77,
                                              tables["as"], tables["si"])


@pytest.fixture(scope="session")
def q_full():
    return np.linspace(0.5, 5.5, 1001)


@pytest.fixture(scope="session")
def curve_1300(stack1, delta2, q_full):
    r = forward.dynamical_reflectivity(stack1, delta2, 1300.0, q_full)
    return forward.ReflectivityCurve(q=q_full, r=r, energy_ev=1300.0)


@pytest.fixture(scope="session")
def curve_1335(stack1, delta2, q_full):
    r = forward.dynamical_reflectivity(stack1, delta2, 1335.0, q_full)
    return forward.ReflectivityCurve(q=q_full, r=r, energy_ev=1335.0)
