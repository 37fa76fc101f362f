import math

import numpy as np
import pytest

from kg2d.errors import DomainError
from kg2d.potential import Coupling, PotentialSpec, evaluate, validate


def test_free_coupling_vanishes():
    spec = PotentialSpec.square_well(1.0)
    assert evaluate(spec, 0.0, 0.5) == 0.0


def test_square_well_value():
    assert evaluate(PotentialSpec.square_well(1.0), 1.0, 0.5) == -1.0


@pytest.mark.parametrize("spec", [
    PotentialSpec.square_well(2.0, r0=1.5),
    PotentialSpec.piecewise_constant([0.4], [-1.0, 2.0]),
    PotentialSpec.tabulated([0.0, 0.5, 1.0], [-1.0, -0.5, 0.0]),
])
def test_cutoff(spec):
    assert evaluate(spec, 1.0, 2 * spec.r0) == 0.0


def test_piecewise_regions():
    spec = PotentialSpec.piecewise_constant([0.4], [-1.0, 2.0])
    np.testing.assert_array_equal(evaluate(spec, 0.5, np.array([0.1, 0.6, 1.2])), [-0.5, 1.0, 0.0])


def test_validate_square_well():
    assert validate(PotentialSpec.square_well(5.0)).passed


def test_validate_origin_condition():
    r = np.geomspace(1e-6, 1.0, 200)
    report = validate(PotentialSpec.tabulated(r, 1.0 / r))
    assert not report.passed and report.condition == "origin"


def test_validate_cutoff_condition():
    report = validate(PotentialSpec.tabulated([0.0, 0.5, 1.5], [-1.0, -1.0, 0.3]))
    assert not report.passed and report.condition == "cutoff"
    assert report.radius == 1.5


def test_validate_nonfinite():
    report = validate(PotentialSpec.tabulated([0.0, 0.5, 1.0], [-1.0, math.inf, 0.0]))
    assert report.condition == "finite"


def test_validate_soft_singularity_passes():
    r = np.geomspace(1e-6, 1.0, 200)
    assert validate(PotentialSpec.tabulated(r, -1.0 / np.sqrt(r))).passed


@pytest.mark.parametrize("lam", [-0.1, 1.5, math.nan])
def test_coupling_range(lam):
    with pytest.raises(DomainError):
        Coupling(lam)


@pytest.mark.parametrize("kwargs", [dict(r0=-1.0), dict(r0=0.0), dict(mass=-2.0)])
def test_spec_rejects_bad_scales(kwargs):
    with pytest.raises(DomainError):
        PotentialSpec.square_well(1.0, **kwargs)


def test_null_flag():
    assert PotentialSpec.free().is_null
    assert not PotentialSpec.square_well(0.1).is_null
    assert PotentialSpec.piecewise_constant([0.5], [0.0, 0.0]).is_null
