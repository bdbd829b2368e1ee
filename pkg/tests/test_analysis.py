import numpy as np
import pytest
from hypothesis import given, strategies as st

from planartri.analysis import (
    eddeg_closed_form,
    eddeg_empirical,
    eddeg_via_euler,
    modal_count,
    quadratic_fit,
    sample_instance,
    sample_rig,
)
from planartri.errors import InvalidViewCount, UnderdeterminedFit


def test_closed_form_values():
    assert [eddeg_closed_form(m) for m in (2, 3, 4, 5)] == [8, 24, 49, 83]


def test_breakdown_two_views():
    br = eddeg_via_euler(2)
    assert (br.chi_variety, br.chi_d_infinity, br.chi_dq_cap_dinf, br.chi_dq) == (3, 3, 5, -3)
    assert br.eddeg == 8


@given(st.integers(2, 200))
def test_euler_matches_closed_form(m):
    assert eddeg_via_euler(m).eddeg == eddeg_closed_form(m)


@pytest.mark.parametrize("m", [1, 0, -3, 2.5])
def test_invalid_view_count(m):
    with pytest.raises(InvalidViewCount):
        eddeg_closed_form(m)
    with pytest.raises(InvalidViewCount):
        eddeg_via_euler(m)


def test_quadratic_fit_recovers_formula():
    pts = [(m, eddeg_closed_form(m)) for m in range(2, 8)]
    fit = quadratic_fit(pts)
    assert np.allclose(fit, (4.5, -6.5, 3.0), atol=1e-9)
    assert fit.residual < 1e-9


def test_quadratic_fit_underdetermined():
    with pytest.raises(UnderdeterminedFit):
        quadratic_fit([(2, 8), (3, 24), (3, 24)])


def test_modal_count():
    assert modal_count([8, 8, 7, 8]) == (8, 0.75)
    # ties go to the larger count
    assert modal_count([7, 8]) == (8, 0.5)
    with pytest.raises(ValueError):
        modal_count([])


def test_sampling_is_seeded():
    a = sample_instance(3, np.random.default_rng(4))
    b = sample_instance(3, np.random.default_rng(4))
    assert all(np.array_equal(x.matrix, y.matrix) for x, y in zip(a[0].cameras, b[0].cameras))
    assert np.array_equal(a[1], b[1])
    rig = sample_rig(2, np.random.default_rng(0))
    assert rig.m == 2


def test_empirical_counts_two_views():
    counts = eddeg_empirical(2, 10, seed=3)
    assert len(counts) == 10
    assert modal_count(counts)[0] == 8
    assert counts == eddeg_empirical(2, 10, seed=3)
    with pytest.raises(ValueError):
        eddeg_empirical(2, 0)
