import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import frozen_values as fv
from oracles import semismooth_grid_counts, smooth_enumeration
from semismooth.core import DomainError, RangeError
from semismooth.exact import (
    EXACT_CEILING,
    ExactPsiCounter,
    exact_psi,
    exact_psi_table,
    factor_profile_segment,
    load_fixture,
    write_fixture,
)
from semismooth.primes import sieve_primes


def test_psi_100_5():
    assert exact_psi(100, 5) == fv.PSI_100_5 == 34


def test_edge_cases():
    assert exact_psi(0.5, 3) == 0
    assert exact_psi(10, 1) == 1
    assert exact_psi(10, 10) == 10
    assert exact_psi(10.9, 20) == 10


@pytest.mark.parametrize("x, table", [(10**4, fv.TABLE_10_4), (10**6, fv.TABLE_10_6)])
def test_small_grids(x, table):
    got = exact_psi_table(x, fv.GRID_SMALL, fv.GRID_SMALL)
    for i, y in enumerate(fv.GRID_SMALL):
        for j, z in enumerate(fv.GRID_SMALL):
            if y <= z:
                assert got.cell(y, z) == table[i][j]
            else:
                assert not got.defined(i, j)


def test_segments_and_workers_agree():
    ref = exact_psi_table(50000, [8, 64], [64, 512]).counts
    np.testing.assert_array_equal(
        exact_psi_table(50000, [8, 64], [64, 512], segment_size=777).counts, ref
    )
    np.testing.assert_array_equal(
        exact_psi_table(50000, [8, 64], [64, 512], segment_size=5000, workers=2).counts, ref
    )


def test_factor_profiles():
    primes = sieve_primes(100)
    profs = {p.n: p for p in factor_profile_segment(2, 60, primes)}
    assert (profs[60].p1, profs[60].p2) == (5, 3)
    assert (profs[49].p1, profs[49].p2) == (7, 7)
    assert profs[59].p1 == 59
    assert profs[12].is_semismooth(3, 3)
    assert not profs[14].is_semismooth(2, 5)


def test_grid_validation_and_ceiling():
    with pytest.raises(DomainError):
        exact_psi_table(100, [16, 4], [16])
    with pytest.raises(DomainError):
        exact_psi_table(EXACT_CEILING + 1, [4], [4])


def test_counter():
    c = ExactPsiCounter(10**4)
    assert c.psi(100, 5) == 34
    np.testing.assert_array_equal(c.psi(np.array([100.0, 10**4]), 4), [smooth_enumeration(100, [2, 3]), 67])
    with pytest.raises(RangeError):
        c.psi(10**4 + 1, 5)


def test_fixture_round_trip(tmp_path):
    fx = load_fixture()
    assert fx[2**40, 2**20, 2**20] > 0
    tab = exact_psi_table(1000, [4, 16], [16, 64])
    write_fixture(tab, tmp_path / "t.csv")
    back = load_fixture(tmp_path / "t.csv")
    assert back[1000, 16, 64] == tab.cell(16, 64)
    assert (1000, 16, 4) not in back


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 3000), st.integers(2, 60), st.integers(0, 100))
def test_table_matches_brute_force(x, y, dz):
    z = y + dz
    want = semismooth_grid_counts(x, [y], [z])[0, 0]
    assert exact_psi_table(x, [y], [z]).cell(y, z) == want
