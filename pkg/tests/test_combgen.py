import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pnpsim.combgen import CombSpec, merge_combs, pm_comb, shift_comb, uniform_comb
from pnpsim.errors import ConfigurationError, InvalidCount, ShiftCollision


def bessel_series(n, x, terms=60):
    """J_n(x) from its power series; independent of scipy."""
    n_abs = abs(n)
    total = sum((-1) ** k * (x / 2) ** (2 * k + n_abs) / (math.factorial(k) * math.factorial(k + n_abs))
                for k in range(terms))
    return total * (-1) ** n_abs if n < 0 else total


def test_uniform_comb_centered():
    c = uniform_comb(0.1e9, 2e9, 3, 0.3)
    assert c.offsets.tolist() == [-1.9e9, 0.1e9, 2.1e9]
    assert c.state_index == 1
    assert np.all(c.amplitudes == 0.3)
    assert c.spacing == pytest.approx(2e9)


def test_uniform_comb_edge():
    c = uniform_comb(2.01e9, 150e6, 15, 0.1, placement="edge")
    assert len(c) == 15
    assert c.offsets[0] == pytest.approx(2.01e9)
    assert c.offsets[-1] == pytest.approx(2.01e9 + 14 * 150e6)
    assert c.state_index == 0


def test_uniform_comb_even_count_centered():
    c = uniform_comb(0.0, 1e9, 4, 1.0)
    assert c.offsets.tolist() == [-1e9, 0.0, 1e9, 2e9]


def test_invalid_count():
    with pytest.raises(InvalidCount):
        uniform_comb(0.0, 1e9, 0, 1.0)


def test_comb_rejects_duplicates_and_negative_amplitude():
    with pytest.raises(ConfigurationError):
        CombSpec([(1e9, 0.1), (1e9, 0.2)])
    with pytest.raises(ConfigurationError):
        CombSpec([(1e9, -0.1)])


def test_comb_lines_are_sorted_and_padded():
    c = CombSpec([(2e9, 0.1), (-1e9, 0.2, 0.5)])
    assert c.lines == ((-1e9, 0.2, 0.5), (2e9, 0.1, 0.0))


@pytest.mark.parametrize("beta", [0.3, 1.0, 2.4048])
def test_pm_comb_amplitudes_match_series(beta):
    c = pm_comb(beta, 1e9, 4)
    for (f, a, ph) in c.lines:
        n = round(f / 1e9)
        signed = a * math.cos(ph)
        assert signed == pytest.approx(bessel_series(n, beta), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(beta=st.floats(0.0, 3.0), n=st.integers(3, 8))
def test_pm_comb_power_within_truncation_bound(beta, n):
    c = pm_comb(beta, 1e9, n)
    # Sum over all orders is 1; the dropped tail |k| > n is bounded by
    # 2 * sum_k (beta/2)^(2k) / (k!)^2 <= 2 * (beta/2)^(2(n+1)) / ((n+1)!)^2 * e^(beta^2/4).
    bound = 2 * (beta / 2) ** (2 * (n + 1)) / math.factorial(n + 1) ** 2 * math.exp(beta**2 / 4)
    assert 1.0 - bound - 1e-12 <= c.total_power() <= 1.0 + 1e-12


def test_pm_comb_zero_crossing_of_carrier():
    c = pm_comb(2.404825557695773, 1e9, 3)
    assert c.amplitudes[c.state_index] < 1e-12


def test_shift_comb_and_collision():
    c = uniform_comb(0.0, 1e9, 3, 1.0)
    s = shift_comb(c, 100e6)
    assert s.offsets.tolist() == pytest.approx([-0.9e9, 0.1e9, 1.1e9])
    merged = shift_comb(c, 100e6, merge_with=c)
    assert len(merged) == 6
    with pytest.raises(ShiftCollision):
        shift_comb(c, 1e9, merge_with=c)
    with pytest.raises(ShiftCollision):
        merge_combs(c, c)
