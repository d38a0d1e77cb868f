import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from smbcs.errors import CostGuardError, DomainError
from smbcs.permanent import perm_fast, perm_naive, perm_with_multiplicities


def random_complex(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def test_scalar():
    z = 2.0 - 3.0j
    assert perm_naive([[z]]) == z
    assert perm_fast([[z]]) == z


@pytest.mark.parametrize("n", [2, 3, 5])
def test_identity(n):
    assert perm_naive(np.eye(n)) == pytest.approx(1.0)
    assert perm_fast(np.eye(n)) == pytest.approx(1.0)


def test_all_ones_is_factorial():
    assert perm_naive(np.ones((2, 2))) == pytest.approx(2.0)
    assert perm_naive(np.ones((3, 3))) == pytest.approx(6.0)
    assert perm_fast(np.ones((6, 6))) == pytest.approx(720.0)


def test_zero_row_gives_exact_zero(rng):
    a = random_complex(rng, 5)
    a[2, :] = 0.0
    assert perm_fast(a) == 0.0


def test_diagonal_product(rng):
    d = rng.normal(size=6) + 1j * rng.normal(size=6)
    assert perm_fast(np.diag(d)) == pytest.approx(np.prod(d))


def test_fast_matches_naive_on_random_batch(rng):
    for _ in range(200):
        n = int(rng.integers(1, 9))
        a = random_complex(rng, n)
        expected = perm_naive(a)
        got = perm_fast(a)
        assert abs(got - expected) <= 1e-10 * max(abs(expected), 1e-30)


def test_guards():
    with pytest.raises(CostGuardError):
        perm_naive(np.eye(11))
    with pytest.raises(CostGuardError):
        perm_fast(np.eye(31))
    # Guards are configuration, not physics: raising them works.
    assert perm_naive(np.eye(11), max_n=11) == pytest.approx(1.0)


def test_input_validation():
    with pytest.raises(DomainError):
        perm_fast(np.ones((2, 3)))
    with pytest.raises(DomainError):
        perm_fast(np.array([[np.nan, 1.0], [0.0, 1.0]]))


def test_multiplicities_all_ones(rng):
    a = random_complex(rng, 4)
    assert perm_with_multiplicities(a, [1] * 4, [1] * 4) == perm_fast(a)


def test_multiplicities_scalar_doubled():
    z = 1.5 + 0.5j
    # Expanded matrix [[z, z], [z, z]] has permanent 2 z^2.
    assert perm_with_multiplicities([[z]], [2], [2]) == pytest.approx(2 * z * z)


def test_multiplicities_match_explicit_expansion(rng):
    for _ in range(50):
        n = int(rng.integers(1, 4))
        a = random_complex(rng, n)
        rm = rng.integers(0, 3, size=n)
        cm = rng.permutation(rm)  # same total, different layout
        if rm.sum() == 0:
            continue
        expanded = np.repeat(np.repeat(a, rm, axis=0), cm, axis=1)
        expected = perm_naive(expanded)
        got = perm_with_multiplicities(a, rm, cm)
        assert abs(got - expected) <= 1e-10 * max(abs(expected), 1e-30)


def test_multiplicity_sums_must_match():
    with pytest.raises(DomainError):
        perm_with_multiplicities(np.eye(2), [2, 1], [1, 1])
    with pytest.raises(DomainError):
        perm_with_multiplicities(np.eye(2), [0, 0], [0, 0])


complex_matrices = st.integers(min_value=1, max_value=6).flatmap(
    lambda n: hnp.arrays(
        np.complex128, (n, n),
        elements=st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False),
    )
)


@settings(max_examples=80, deadline=None)
@given(a=complex_matrices)
def test_transpose_invariance(a):
    assert perm_fast(a.T) == pytest.approx(perm_fast(a), rel=1e-12, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(a=complex_matrices, data=st.data())
def test_permutation_invariance(a, data):
    n = a.shape[0]
    p = data.draw(st.permutations(range(n)))
    q = data.draw(st.permutations(range(n)))
    shuffled = a[np.asarray(p)][:, np.asarray(q)]
    assert perm_fast(shuffled) == pytest.approx(perm_fast(a), rel=1e-12, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(a=complex_matrices, c=st.complex_numbers(max_magnitude=2.0, allow_nan=False,
                                                allow_infinity=False))
def test_row_scaling_linearity(a, c):
    scaled = a.copy()
    scaled[0] *= c
    assert perm_fast(scaled) == pytest.approx(c * perm_fast(a), rel=1e-10, abs=1e-10)


def test_large_order_runs(rng):
    # 2^20 Gray-code steps; checks the compensated accumulator stays finite.
    a = random_complex(rng, 20) / 4.0
    value = perm_fast(a)
    assert np.isfinite(value.real) and np.isfinite(value.imag)
