import numpy as np
import pytest
import scipy.stats

from smbcs.errors import DomainError
from smbcs.interferometer import (
    balanced_coupler,
    from_matrix,
    haar_random,
    load_unitary,
    save_unitary,
    submatrix,
    unitarity_defect,
)
from smbcs.streams import make_rng


def test_single_port_is_phase():
    interf = haar_random(1, 5)
    assert abs(abs(interf.matrix[0, 0]) - 1.0) <= 1e-12


@pytest.mark.parametrize("m", [2, 8, 33])
def test_unitarity_by_construction(m):
    interf = haar_random(m, 123)
    assert unitarity_defect(interf.matrix) <= 1e-12


def test_zero_dimension_rejected():
    with pytest.raises(DomainError):
        haar_random(0, 1)


def test_non_unitary_rejected():
    with pytest.raises(DomainError):
        from_matrix(np.array([[1.0, 0.0], [0.0, 2.0]]))


def test_determinism_same_seed():
    a = haar_random(6, 77)
    b = haar_random(6, 77)
    assert np.array_equal(a.matrix, b.matrix)
    c = haar_random(6, 78)
    assert not np.array_equal(a.matrix, c.matrix)


def test_row_column_norms():
    interf = haar_random(12, 9)
    assert np.allclose(np.linalg.norm(interf.matrix, axis=0), 1.0, atol=1e-12)
    assert np.allclose(np.linalg.norm(interf.matrix, axis=1), 1.0, atol=1e-12)


def _eigenphase_chi2(matrices, bins=32):
    phases = np.concatenate([np.angle(np.linalg.eigvals(u)) for u in matrices])
    counts, _ = np.histogram(phases, bins=bins, range=(-np.pi, np.pi))
    expected = phases.size / bins
    return float(((counts - expected) ** 2 / expected).sum()), bins - 1


def test_eigenphases_uniform_small_batch():
    # Reduced-size version of the acceptance criterion: 800 draws at M = 16.
    rng = make_rng(2024, "test")
    stat, dof = _eigenphase_chi2([haar_random(16, rng).matrix for _ in range(800)])
    assert stat < scipy.stats.chi2.isf(0.001, dof)


def test_plain_qr_fails_eigenphase_uniformity():
    # Negative control: QR without the phase correction is not Haar.
    rng = make_rng(2024, "test")
    mats = []
    for _ in range(800):
        g = (rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))) / np.sqrt(2)
        q, _ = np.linalg.qr(g)
        mats.append(q)
    stat, dof = _eigenphase_chi2(mats)
    assert stat > scipy.stats.chi2.isf(0.001, dof)


def test_submatrix_identity():
    interf = from_matrix(np.eye(4))
    sub = submatrix(interf, [0, 1], [0, 1])
    assert np.array_equal(sub, np.eye(2))


def test_submatrix_repeated_columns():
    interf = haar_random(5, 3)
    sub = submatrix(interf, [0, 1], [3, 3])
    assert np.array_equal(sub[:, 0], sub[:, 1])


def test_submatrix_elementwise(rng):
    interf = haar_random(7, 11)
    outs = rng.choice(7, size=3, replace=False)
    ins = rng.choice(7, size=3, replace=False)
    sub = submatrix(interf, outs, ins)
    for i in range(3):
        for j in range(3):
            assert sub[i, j] == interf.matrix[outs[i], ins[j]]


def test_submatrix_validation():
    interf = haar_random(4, 1)
    with pytest.raises(DomainError):
        submatrix(interf, [0, 1], [0])
    with pytest.raises(DomainError):
        submatrix(interf, [0, 4], [0, 1])


def test_balanced_coupler_unitary():
    bc = balanced_coupler()
    assert unitarity_defect(bc.matrix) <= 1e-15


@pytest.mark.parametrize("binary", [True, False])
def test_serialization_round_trip(tmp_path, binary):
    interf = haar_random(9, 42)
    path = tmp_path / ("u.bin" if binary else "u.json")
    save_unitary(interf, path, binary=binary)
    loaded = load_unitary(path)
    assert loaded.dimension == 9
    assert loaded.seed == 42
    assert np.max(np.abs(loaded.matrix - interf.matrix)) <= 1e-14
    assert unitarity_defect(loaded.matrix) <= 1e-12


def test_binary_payload_size_checked(tmp_path):
    interf = haar_random(3, 1)
    path = tmp_path / "u.bin"
    save_unitary(interf, path, binary=True)
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(DomainError):
        load_unitary(path)
