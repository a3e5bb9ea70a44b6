import numpy as np
import pytest
import scipy.linalg

from lohe import freeflow as ff
from lohe.errors import UsageError
from lohe.tensor import centroid
from oracles import random_complex


def dense(rng, dims, scale=1.0):
    size = int(np.prod(dims))
    return ff.DenseGenerator(ff.random_skew_hermitian(size, rng, scale), dims=dims)


def specs(rng):
    return [
        ff.SpectralDiagonal([[0.0, 0.5, 2.0], [1.0, -1.0]]),
        dense(rng, (3, 2)),
    ]


def test_apply_generator_examples(rng):
    t = np.array([1.0, 1.0])
    np.testing.assert_array_equal(ff.apply_generator(ff.ABSENT, t), 0)
    np.testing.assert_allclose(ff.apply_generator(ff.SpectralDiagonal([[0, 1]]), t), [0, -1j])
    g = dense(rng, (2, 2))
    x = random_complex(rng, (2, 2))
    np.testing.assert_allclose(ff.apply_generator(g, x), (g.matrix @ x.ravel()).reshape(2, 2),
                               atol=1e-14)


def test_apply_exp_examples(rng):
    t = np.array([1.0, 1.0])
    spec = ff.SpectralDiagonal([[0, 1]])
    np.testing.assert_allclose(ff.apply_exp(spec, np.pi, t), [1, -1], atol=1e-15)
    for s in specs(rng) + [ff.ABSENT]:
        x = random_complex(rng, (3, 2))
        np.testing.assert_array_equal(ff.apply_exp(s, 0.0, x), x)


def test_semigroup(rng):
    g = dense(rng, (2, 3))
    x = random_complex(rng, (2, 3))
    lhs = ff.apply_exp(g, 0.7 + 1.3, x)
    rhs = ff.apply_exp(g, 0.7, ff.apply_exp(g, 1.3, x))
    np.testing.assert_allclose(lhs, rhs, atol=1e-11)


@pytest.mark.parametrize("t", [-10.0, -1.0, 0.3, 4.0, 10.0])
def test_exp_is_isometric_and_invertible(rng, t):
    for s in specs(rng):
        x = random_complex(rng, (3, 2))
        y = ff.apply_exp(s, t, x)
        assert np.linalg.norm(y) == pytest.approx(np.linalg.norm(x), rel=1e-12)
        np.testing.assert_allclose(ff.apply_exp(s, -t, y), x, atol=1e-11)


def test_derivative_at_zero(rng):
    h = 1e-5
    for s in specs(rng):
        x = random_complex(rng, (3, 2))
        fd = (ff.apply_exp(s, h, x) - ff.apply_exp(s, -h, x)) / (2 * h)
        np.testing.assert_allclose(fd, ff.apply_generator(s, x), atol=1e-8)


def test_centroid_commutes_with_free_flow(rng):
    for s in specs(rng):
        agents = random_complex(rng, (4, 3, 2))
        lhs = ff.apply_exp(s, 1.7, centroid(agents))
        rhs = centroid(ff.apply_exp(s, 1.7, agents, batched=True))
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@pytest.mark.parametrize("n,scale", [(2, 0.1), (4, 1.0), (8, 10.0), (27, 100.0)])
def test_expm_matches_scipy(rng, n, scale):
    a = ff.random_skew_hermitian(n, rng, scale)
    np.testing.assert_allclose(ff.expm(a), scipy.linalg.expm(a), atol=1e-11)


def test_dense_generator_validation(rng):
    with pytest.raises(UsageError):
        ff.DenseGenerator(np.ones((2, 3)))
    with pytest.raises(UsageError):
        ff.DenseGenerator(random_complex(rng, (2, 2)))
    with pytest.raises(UsageError):
        ff.DenseGenerator(np.zeros((4, 4)), dims=(3,))
    with pytest.raises(UsageError):
        ff.apply_generator(dense(rng, (2, 2)), np.zeros(3))
    with pytest.raises(UsageError):
        ff.SpectralDiagonal([[0.0, np.inf]])


def test_validate_spectral_always_passes():
    spec = ff.SpectralDiagonal([[0.0, 0.5, 2.0], [1.0, -3.0]])
    report = ff.validate_generator(spec, ["00", "01", "10", "11"])
    assert report.passed
    assert report.max_deviation < 1e-12


def test_validate_time_zero_exact(rng):
    g = dense(rng, (2, 2))
    assert ff.compatibility_deviation(g, "01", 0.0) == 0.0


def test_validate_generic_dense_fails(rng):
    g = dense(rng, (2, 2))
    report = ff.validate_generator(g, ["01"], time_samples=[1.0])
    assert not report.passed
    assert report.checks[0].deviation > 1e-9


def test_validate_kronecker_sum_of_commuting_diagonals_passes(rng):
    w1 = np.diag(1j * rng.standard_normal(2))
    w2 = np.diag(1j * rng.standard_normal(3))
    g = ff.DenseGenerator(ff.kronecker_sum(w1, w2), dims=(2, 3))
    assert ff.validate_generator(g, ["01", "10"]).passed


def test_validate_absent_rejected():
    with pytest.raises(UsageError):
        ff.validate_generator(ff.ABSENT, ["0"])


def test_generator_file_roundtrip(tmp_path, rng):
    g = ff.random_skew_hermitian(4, rng)
    path = tmp_path / "gen.txt"
    ff.save_generator(path, g)
    loaded = ff.load_generator(path, dims=(2, 2))
    np.testing.assert_allclose(loaded.matrix, g, atol=1e-15)
    path.write_text("1,0 0,0\n0,0 1,0\n")
    with pytest.raises(UsageError, match="skew"):
        ff.load_generator(path)
    path.write_text("0,0 x\n")
    with pytest.raises(UsageError, match=":1:"):
        ff.load_generator(path)
