import numpy as np
import pytest

from core.errors import InvalidArgumentError
from core.ssm import ComponentSelection, build, plausibility_check, project, reconstruct


class TestComponentSelection:
    def test_exactly_one_rule(self):
        with pytest.raises(ValueError):
            ComponentSelection()
        with pytest.raises(ValueError):
            ComponentSelection(count=2, fraction=0.9)

    @pytest.mark.parametrize("kwargs", [{"count": 0}, {"fraction": 0.0}, {"fraction": 1.5}])
    def test_ranges(self, kwargs):
        with pytest.raises(ValueError):
            ComponentSelection(**kwargs)

    def test_default_fraction(self):
        assert ComponentSelection.variance().fraction == 0.95


class TestBuild:
    def test_two_shapes(self):
        m = build([[0.0, 0.0], [2.0, 2.0]], ComponentSelection.components(1))
        np.testing.assert_allclose(m.mean, [1.0, 1.0])
        np.testing.assert_allclose(m.eigenvalues, [2.0], atol=1e-12)
        r = 1.0 / np.sqrt(2.0)
        np.testing.assert_allclose(m.components[:, 0], [r, r], atol=1e-12)

    def test_identical_shapes(self):
        shapes = np.tile([1.0, 2.0, 3.0, 4.0], (3, 1))
        m = build(shapes, ComponentSelection.components(2))
        np.testing.assert_array_equal(m.eigenvalues, [0.0, 0.0])
        np.testing.assert_allclose(m.components.T @ m.components, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(reconstruct(m, project(m, shapes[0])), shapes[0])

    def test_too_many_components(self):
        with pytest.raises(InvalidArgumentError):
            build([[0.0, 1.0, 2.0], [1.0, 1.0, 1.0]], ComponentSelection.components(2))

    def test_ragged_shapes(self):
        with pytest.raises(InvalidArgumentError):
            build([[0.0, 1.0], [1.0, 2.0, 3.0]], ComponentSelection.components(1))

    def test_single_shape(self):
        with pytest.raises(InvalidArgumentError):
            build([[0.0, 1.0]], ComponentSelection.variance())

    def test_variance_fraction(self, beta_shapes):
        m = build(beta_shapes, ComponentSelection.variance(0.95))
        assert m.n_components <= 24
        assert m.cumulative_variance()[m.n_components - 1] >= 0.95 - 1e-12
        if m.n_components > 1:
            assert m.cumulative_variance()[m.n_components - 2] < 0.95

    def test_spectrum_descending(self, beta_shapes):
        m = build(beta_shapes, ComponentSelection.components(4))
        assert m.max_components == 24
        assert np.all(np.diff(m.spectrum) <= 0.0)
        assert np.all(m.spectrum >= 0.0)
        np.testing.assert_allclose(m.eigenvalues, m.spectrum[:4])


@pytest.mark.parametrize("method", ["gram", "covariance"])
def test_spectrum_sums_to_covariance_trace(beta_shapes, method):
    m = build(beta_shapes, ComponentSelection.components(2), method=method)
    deviations = beta_shapes - beta_shapes.mean(axis=0)
    trace = np.trace(deviations.T @ deviations) / beta_shapes.shape[0]
    assert m.spectrum.sum() == pytest.approx(trace, rel=1e-10)
    assert m.total_variance == pytest.approx(trace, rel=1e-12)


class TestGramMatchesCovariance:
    """Small-sample build against the direct covariance eigenproblem"""

    def test_eigenvalues(self, beta_shapes):
        full = ComponentSelection.components(24)
        gram = build(beta_shapes, full, method="gram")
        covariance = build(beta_shapes, full, method="covariance")
        scale = gram.eigenvalues[0]
        np.testing.assert_allclose(gram.eigenvalues, covariance.eigenvalues, rtol=1e-8, atol=1e-8 * scale)

    def test_reconstructions(self, beta_shapes):
        full = ComponentSelection.components(24)
        gram = build(beta_shapes, full, method="gram")
        covariance = build(beta_shapes, full, method="covariance")
        scale = np.abs(beta_shapes).max()
        for shape in beta_shapes:
            a = reconstruct(gram, project(gram, shape))
            b = reconstruct(covariance, project(covariance, shape))
            np.testing.assert_allclose(a, b, rtol=1e-8, atol=1e-8 * scale)

    def test_leading_modes_agree(self, beta_shapes):
        gram = build(beta_shapes, ComponentSelection.components(4), method="gram")
        covariance = build(beta_shapes, ComponentSelection.components(4), method="covariance")
        np.testing.assert_allclose(gram.components, covariance.components, atol=1e-7)


class TestProjectReconstruct:
    def test_mean_projects_to_origin(self, beta_shapes):
        m = build(beta_shapes, ComponentSelection.components(5))
        np.testing.assert_allclose(project(m, m.mean), np.zeros(5), atol=1e-10)

    @pytest.mark.parametrize("p", [1, 5, 24])
    def test_training_projections_sum_to_zero(self, beta_shapes, p):
        m = build(beta_shapes, ComponentSelection.components(p))
        total = sum(project(m, shape) for shape in beta_shapes)
        np.testing.assert_allclose(total, np.zeros(p), atol=1e-9 * np.abs(beta_shapes).max())

    def test_zero_parameters_give_mean(self, beta_shapes):
        m = build(beta_shapes, ComponentSelection.components(5))
        np.testing.assert_array_equal(reconstruct(m, np.zeros(5)), m.mean)

    def test_full_rank_round_trip(self, beta_shapes):
        m = build(beta_shapes, ComponentSelection.components(24))
        scale = np.abs(beta_shapes).max()
        for shape in beta_shapes:
            np.testing.assert_allclose(reconstruct(m, project(m, shape)), shape, atol=1e-8 * scale)

    def test_single_mode_offset(self, beta_shapes):
        m = build(beta_shapes, ComponentSelection.components(3))
        b = project(m, m.mean + 2.5 * m.components[:, 0])
        np.testing.assert_allclose(b, [2.5, 0.0, 0.0], atol=1e-9)

    def test_reconstruction_error_matches_discarded_variance(self, beta_shapes):
        m = build(beta_shapes, ComponentSelection.components(24))
        n = beta_shapes.shape[0]
        errors = []
        for p in range(1, 25):
            error = m.truncate(p).reconstruction_error(beta_shapes)
            expected = n * m.spectrum[p:].sum()
            assert error == pytest.approx(expected, rel=1e-6, abs=1e-9 * n * m.total_variance)
            errors.append(error)
        assert all(b <= a * (1.0 + 1e-9) + 1e-12 for a, b in zip(errors, errors[1:]))

    @pytest.mark.parametrize("fn, arg", [(project, np.zeros(3)), (reconstruct, np.zeros(7))])
    def test_length_mismatch(self, beta_shapes, fn, arg):
        m = build(beta_shapes, ComponentSelection.components(5))
        with pytest.raises(InvalidArgumentError):
            fn(m, arg)


class TestPlausibility:
    def test_zero_is_plausible(self, beta_shapes):
        m = build(beta_shapes, ComponentSelection.components(4))
        assert plausibility_check(m, np.zeros(4)) == [False] * 4

    def test_single_flag(self, beta_shapes):
        m = build(beta_shapes, ComponentSelection.components(4))
        b = np.zeros(4)
        b[2] = 3.5 * np.sqrt(m.eigenvalues[2])
        assert plausibility_check(m, b) == [False, False, True, False]

    def test_training_projections_bounded(self, beta_shapes):
        # sum_i b_ik^2 = N lambda_k bounds every single training coordinate
        m = build(beta_shapes, ComponentSelection.components(6))
        n = beta_shapes.shape[0]
        B = np.vstack([project(m, s) for s in beta_shapes])
        limit = np.sqrt(n * m.eigenvalues)
        assert np.all(np.abs(B) <= limit * (1.0 + 1e-9) + 1e-12)
        np.testing.assert_allclose((B**2).sum(axis=0), n * m.eigenvalues, rtol=1e-8)
