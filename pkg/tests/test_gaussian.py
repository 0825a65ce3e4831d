import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomlight import gaussian as g
from atomlight.interface import qnd_map


def two_mode_vacuum():
    return g.make_vacuum((g.atomic_mode(1, "A"), g.light_mode(1, "L")))


class TestMakeVacuum:
    def test_single_mode_heisenberg_bound(self):
        state = g.make_vacuum(1)
        tag = state.modes[0].tag
        assert state.var(tag, "X") == 0.5
        assert state.var(tag, "P") == 0.5
        assert state.var(tag, "X") * state.var(tag, "P") == 0.25

    def test_two_modes_product_state(self):
        state = g.make_vacuum(2)
        assert np.array_equal(state.cov, 0.5 * np.eye(4))
        assert np.array_equal(state.mean, np.zeros(4))

    def test_displacement_preserves_covariance(self):
        state = g.make_vacuum(1)
        tag = state.modes[0].tag
        moved = g.displace_feedback(state, tag, "X", 1.7)
        moved = g.displace_feedback(moved, tag, "P", -0.3)
        assert moved.mean_of(tag, "X") == 1.7
        assert moved.mean_of(tag, "P") == -0.3
        assert np.array_equal(moved.cov, state.cov)

    def test_zero_modes_rejected(self):
        with pytest.raises(ValueError):
            g.make_vacuum(0)

    def test_duplicate_tags_rejected(self):
        with pytest.raises(ValueError):
            g.make_vacuum((g.atomic_mode(1, "A"), g.light_mode(2, "A")))


class TestApplySymplectic:
    def test_identity(self):
        state = two_mode_vacuum()
        out = g.apply_symplectic(state, g.identity_map(state.modes))
        assert np.array_equal(out.cov, state.cov)
        assert np.array_equal(out.mean, state.mean)

    def test_vacuum_rotation_invariant(self):
        state = g.make_vacuum(1)
        out = g.apply_symplectic(state, g.rotation_map(0.7, state.modes[0]))
        np.testing.assert_allclose(out.cov, state.cov, atol=1e-15)

    def test_qnd_map_on_vacuum_oracle(self):
        # independent oracle: explicit matrix arithmetic S (I/2) S^T
        kappa = 1.0
        s = np.array(
            [
                [1, 0, 0, kappa],
                [0, 1, 0, 0],
                [0, kappa, 1, 0],
                [0, 0, 0, 1],
            ],
            dtype=float,
        )
        expected = s @ (0.5 * np.eye(4)) @ s.T

        state = two_mode_vacuum()
        out = g.apply_symplectic(state, qnd_map(kappa, *state.modes))
        np.testing.assert_allclose(out.cov, expected, atol=1e-14)
        assert out.var("L", "X") == pytest.approx(1.0)
        assert out.covariance("L", "X", "A", "P") == pytest.approx(0.5)

    def test_dimension_mismatch(self):
        state = g.make_vacuum(1)
        bad = g.SymplecticMap(np.eye(4))  # no mode labels, wrong size
        with pytest.raises(ValueError):
            g.apply_symplectic(state, bad)

    def test_non_symplectic_rejected(self):
        state = g.make_vacuum(1)
        bad = g.SymplecticMap(2.0 * np.eye(2), None, state.modes)
        with pytest.raises(g.NonSymplecticError):
            g.apply_symplectic(state, bad)

    def test_symplectic_eigenvalues_preserved_with_displacement(self):
        state = two_mode_vacuum()
        state = g.apply_symplectic(state, qnd_map(1.3, *state.modes))
        before = state.symplectic_eigenvalues()
        smap = g.SymplecticMap(
            g.rotation_map(0.4, state.modes[0]).matrix,
            np.array([2.2, -0.5]),
            (state.modes[0],),
        )
        after = g.apply_symplectic(state, smap).symplectic_eigenvalues()
        np.testing.assert_allclose(np.sort(before), np.sort(after), atol=1e-9)


class TestHomodyneCondition:
    def test_uncorrelated_mode_unchanged(self):
        state = two_mode_vacuum()
        out = g.homodyne_condition(state, "L", "X", 0.83)
        assert out.n_modes == 1
        assert out.modes[0].tag == "A"
        np.testing.assert_allclose(out.cov, 0.5 * np.eye(2), atol=1e-15)
        np.testing.assert_allclose(out.mean, np.zeros(2), atol=1e-15)

    @pytest.mark.parametrize("kappa", [0.3, 1.0, 2.5])
    def test_post_qnd_conditional_variance(self, kappa):
        # Gaussian conditional-variance identity Var - Cov^2/Var, computed
        # here independently of the engine update
        var_pa = 0.5
        var_xl = 0.5 + 0.5 * kappa**2
        cov = kappa * 0.5
        expected = var_pa - cov**2 / var_xl

        state = two_mode_vacuum()
        state = g.apply_symplectic(state, qnd_map(kappa, *state.modes))
        out = g.homodyne_condition(state, "L", "X", 0.0)
        assert out.var("A", "P") == pytest.approx(expected, abs=1e-12)
        assert out.var("A", "P") == pytest.approx(1.0 / (2.0 * (1.0 + kappa**2)))

    def test_kappa_one_minimum_uncertainty(self):
        state = two_mode_vacuum()
        state = g.apply_symplectic(state, qnd_map(1.0, *state.modes))
        out = g.homodyne_condition(state, "L", "X", 0.4)
        assert out.var("A", "P") == pytest.approx(0.25)
        assert out.var("A", "X") == pytest.approx(1.0)
        assert out.var("A", "X") * out.var("A", "P") == pytest.approx(0.25)

    def test_posterior_mean_tracks_outcome(self):
        state = two_mode_vacuum()
        state = g.apply_symplectic(state, qnd_map(1.0, *state.modes))
        outcome = 1.2
        out = g.homodyne_condition(state, "L", "X", outcome)
        # regression coefficient Cov/Var = 0.5/1.0
        assert out.mean_of("A", "P") == pytest.approx(0.5 * outcome)

    def test_posterior_cov_outcome_independent(self):
        state = two_mode_vacuum()
        state = g.apply_symplectic(state, qnd_map(0.8, *state.modes))
        cov_a = g.homodyne_condition(state, "L", "X", -3.0).cov
        cov_b = g.homodyne_condition(state, "L", "X", 5.0).cov
        assert np.array_equal(cov_a, cov_b)

    def test_degenerate_variance_raises(self):
        modes = (g.atomic_mode(1, "A"), g.light_mode(1, "L"))
        cov = 0.5 * np.eye(4)
        cov[2, 2] = 0.0  # X_L collapsed
        state = g.GaussianState(modes, np.zeros(4), cov)
        with pytest.raises(g.DegenerateMeasurementError):
            g.homodyne_condition(state, "L", "X", 0.0)

    def test_conditioning_never_increases_retained_variances(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            state = g.make_vacuum(
                (g.atomic_mode(1, "A"), g.light_mode(1, "L1"), g.light_mode(2, "L2"))
            )
            for lm in ("L1", "L2"):
                state = g.apply_symplectic(
                    state, qnd_map(rng.uniform(0, 2), state.modes[0], state.modes[state.mode_index(lm)])
                )
            before = np.diag(state.cov)
            out = g.homodyne_condition(state, "L1", "X", rng.normal())
            keep = [0, 1, 4, 5]
            assert np.all(np.diag(out.cov) <= before[keep] + 1e-12)


class TestDisplaceFeedback:
    def test_zero_amount_identity(self):
        state = two_mode_vacuum()
        out = g.displace_feedback(state, "A", "P", 0.0)
        assert np.array_equal(out.mean, state.mean)
        assert np.array_equal(out.cov, state.cov)

    def test_feedback_of_outcome(self):
        gain, outcome = 0.7, 1.9
        state = g.make_vacuum(1)
        tag = state.modes[0].tag
        out = g.displace_feedback(state, tag, "P", -gain * outcome)
        assert out.mean_of(tag, "P") == pytest.approx(-gain * outcome)
        assert out.var(tag, "P") == 0.5

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            g.displace_feedback(g.make_vacuum(1), "nope", "X", 1.0)

    def test_condition_displace_commute_on_unmeasured_mode(self):
        state = two_mode_vacuum()
        state = g.apply_symplectic(state, qnd_map(1.2, *state.modes))
        amount, outcome = 0.9, -0.4
        a = g.displace_feedback(
            g.homodyne_condition(state, "L", "X", outcome), "A", "P", amount
        )
        b = g.homodyne_condition(
            g.displace_feedback(state, "A", "P", amount), "L", "X", outcome
        )
        np.testing.assert_allclose(a.mean, b.mean, atol=1e-12)
        np.testing.assert_allclose(a.cov, b.cov, atol=1e-12)


class TestMeasureWithFeedback:
    def test_matches_law_of_total_variance(self):
        # ensemble variance = posterior variance + (c - g)^2 Var(m)
        kappa, gain = 1.1, 0.35
        state = two_mode_vacuum()
        state = g.apply_symplectic(state, qnd_map(kappa, *state.modes))
        var_m = state.var("L", "X")
        c = state.covariance("A", "P", "L", "X") / var_m
        posterior = g.homodyne_condition(state, "L", "X", 0.0).var("A", "P")
        expected = posterior + (c - gain) ** 2 * var_m

        out = g.measure_with_feedback(state, ("L", "X"), [("A", "P", -gain)])
        assert out.var("A", "P") == pytest.approx(expected, abs=1e-12)

    def test_zero_gain_is_marginal(self):
        state = two_mode_vacuum()
        state = g.apply_symplectic(state, qnd_map(0.9, *state.modes))
        out = g.measure_with_feedback(state, ("L", "X"))
        assert out.var("A", "P") == pytest.approx(state.var("A", "P"))


class TestSnuConversion:
    def test_round_trip(self):
        assert g.to_snu(0.5) == 1.0
        assert g.from_snu(1.0) == 0.5
        assert g.from_snu(g.to_snu(0.123)) == pytest.approx(0.123)


@st.composite
def random_pipeline_state(draw):
    """Vacuum pushed through a few random symplectics and conditionings."""
    modes = (g.atomic_mode(1, "A"), g.light_mode(1, "L1"), g.light_mode(2, "L2"))
    state = g.make_vacuum(modes)
    n_ops = draw(st.integers(min_value=1, max_value=6))
    for _ in range(n_ops):
        op = draw(st.integers(min_value=0, max_value=2))
        if op == 0:
            k = draw(st.floats(min_value=-2.0, max_value=2.0, allow_nan=False))
            light = state.modes[draw(st.integers(1, state.n_modes - 1))]
            state = g.apply_symplectic(state, qnd_map(k, state.modes[0], light))
        elif op == 1:
            theta = draw(st.floats(min_value=-3.2, max_value=3.2, allow_nan=False))
            mode = state.modes[draw(st.integers(0, state.n_modes - 1))]
            state = g.apply_symplectic(state, g.rotation_map(theta, mode))
        else:
            amount = draw(st.floats(min_value=-5.0, max_value=5.0, allow_nan=False))
            mode = state.modes[draw(st.integers(0, state.n_modes - 1))]
            state = g.displace_feedback(state, mode.tag, "X", amount)
    if draw(st.booleans()) and state.n_modes > 1:
        outcome = draw(st.floats(min_value=-3.0, max_value=3.0, allow_nan=False))
        state = g.homodyne_condition(state, state.modes[-1].tag, "X", outcome)
    return state


@settings(max_examples=80, deadline=None)
@given(random_pipeline_state())
def test_pipelines_keep_states_physical(state):
    assert np.min(state.symplectic_eigenvalues()) >= 0.5 - 1e-9
    for m in state.modes:
        assert state.var(m.tag, "X") * state.var(m.tag, "P") >= 0.25 - 1e-9


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=-3.0, max_value=3.0, allow_nan=False))
def test_qnd_map_inverse(kappa):
    modes = (g.atomic_mode(1, "A"), g.light_mode(1, "L"))
    forward = qnd_map(kappa, *modes)
    backward = qnd_map(-kappa, *modes)
    np.testing.assert_allclose(
        forward.matrix @ backward.matrix, np.eye(4), atol=1e-12
    )
    np.testing.assert_allclose(
        forward.inverse().matrix, backward.matrix, atol=1e-12
    )
