import numpy as np
import pytest

from mzqbc import codes, operator_model as om
from mzqbc.codes import bits_from_string
from mzqbc.operator_model import (
    CompositeSystem,
    DensityMatrix,
    alice_local_invariance,
    apply_mode_unitary,
    bob_bit_posterior,
    bob_reduced_state,
    bypass_unitary,
    committed_density,
    initial_composite_state,
    intercept_unitary,
    overlap,
    partial_trace,
    trace_distance,
)
from mzqbc.util import GuardError

R111 = bits_from_string("111")


class TestCommittedDensity:
    def test_singleton_subset_is_pure(self):
        rho = committed_density(codes.repetition_code(3), R111, 0)
        assert rho.indices.tolist() == [0]
        assert rho.weights.tolist() == [1.0]
        assert rho.to_dense().purity() == pytest.approx(1.0)

    def test_hamming_orthogonality_and_purity(self):
        code = codes.hamming_7_4()
        r = bits_from_string("1010000")
        rho0 = committed_density(code, r, 0)
        rho1 = committed_density(code, r, 1)
        assert overlap(rho0, rho1) == 0.0
        assert overlap(rho0, rho0) == pytest.approx(1 / 8)  # purity of 8-word mixture
        dense0, dense1 = rho0.to_dense(), rho1.to_dense()
        assert abs(overlap(dense0, dense1)) <= 1e-12
        assert dense0.purity() == pytest.approx(1 / 8)

    def test_empty_subset_rejected(self):
        code = codes.extended_hamming_8_4()
        r = code.codewords()[1]  # self-dual: parity constant on the code
        with pytest.raises(ValueError, match="committed subset empty"):
            committed_density(code, r, 1)

    def test_dense_conversion_guarded(self):
        rho = committed_density(codes.repetition_code(13), np.ones(13, dtype=np.uint8), 0)
        assert rho.dim == 1 << 13  # sparse form is fine at any enumerable n
        with pytest.raises(GuardError):
            rho.to_dense()

    def test_overlap_dim_mismatch(self):
        a = committed_density(codes.repetition_code(3), R111, 0)
        b = committed_density(codes.repetition_code(4), np.ones(4, dtype=np.uint8), 0)
        with pytest.raises(ValueError):
            overlap(a, b)


class TestModeUnitaries:
    def test_bypass_swap_squares_to_identity(self):
        u = bypass_unitary()
        assert np.allclose(u @ u, np.eye(4), atol=1e-12)
        assert np.allclose(u.conj().T @ u, np.eye(4), atol=1e-12)

    def test_intercept_unitary_is_unitary(self):
        u = intercept_unitary()
        assert np.allclose(u.conj().T @ u, np.eye(6), atol=1e-12)

    def test_intercept_records_the_bit(self):
        # |b>|2> -> |b>|b> on the (committed qubit, record qutrit) pair
        u = intercept_unitary()
        for b in (0, 1):
            vec = np.zeros(6, dtype=complex)
            vec[b * 3 + 2] = 1.0  # |b, 2>
            out = u @ vec
            expect = np.zeros(6, dtype=complex)
            expect[b * 3 + b] = 1.0
            assert np.allclose(out, expect, atol=1e-12)


class TestPipeline:
    def test_all_bypass_swaps_contents(self):
        code = codes.code_from_generator(np.eye(2, dtype=np.uint8))
        system = CompositeSystem(n=2)
        alpha = committed_density(code, bits_from_string("11"), 1)
        # receiver qubits start in |1> so the swap is visible
        full = initial_composite_state(
            system, alpha, beta_qubit=np.array([0.0, 1.0], dtype=complex)
        )
        out = apply_mode_unitary(system, ["bypass", "bypass"], full)
        # committed register now holds the receiver's |11>
        alpha_red = partial_trace(
            out.matrix, system.dims, [system.alpha_axis(0), system.alpha_axis(1)]
        )
        assert alpha_red[3, 3] == pytest.approx(1.0, abs=1e-12)
        # returned register holds the old committed mixture
        beta_red = partial_trace(out.matrix, system.dims, system.beta_axes())
        assert np.allclose(beta_red, alpha.to_dense().matrix, atol=1e-12)
        # record qutrits untouched
        g_red = partial_trace(out.matrix, system.dims, [system.gamma_axis(0)])
        assert g_red[2, 2] == pytest.approx(1.0, abs=1e-12)

    def test_all_intercept_writes_records_and_keeps_alpha(self):
        code = codes.repetition_code(3)
        system = CompositeSystem(n=3)
        alpha = committed_density(code, R111, 1)  # pure |111>
        full = initial_composite_state(system, alpha)
        out = apply_mode_unitary(system, ["intercept"] * 3, full)
        for i in range(3):
            g = partial_trace(out.matrix, system.dims, [system.gamma_axis(i)])
            assert g[1, 1] == pytest.approx(1.0, abs=1e-12)
        a_red = partial_trace(
            out.matrix, system.dims, [system.alpha_axis(i) for i in range(3)]
        )
        assert a_red[7, 7] == pytest.approx(1.0, abs=1e-12)

    def test_unitarity_of_composite_step(self):
        code = codes.code_from_generator(np.array([[1]], dtype=np.uint8))
        system = CompositeSystem(n=1)
        alpha = committed_density(code, bits_from_string("1"), 0)
        full = initial_composite_state(system, alpha)
        for modes in (["bypass"], ["intercept"]):
            out = apply_mode_unitary(system, modes, full)
            assert np.trace(out.matrix).real == pytest.approx(1.0, abs=1e-10)
            assert out.check_psd() >= -1e-9

    def test_gamma_must_start_unmeasured(self):
        system = CompositeSystem(n=1)
        beta = DensityMatrix.from_pure(np.array([1, 0], dtype=complex)).matrix
        alpha = DensityMatrix.from_pure(np.array([1, 0], dtype=complex)).matrix
        gamma = np.zeros((3, 3), dtype=complex)
        gamma[0, 0] = 1.0  # wrong: record already set
        state = DensityMatrix(om.kron_all([beta, alpha, gamma]))
        with pytest.raises(ValueError, match="unmeasured"):
            apply_mode_unitary(system, ["intercept"], state)

    def test_intercept_budget_enforced(self):
        code = codes.repetition_code(3)
        system = CompositeSystem(n=3)
        full = initial_composite_state(system, committed_density(code, R111, 0))
        with pytest.raises(ValueError, match="exceeds"):
            apply_mode_unitary(system, ["intercept", "intercept", "bypass"], full,
                               max_intercepts=1)

    def test_dimension_guard(self):
        with pytest.raises(GuardError):
            CompositeSystem(n=4)


class TestReducedState:
    def test_product_state_reduces_to_non_beta_part(self):
        system = CompositeSystem(n=1)
        code = codes.code_from_generator(np.array([[1]], dtype=np.uint8))
        alpha = committed_density(code, bits_from_string("1"), 1)
        full = initial_composite_state(system, alpha)
        red = bob_reduced_state(full, system)
        expect = np.kron(alpha.to_dense().matrix, np.diag([0, 0, 1.0]))
        assert np.allclose(red.matrix, expect, atol=1e-12)
        assert np.trace(red.matrix).real == pytest.approx(1.0, abs=1e-12)

    def test_bypass_hands_receiver_the_fiducial(self):
        system = CompositeSystem(n=1)
        code = codes.code_from_generator(np.array([[1]], dtype=np.uint8))
        alpha = committed_density(code, bits_from_string("1"), 1)
        fid = np.array([1, 1], dtype=complex) / np.sqrt(2)
        full = initial_composite_state(system, alpha, beta_qubit=fid)
        out = apply_mode_unitary(system, ["bypass"], full)
        red = bob_reduced_state(out, system)
        expect = np.kron(np.outer(fid, fid.conj()), np.diag([0, 0, 1.0]))
        assert np.allclose(red.matrix, expect, atol=1e-12)


class TestInvariance:
    @pytest.mark.parametrize(
        "n,gen,modes",
        [
            (1, [[1]], ["intercept"]),
            (2, [[1, 0], [0, 1]], ["intercept", "bypass"]),
            (3, [[1, 1, 1]], ["intercept", "bypass", "intercept"]),
        ],
    )
    def test_beta_rotations_invisible_to_receiver(self, n, gen, modes):
        code = codes.code_from_generator(np.array(gen, dtype=np.uint8))
        system = CompositeSystem(n=n)
        rng = np.random.default_rng(13)
        report = alice_local_invariance(
            system, modes, code, np.ones(n, dtype=np.uint8), trials=10, rng=rng
        )
        assert report["max_deviation"] <= 1e-9
        assert report["max_overlap_deviation"] <= 1e-9

    def test_intercept_records_are_distinguishable(self):
        code = codes.repetition_code(3)
        system = CompositeSystem(n=3)
        rng = np.random.default_rng(1)
        report = alice_local_invariance(
            system, ["intercept", "bypass", "bypass"], code, R111, trials=2, rng=rng
        )
        assert report["reduced_overlap"] == pytest.approx(0.0, abs=1e-12)
        assert report["reduced_trace_distance"] == pytest.approx(1.0, abs=1e-9)


class TestPosterior:
    def test_balanced_when_nothing_known(self):
        code = codes.hamming_7_4()
        assert bob_bit_posterior(code, bits_from_string("1010000"), [], []) == (0.5, 0.5)

    def test_degenerate_when_everything_known(self):
        code = codes.hamming_7_4()
        r = bits_from_string("1010000")
        w = code.codewords()[9]
        p = bob_bit_posterior(code, r, list(range(7)), w)
        assert p[codes.parity(w, r)] == 1.0

    def test_impossible_observation_flagged(self):
        code = codes.repetition_code(3)
        assert bob_bit_posterior(code, R111, [0, 1], [0, 1]) == (0.0, 0.0)

    def test_partial_knowledge_hamming(self):
        # three systematic positions known: 2 consistent codewords
        code = codes.hamming_7_4()
        r = bits_from_string("1010000")
        p0, p1 = bob_bit_posterior(code, r, [0, 1, 2], [1, 0, 1])
        assert p0 + p1 == pytest.approx(1.0)
        assert {p0, p1} <= {0.0, 0.5, 1.0}


class TestDensityMatrixValidation:
    def test_not_hermitian_rejected(self):
        m = np.eye(2, dtype=complex)
        m[0, 1] = 1.0
        with pytest.raises(ValueError, match="Hermitian"):
            DensityMatrix(m)

    def test_wrong_trace_rejected(self):
        with pytest.raises(ValueError, match="trace"):
            DensityMatrix(np.eye(2, dtype=complex))

    def test_psd_check(self):
        m = np.diag([1.5, -0.5]).astype(complex)
        with pytest.raises(ValueError, match="PSD"):
            DensityMatrix(m).check_psd()

    def test_trace_distance_orthogonal_pures(self):
        a = DensityMatrix.from_pure(np.array([1, 0], dtype=complex))
        b = DensityMatrix.from_pure(np.array([0, 1], dtype=complex))
        assert trace_distance(a, b) == pytest.approx(1.0)
