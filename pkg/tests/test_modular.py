import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opssa.modular import (
    HermiticityAnomaly,
    SupportViolation,
    conditional_mutual_information,
    local_unitary_C,
    maximally_mixed_A,
    modular_hamiltonian,
    proof_step_check,
    restricted_trace_witness,
    ssa_operator,
    twirl_A,
)
from opssa.perspective import quasi_entropy
from opssa.states import StateSpec, generate, haar_unitary, make_rng, random_projector
from opssa.tensor import DensityMatrix, DimensionError, ToleranceConfig, partial_trace
from oracles import entropy, ptrace_loops, ssa_operator_bruteforce

LOG2 = math.log(2)


def state(kind, dims=(2, 2, 2), seed=0, rank=None):
    return generate(StateSpec(kind, dims, seed, rank=rank))


class TestModularHamiltonian:
    def test_maximally_mixed_ab(self):
        h = modular_hamiltonian(state("maximally-mixed"), "AB")
        np.testing.assert_allclose(h.matrix, math.log(4) * np.eye(8), atol=1e-14)

    def test_pure_global_is_zero(self):
        h = modular_hamiltonian(state("haar-pure", seed=3), (0, 1, 2))
        np.testing.assert_allclose(h.matrix, 0, atol=1e-13)

    def test_ghz_b(self):
        h = modular_hamiltonian(state("ghz"), "B")
        np.testing.assert_allclose(h.matrix, LOG2 * np.eye(8), atol=1e-14)

    def test_commutes_with_marginal(self):
        rho = state("induced-mixed", (2, 3, 2), 4, rank=6)
        h = modular_hamiltonian(rho, "BC").matrix
        rho_bc = np.kron(np.eye(2), partial_trace(rho.matrix, rho.dims, [0]))
        assert np.linalg.norm(h @ rho_bc - rho_bc @ h) < 1e-9

    def test_empty_set(self):
        with pytest.raises(ValueError):
            modular_hamiltonian(state("ghz"), "")


class TestSSAOperator:
    @pytest.mark.parametrize("kind", ["product-AB-C", "product-A-BC"])
    @pytest.mark.parametrize("dims", [(2, 2, 2), (2, 3, 2), (3, 2, 4)])
    def test_markov_products_vanish(self, kind, dims):
        t = ssa_operator(state(kind, dims, seed=8))
        assert np.linalg.norm(t.matrix) <= 1e-10

    def test_maximally_mixed_vanishes(self):
        np.testing.assert_allclose(ssa_operator(state("maximally-mixed", (2, 3, 2))).matrix, 0, atol=1e-14)

    def test_ghz_closed_form(self):
        rho = state("ghz")
        t = ssa_operator(rho).matrix
        # closed form: rho K = log 2 * rho, so T_C = log 2 * rho_C = (log 2 / 2) 1
        np.testing.assert_allclose(t, LOG2 / 2 * np.eye(2), atol=1e-14)
        np.testing.assert_allclose(ssa_operator_bruteforce(rho.matrix, 2, 2, 2), t, atol=1e-14)
        assert np.trace(t).real == pytest.approx(LOG2, abs=1e-14)

    @pytest.mark.parametrize("dims,kind,rank", [
        ((2, 2, 2), "induced-mixed", 3), ((2, 3, 2), "haar-pure", None),
        ((3, 2, 2), "induced-mixed", 12), ((2, 2, 3), "classical-diagonal", None),
    ])
    def test_matches_bruteforce(self, dims, kind, rank):
        rho = state(kind, dims, seed=21, rank=rank)
        t = ssa_operator(rho)
        np.testing.assert_allclose(t.matrix, ssa_operator_bruteforce(rho.matrix, *dims), atol=1e-11)

    def test_trace_is_cmi(self):
        for seed in range(20):
            rho = state("induced-mixed", seed=seed, rank=1 + seed % 8)
            t = ssa_operator(rho)
            assert np.trace(t.matrix).real == pytest.approx(conditional_mutual_information(rho), abs=1e-9)

    def test_local_unitary_covariance(self):
        rho = state("induced-mixed", (2, 2, 3), 17, rank=5)
        u = haar_unitary(3, make_rng(4))
        rotated = ssa_operator(local_unitary_C(rho, u)).matrix
        np.testing.assert_allclose(rotated, u @ ssa_operator(rho).matrix @ u.conj().T, atol=1e-9)

    def test_wrong_subsystem_count(self):
        with pytest.raises(DimensionError):
            ssa_operator(generate(StateSpec("maximally-mixed", (2, 2))))

    def test_support_violation_with_coarse_cutoff(self):
        # dropping the small eigenvalues of a marginal leaves weight off-support
        rho = state("induced-mixed", seed=2, rank=8)
        with pytest.raises(SupportViolation):
            ssa_operator(rho, ToleranceConfig(support_cutoff_rel=0.5))

    def test_hermiticity_anomaly(self):
        rho = state("induced-mixed", seed=2, rank=8)
        with pytest.raises(HermiticityAnomaly):
            ssa_operator(rho, ToleranceConfig(hermiticity_tol=1e-300))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**63), rank=st.integers(1, 12),
       dims=st.sampled_from([(2, 2, 2), (2, 3, 2), (3, 2, 2), (2, 2, 3)]))
def test_operator_ssa_property(seed, rank, dims):
    rho = state("induced-mixed", dims, seed, rank=min(rank, math.prod(dims)))
    t = ssa_operator(rho)
    assert np.linalg.eigvalsh(t.matrix)[0] >= -1e-9 * max(1, np.linalg.norm(t.matrix))
    assert conditional_mutual_information(rho) >= -1e-9


class TestCMI:
    def test_product(self):
        assert abs(conditional_mutual_information(state("product-AB-C", seed=1))) < 1e-12

    def test_ghz(self):
        assert conditional_mutual_information(state("ghz")) == pytest.approx(LOG2, abs=1e-12)

    def test_against_entropy_oracle(self):
        rho = state("induced-mixed", (2, 3, 2), 9, rank=4)
        m, dims = rho.matrix, [2, 3, 2]
        expected = (entropy(ptrace_loops(m, dims, [2])) + entropy(ptrace_loops(m, dims, [0]))
                    - entropy(ptrace_loops(m, dims, [0, 2])) - entropy(m))
        assert conditional_mutual_information(rho) == pytest.approx(expected, abs=1e-10)


class TestTwirl:
    def test_fixed_point(self):
        rho = maximally_mixed_A(state("induced-mixed", (3, 2, 2), 1, rank=6))
        np.testing.assert_allclose(twirl_A(rho).matrix, rho.matrix, atol=1e-14)

    def test_ghz(self):
        rho_bc = np.zeros((4, 4))
        rho_bc[0, 0] = rho_bc[3, 3] = 0.5
        np.testing.assert_allclose(twirl_A(state("ghz")).matrix, np.kron(np.eye(2) / 2, rho_bc), atol=1e-15)

    @pytest.mark.parametrize("da", [2, 3, 4])
    def test_identity(self, da):
        for seed in range(5):
            rho = state("induced-mixed", (da, 2, 2), seed, rank=4 * da)
            rho_bc = ptrace_loops(rho.matrix, [da, 2, 2], [0])
            residual = np.linalg.norm(twirl_A(rho).matrix - np.kron(np.eye(da) / da, rho_bc))
            assert residual <= 1e-11


class TestProofStep:
    def test_product_saturates(self):
        rho = state("product-AB-C", (2, 2, 3), 6)
        step = proof_step_check(rho, np.eye(3))
        assert abs(step.rhs - step.lhs) <= 1e-10

    def test_zero_projector(self):
        step = proof_step_check(state("induced-mixed", (2, 2, 3), 1, rank=6), np.zeros((3, 3)))
        assert step.lhs == 0 and step.rhs == 0

    def test_random_projectors(self):
        rng = make_rng(77)
        for seed in range(5):
            rho = state("induced-mixed", (2, 2, 3), seed, rank=1 + 2 * seed)
            for rank in (1, 2):
                for _ in range(10):
                    step = proof_step_check(rho, random_projector(3, rank, rng))
                    assert step.rhs - step.lhs >= -1e-9
                    assert abs(step.lhs - step.lhs_original) <= 1e-9
                    assert step.imag <= 1e-9

    def test_margin_is_projected_ssa_operator(self):
        rho = state("induced-mixed", (2, 2, 3), 3, rank=7)
        p = random_projector(3, 2, 5)
        step = proof_step_check(rho, p)
        assert step.margin == pytest.approx(np.trace(ssa_operator(rho).matrix @ p).real, abs=1e-10)

    def test_lhs_via_quasi_entropy(self):
        # the twirled pair (1/d_A (x) rho_BC, 1/d_A (x) rho_B (x) 1/d_C) through the
        # perspective path, minus the log d_C offset, reproduces lhs
        dims = (2, 2, 3)
        rho = state("induced-mixed", dims, 12, rank=9)
        p = random_projector(3, 1, 8)
        m = rho.matrix
        rho_bc = ptrace_loops(m, list(dims), [0])
        rho_b = ptrace_loops(m, list(dims), [0, 2])
        rho_t = np.kron(np.eye(2) / 2, rho_bc)
        sigma_t = np.kron(np.kron(np.eye(2) / 2, rho_b), np.eye(3) / 3)
        o = np.kron(np.eye(4), p)
        offset = math.log(3) * np.trace(m @ o).real
        step = proof_step_check(rho, p)
        assert quasi_entropy(rho_t, sigma_t, o) - offset == pytest.approx(step.lhs, abs=1e-10)
        # and the untwirled pair gives rhs
        sigma = np.kron(ptrace_loops(m, list(dims), [2]), np.eye(3) / 3)
        assert quasi_entropy(m, sigma, o) - offset == pytest.approx(step.rhs, abs=1e-10)

    def test_invalid_projector(self):
        with pytest.raises(ValueError):
            proof_step_check(state("ghz", (2, 2, 2)), np.array([[1, 1], [0, 0]]))


class TestWitness:
    def test_fully_product(self):
        rho_a = np.diag([0.3, 0.7])
        rho_b = np.diag([0.6, 0.4])
        rho_c = np.array([[0.5, 0.2], [0.2, 0.5]])
        rho = DensityMatrix(np.kron(np.kron(rho_a, rho_b), rho_c), (2, 2, 2))
        for traced in ("A", "B", "AB"):
            x, defect = restricted_trace_witness(rho, traced)
            assert defect <= 1e-14
            assert np.linalg.norm(x) <= 1e-13

    def test_ab_trace_matches_ssa_operator(self):
        rho = state("induced-mixed", seed=5, rank=4)
        x, defect = restricted_trace_witness(rho, "AB")
        assert defect <= 1e-10
        np.testing.assert_allclose(x, ssa_operator(rho).matrix, atol=1e-12)

    def test_single_traces_not_hermitian(self):
        rho = state("induced-mixed", seed=5, rank=4)
        for traced in ("A", "B"):
            _, defect = restricted_trace_witness(rho, traced)
            assert defect > 1e-6

    def test_complement_traces_are_hermitian(self):
        # keeping only A or only B gives Hermitian operators: each term is
        # a partial trace of rho_X log rho_X or cyclic in the traced factors
        rho = state("induced-mixed", seed=5, rank=4)
        for traced in ("BC", "AC"):
            _, defect = restricted_trace_witness(rho, traced)
            assert defect <= 1e-12
