"""
Tests for src/conditions.py
"""

import pytest
from fractions import Fraction

import numpy as np


def _proyeccion_aleatoria(rng, n):
    from scipy.linalg import orth
    k = int(rng.integers(1, n + 1))
    Q = orth(rng.standard_normal((n, k)))
    return Q @ Q.T


def _contraccion_l2(rng, n):
    M = rng.standard_normal((n, n))
    return M / np.linalg.svd(M, compute_uv=False)[0] * 0.999999


class TestCheckWPrime:
    """Tests for check_w_prime and check_w."""

    def test_example1_generators_hold(self, example1_exact):
        """Test T1 and T2 satisfy (W') on l1 by sign enumeration."""
        from src.conditions import Method, WStatus, check_w_prime
        for T in example1_exact.ops:
            veredicto = check_w_prime(T)
            assert veredicto.status == WStatus.HOLDS
            assert veredicto.method == Method.SIGN_ENUMERATION

    def test_example1_adjoint_fails_with_witness(self, example1_exact):
        """Test T1* on linf fails with an exact witness on the unit sphere."""
        from src.conditions import WStatus, check_w_prime
        from src.operators import adjoint, apply
        from src.space import norm
        T1_adj = adjoint(example1_exact.ops[0])
        veredicto = check_w_prime(T1_adj)
        assert veredicto.status == WStatus.FAILS
        x = veredicto.witness
        assert norm(x, T1_adj.space) == 1
        assert norm(apply(T1_adj, x), T1_adj.space) == 1
        assert veredicto.gap == Fraction(1, 2)

    def test_rotation_fails(self):
        """Test the 90 degree rotation fails through the p=2 route."""
        from src.conditions import Method, WStatus, check_w_prime
        from src.scenarios import rotation_counterexample
        veredicto = check_w_prime(rotation_counterexample().ops[0])
        assert veredicto.status == WStatus.FAILS
        assert veredicto.method == Method.ALGEBRAIC_P2
        assert veredicto.gap == pytest.approx(np.sqrt(2))

    def test_random_projections_hold(self, rng):
        """Test orthogonal projections satisfy (W')."""
        from src.conditions import WStatus, check_w_prime
        from src.operators import LinearOperator
        from src.space import NormSpec
        for _ in range(20):
            n = int(rng.integers(1, 7))
            T = LinearOperator(_proyeccion_aleatoria(rng, n), NormSpec(n, 2))
            assert check_w_prime(T).status == WStatus.HOLDS

    def test_strict_contraction_is_vacuous(self):
        """Test ||T|| < 1 holds without witnesses."""
        from src.conditions import WStatus, check_w_prime
        from src.operators import LinearOperator
        from src.space import NormSpec
        T = LinearOperator(0.5 * np.eye(3), NormSpec(3, 4))
        assert check_w_prime(T).status == WStatus.HOLDS

    def test_diagonal_linf_fails(self):
        """Test diag(1, 1/2) on linf fails at (1, 1)."""
        from src.conditions import WStatus, check_w_prime
        from src.operators import LinearOperator
        from src.space import NormSpec
        T = LinearOperator.from_rows([[1, 0], [0, "1/2"]], NormSpec(2, "inf"), exact=True)
        veredicto = check_w_prime(T)
        assert veredicto.status == WStatus.FAILS
        assert veredicto.witness.tolist() == [1, 1]

    def test_float_linf_adjoints_fail(self, example1_float):
        """Test the linf route runs on float matrices."""
        from src.conditions import Method, WStatus, check_w_prime
        from src.operators import adjoint
        from src.scenarios import diagonal_contractions
        veredicto = check_w_prime(adjoint(example1_float.ops[0]))
        assert veredicto.status == WStatus.FAILS
        assert veredicto.method == Method.SIGN_ENUMERATION
        assert veredicto.witness.tolist() == [1.0, 1.0]
        assert veredicto.gap == pytest.approx(0.5)
        for D in diagonal_contractions(4, 1, 0).ops:
            veredicto = check_w_prime(adjoint(D))
            assert veredicto.status == WStatus.FAILS
            assert veredicto.method == Method.SIGN_ENUMERATION

    def test_float_l1_generators_hold(self, example1_float):
        """Test the l1 route on float matrices agrees with the exact one."""
        from src.conditions import WStatus, check_w_prime
        for T in example1_float.ops:
            assert check_w_prime(T).status == WStatus.HOLDS

    @pytest.mark.parametrize("theta", [1e-3, 1e-4, 5e-5, 1e-5])
    def test_small_angle_rotation_fails(self, theta):
        """Test isometries that barely move vectors still fail on the p=2 route."""
        from src.conditions import Method, WStatus, check_w_prime
        from src.operators import LinearOperator, apply
        from src.space import NormSpec, norm
        c, s = np.cos(theta), np.sin(theta)
        R = LinearOperator(np.array([[c, -s], [s, c]]), NormSpec(2, 2))
        veredicto = check_w_prime(R)
        assert veredicto.status == WStatus.FAILS
        assert veredicto.method == Method.ALGEBRAIC_P2
        assert veredicto.gap == pytest.approx(2 * np.sin(theta / 2), rel=1e-6)
        x = veredicto.witness
        assert abs(float(norm(apply(R, x), R.space)) - float(norm(x, R.space))) <= 1e-10

    def test_non_contraction_raises(self):
        """Test check_w_prime requires a certified contraction."""
        from src.conditions import check_w_prime
        from src.operators import ContractViolationError, LinearOperator
        from src.space import NormSpec
        with pytest.raises(ContractViolationError):
            check_w_prime(LinearOperator(2 * np.eye(2), NormSpec(2, 1)))

    def test_forced_route_must_match_p(self):
        """Test algebraic_p2 is rejected for p != 2."""
        from src.conditions import Method, check_w_prime
        from src.operators import identity
        from src.space import NormSpec
        with pytest.raises(ValueError):
            check_w_prime(identity(NormSpec(2, 1)), method=Method.ALGEBRAIC_P2)

    def test_check_w_relabels(self, example1_exact):
        """Test check_w reports condition W with the same status."""
        from src.conditions import check_w, check_w_prime
        T = example1_exact.ops[1]
        assert check_w(T).condition == "W"
        assert check_w(T).status == check_w_prime(T).status

    def test_routes_never_contradict(self, rng):
        """Test numeric search never refutes where the p=2 route holds."""
        from src.conditions import Method, WStatus, check_w_prime
        from src.operators import LinearOperator
        from src.space import NormSpec
        for _ in range(5):
            n = int(rng.integers(2, 5))
            T = LinearOperator(_proyeccion_aleatoria(rng, n), NormSpec(n, 2))
            algebraica = check_w_prime(T)
            numerica = check_w_prime(T, method=Method.NUMERIC_SEARCH, restarts=2)
            assert algebraica.status == WStatus.HOLDS
            assert numerica.status != WStatus.FAILS

    def test_numeric_search_finds_rotation_witness(self):
        """Test numeric search refutes the rotation with a polished witness."""
        from src.conditions import Method, WStatus, check_w_prime
        from src.scenarios import rotation_counterexample
        veredicto = check_w_prime(rotation_counterexample().ops[0], method=Method.NUMERIC_SEARCH, restarts=2)
        assert veredicto.status == WStatus.FAILS
        assert veredicto.gap > 1e-4

    def test_to_dict(self, example1_exact):
        """Test verdict serialization."""
        from src.conditions import check_w_prime
        datos = check_w_prime(example1_exact.ops[0]).to_dict()
        assert datos["status"] == "holds"
        assert datos["method"] == "sign_enumeration"
        assert datos["witness"] is None


class TestWSequenceDefect:
    """Tests for w_sequence_defect."""

    def test_constant_sequence_of_rotation(self):
        """Test a rotation keeps zero norm gap with nonzero displacement."""
        from src.conditions import w_sequence_defect
        from src.scenarios import rotation_counterexample
        from src.space import Vector
        R = rotation_counterexample().ops[0]
        muestra = w_sequence_defect(R, [Vector.from_values([1, 0])] * 5)
        assert muestra.max_gap == pytest.approx(0.0, abs=1e-15)
        assert muestra.max_displacement == pytest.approx(np.sqrt(2))

    def test_failing_operators_break_w_with_constant_witness(self, rng):
        """Test the constant sequence at a (W') witness has zero gap and fixed displacement."""
        from src.conditions import WStatus, check_w_prime, w_sequence_defect
        from src.operators import LinearOperator
        from src.space import NormSpec
        for _ in range(10):
            n = int(rng.integers(2, 6))
            Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
            T = LinearOperator(Q, NormSpec(n, 2))
            veredicto = check_w_prime(T)
            assert veredicto.status == WStatus.FAILS
            muestra = w_sequence_defect(T, [veredicto.witness] * 5)
            assert muestra.max_gap <= 1e-10
            assert min(muestra.displacements) == pytest.approx(veredicto.gap)

    def test_small_gaps_force_small_displacements(self, rng):
        """Test (W')-holding l2 operators shrink displacement with the norm gap."""
        from src.conditions import WStatus, check_w_prime, w_sequence_defect
        from src.operators import LinearOperator
        from src.space import NormSpec, Vector
        for _ in range(10):
            n = int(rng.integers(2, 7))
            k = int(rng.integers(1, n))
            base = np.linalg.qr(rng.standard_normal((n, n)))[0]
            P = base[:, :k] @ base[:, :k].T
            T = LinearOperator(P, NormSpec(n, 2))
            assert check_w_prime(T).status == WStatus.HOLDS

            u, v = base[:, 0], base[:, k]
            xs = [Vector((u + t * v) / np.sqrt(1 + t * t)) for t in (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)]
            muestra = w_sequence_defect(T, xs)
            for brecha, desplazamiento in zip(muestra.norm_gaps, muestra.displacements):
                # ‖x - Px‖² = (‖x‖ - ‖Px‖)(‖x‖ + ‖Px‖) <= 2 (‖x‖ - ‖Px‖)
                assert desplazamiento ** 2 <= 2 * brecha + 1e-14
            assert list(muestra.norm_gaps) == sorted(muestra.norm_gaps, reverse=True)
            assert muestra.displacements[-1] < 1e-4


class TestSemigroupFalsifier:
    """Tests for semigroup_w_falsifier."""

    def test_projections_find_no_violation(self):
        """Test orthogonal projections give no candidate violation."""
        from src.conditions import VerdictHint, semigroup_w_falsifier
        from src.scenarios import von_neumann_2proj
        escenario = von_neumann_2proj(dim=6, seed=1)
        reporte = semigroup_w_falsifier(escenario.ops, max_word_len=2, budget=6, seed=0, starts_per_word=3)
        assert reporte.verdict_hint == VerdictHint.NO_VIOLATION_FOUND
        assert reporte.words_examined == 6

    def test_rotation_is_candidate_violation(self):
        """Test rotation words keep the norm and move x."""
        from src.conditions import VerdictHint, semigroup_w_falsifier
        from src.scenarios import rotation_counterexample
        reporte = semigroup_w_falsifier(rotation_counterexample().ops, max_word_len=2, budget=2, seed=0, starts_per_word=2)
        assert reporte.verdict_hint == VerdictHint.CANDIDATE_VIOLATION
        # R^2 = -I desplaza 2 en la esfera unidad
        assert reporte.best_word == (1, 1)
        assert reporte.displacement == pytest.approx(2.0)
        assert reporte.exact_failures == 2

    def test_example1_finds_no_violation(self, example1_exact):
        """Test every word of T1, T2 is [[1, c], [0, 0]] and keeps (W')."""
        from src.conditions import VerdictHint, semigroup_w_falsifier
        reporte = semigroup_w_falsifier(example1_exact.ops, max_word_len=3, budget=14, seed=0, starts_per_word=3)
        assert reporte.verdict_hint == VerdictHint.NO_VIOLATION_FOUND
        assert reporte.words_examined == 14
        assert reporte.exact_failures == 0

    def test_best_displacement_grows_with_budget(self):
        """Test a larger budget never lowers the best displacement."""
        from src.conditions import semigroup_w_falsifier
        from src.operators import LinearOperator
        from src.scenarios import rotation_counterexample
        R = rotation_counterexample().ops[0]
        D = LinearOperator.from_rows([[1, 0], [0, "1/2"]], R.space, name="D")
        desplazamientos = [
            semigroup_w_falsifier([D, R], max_word_len=2, budget=b, seed=3, starts_per_word=2).displacement
            for b in (1, 2, 3, 4, 6)
        ]
        assert desplazamientos == sorted(desplazamientos)

    def test_deterministic(self, example1_exact):
        """Test identical seeds give identical reports."""
        from src.conditions import semigroup_w_falsifier
        a = semigroup_w_falsifier(example1_exact.ops, max_word_len=2, budget=6, seed=7, starts_per_word=2)
        b = semigroup_w_falsifier(example1_exact.ops, max_word_len=2, budget=6, seed=7, starts_per_word=2)
        assert a.to_dict() == b.to_dict()

    def test_budget_validation(self, example1_exact):
        """Test budget must be positive."""
        from src.conditions import semigroup_w_falsifier
        with pytest.raises(ValueError):
            semigroup_w_falsifier(example1_exact.ops, budget=0)


class TestAdjointSupportInvariance:
    """Tests for adjoint_support_invariance and adjoint_orbit_pairing."""

    def test_example1_face_preserved_not_fixed(self, example1_exact):
        """Test T1* maps J(e1) into itself without fixing it."""
        from src.conditions import adjoint_support_invariance
        from src.space import FaceKind, Vector
        e1 = Vector.from_values([1, 0], exact=True)
        reporte = adjoint_support_invariance(example1_exact.ops[0], e1)
        assert reporte.face_kind == FaceKind.BOX
        assert reporte.face_preserved
        assert not reporte.pointwise_fixed
        assert reporte.functionals_tested == 3

    def test_float_example1_face(self, example1_float):
        """Test float e1 in l1 gives the same box face report."""
        from src.conditions import adjoint_support_invariance
        from src.space import FaceKind, Vector
        reporte = adjoint_support_invariance(example1_float.ops[0], Vector(np.array([1.0, 0.0])))
        assert reporte.face_kind == FaceKind.BOX
        assert reporte.face_preserved
        assert not reporte.pointwise_fixed
        assert reporte.functionals_tested == 3

    def test_reports_adjusted_anchor(self, example1_float):
        """Test negligible coordinates are dropped and the tested anchor is reported."""
        from src.conditions import adjoint_support_invariance
        from src.space import FaceKind, Vector
        y = Vector(np.array([1.0, 1e-14]))
        reporte = adjoint_support_invariance(example1_float.ops[0], y)
        assert reporte.anchor.tolist() == [1.0, 0.0]
        assert reporte.to_dict()["anchor"] == [1.0, 0.0]
        assert reporte.face_kind == FaceKind.BOX
        assert reporte.functionals_tested == 3

    def test_projection_pointwise_fixed(self):
        """Test orthogonal projections fix J(y) pointwise."""
        from src.conditions import adjoint_support_invariance
        from src.operators import common_fixed_space
        from src.scenarios import von_neumann_2proj
        escenario = von_neumann_2proj(dim=8, seed=2)
        y = common_fixed_space(escenario.ops).vectors()[0]
        for T in escenario.ops:
            reporte = adjoint_support_invariance(T, y)
            assert reporte.face_preserved
            assert reporte.pointwise_fixed

    def test_non_fixed_vector_raises(self, example1_exact):
        """Test y must be a fixed point."""
        from src.conditions import PreconditionError, adjoint_support_invariance
        from src.space import Vector
        with pytest.raises(PreconditionError):
            adjoint_support_invariance(example1_exact.ops[0], Vector.from_values([0, 1], exact=True))

    def test_zero_vector_raises(self, example1_exact):
        """Test y must be nonzero."""
        from src.conditions import PreconditionError, adjoint_support_invariance
        from src.space import Vector
        with pytest.raises(PreconditionError):
            adjoint_support_invariance(example1_exact.ops[0], Vector.from_values([0, 0], exact=True))

    def test_orbit_pairing_example1(self, example1_exact):
        """Test (W* f)(e1) = f(e1) for all words up to length 3."""
        from src.conditions import adjoint_orbit_pairing
        from src.space import Vector
        reporte = adjoint_orbit_pairing(example1_exact.ops, Vector.from_values([1, 0], exact=True))
        assert reporte.holds
        assert reporte.max_defect == 0.0
        assert reporte.words_checked == 2 + 4 + 8
