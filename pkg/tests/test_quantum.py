import random
from fractions import Fraction

import numpy as np
import pytest

from causelab import (
    ProcessFunctionMixture,
    canonical_interventions,
    evaluate_correlation,
    enumerate_process_functions,
    make_scenario,
    mixture_process,
)
from causelab.errors import InvalidTable, NonDiagonal, ScenarioMismatch
from causelab.games import bfw_process, builtin_gynin, builtin_ocb, score
from causelab.quantum import (
    InstrumentCJ,
    ProcessMatrix,
    builtin_bfw,
    builtin_ocb as builtin_ocb_process,
    cj_from_kraus,
    classical_from_diagonal,
    classical_instruments,
    diagonal_from_classical,
    is_valid_instrument,
    is_valid_process_matrix,
    pm_correlation,
)

from conftest import identity_loop, random_interventions

OCB_TARGET = (2 + np.sqrt(2)) / 4


def ket(i: int) -> np.ndarray:
    v = np.zeros(2, dtype=np.complex128)
    v[i] = 1.0
    return v


class TestCjFromKraus:
    def test_identity_channel_rank_one_trace_two(self):
        cj = cj_from_kraus([np.eye(2)], 2, 2)
        assert abs(np.trace(cj) - 2.0) < 1e-12
        eigs = np.linalg.eigvalsh(cj)
        assert np.sum(eigs > 1e-9) == 1

    def test_depolarizing_channel_is_half_identity(self):
        kraus = [
            np.outer(ket(i), ket(j).conj()) / np.sqrt(2) for i in range(2) for j in range(2)
        ]
        cj = cj_from_kraus(kraus, 2, 2)
        assert np.max(np.abs(cj - np.eye(4) / 2)) < 1e-12

    def test_discard_map_is_input_identity(self):
        kraus = [ket(0).conj().reshape(1, 2), ket(1).conj().reshape(1, 2)]
        cj = cj_from_kraus(kraus, 2, 1)
        assert np.max(np.abs(cj - np.eye(2))) < 1e-12

    def test_complex_kraus_stays_valid(self):
        # measure in the circular basis and reprepare computational states
        plus_i = (ket(0) + 1j * ket(1)) / np.sqrt(2)
        minus_i = (ket(0) - 1j * ket(1)) / np.sqrt(2)
        ops = []
        for x, state in enumerate((plus_i, minus_i)):
            kraus = np.outer(ket(x), state.conj())
            ops.append(cj_from_kraus([kraus], 2, 2))
        instr = InstrumentCJ(2, 2, (tuple(ops),))
        report = is_valid_instrument(instr)
        assert report.valid

    def test_shape_mismatch(self):
        with pytest.raises(InvalidTable):
            cj_from_kraus([np.eye(3)], 2, 2)


class TestInstrumentValidity:
    def test_canonical_copy_instrument(self, gynin_scenario):
        for instr in classical_instruments(canonical_interventions(gynin_scenario)):
            assert is_valid_instrument(instr).valid

    def test_doubled_marginal_rejected(self):
        cj = cj_from_kraus([np.eye(2)], 2, 2)
        instr = InstrumentCJ(2, 2, ((cj, cj),))  # sums to twice a channel
        assert not is_valid_instrument(instr).valid

    def test_negative_element_rejected(self):
        cj = cj_from_kraus([np.eye(2)], 2, 2)
        instr = InstrumentCJ(2, 2, ((-cj, 2 * cj),))
        assert not is_valid_instrument(instr).valid


class TestProcessMatrixValidity:
    def test_ocb_process_is_valid(self):
        pm, _ = builtin_ocb_process()
        report = is_valid_process_matrix(pm)
        assert report.valid
        assert report.normalization_deviation < 1e-12

    def test_grandfather_diagonal_is_invalid(self, single_scenario):
        pm = diagonal_from_classical(identity_loop(single_scenario))
        assert not is_valid_process_matrix(pm).valid

    def test_state_with_discarded_output_is_valid(self):
        sc = make_scenario(1, 1, 1, 2, 2)
        rho = np.array([[0.25, 0.1], [0.1, 0.75]], dtype=np.complex128)
        pm = ProcessMatrix(sc, np.kron(rho, np.eye(2)))
        assert is_valid_process_matrix(pm).valid

    def test_hermiticity_and_spectrum_checks_are_basis_invariant(self):
        rng = np.random.default_rng(4)
        pm, _ = builtin_ocb_process()

        def haar_unitary(d):
            z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            q, r = np.linalg.qr(z)
            return q * (np.diagonal(r) / np.abs(np.diagonal(r)))

        rotation = np.kron(haar_unitary(4), haar_unitary(4))  # product over parties
        rotated = ProcessMatrix(pm.scenario, rotation @ pm.matrix @ rotation.conj().T)
        base = is_valid_process_matrix(pm)
        moved = is_valid_process_matrix(rotated)
        atol = 1e-9
        assert (base.hermiticity_deviation <= atol) == (moved.hermiticity_deviation <= atol)
        assert (base.min_eigenvalue >= -atol) == (moved.min_eigenvalue >= -atol)

    def test_diagonal_validity_matches_table_consistency(self, gyni_scenario):
        from causelab import is_logically_consistent
        from causelab.scenario import QuasiProcess

        rng = random.Random(13)
        for _ in range(20):
            table = []
            for _ in range(gyni_scenario.n_outputs):
                column = [Fraction(rng.randint(0, 4)) for _ in range(gyni_scenario.n_inputs)]
                total = sum(column) or Fraction(1)
                table.append([Fraction(v, 1) / total for v in column])
            flat = tuple(
                table[o][i] for i in range(gyni_scenario.n_inputs) for o in range(gyni_scenario.n_outputs)
            )
            qp = QuasiProcess(gyni_scenario, flat)
            pm = diagonal_from_classical(qp)
            assert is_valid_process_matrix(pm).valid == is_logically_consistent(qp).consistent


class TestPmCorrelation:
    def test_ocb_score(self):
        pm, instruments = builtin_ocb_process()
        corr = pm_correlation(pm, instruments)
        assert abs(float(score(builtin_ocb(), corr)) - OCB_TARGET) <= 1e-9
        assert corr.max_imag_residual <= 1e-12
        assert all(abs(m - 1.0) <= 1e-9 for m in corr.setting_mass())

    def test_bfw_diagonal_wins_perfectly(self):
        pm, instruments = builtin_bfw()
        corr = pm_correlation(pm, instruments)
        assert abs(float(score(builtin_gynin(), corr)) - 1.0) <= 1e-12

    def test_born_rule_for_state_preparation(self):
        sc = make_scenario(1, 1, 2, 2, 1)
        plus = (ket(0) + ket(1)) / np.sqrt(2)
        pm = ProcessMatrix(sc, np.outer(plus, plus.conj()))
        ops = []
        for x in range(2):
            kraus = np.zeros((1, 2), dtype=np.complex128)
            kraus[0, x] = 1.0
            ops.append(cj_from_kraus([kraus], 2, 1))
        instr = InstrumentCJ(2, 1, (tuple(ops),))
        corr = pm_correlation(pm, [instr])
        assert abs(corr.prob((0,), (0,)) - 0.5) < 1e-12
        assert abs(corr.prob((1,), (0,)) - 0.5) < 1e-12

    def test_dimension_mismatch(self):
        pm, instruments = builtin_ocb_process()
        with pytest.raises(ScenarioMismatch):
            pm_correlation(pm, instruments[:1])

    def test_clipped_table(self):
        pm, instruments = builtin_ocb_process()
        corr = pm_correlation(pm, instruments)
        assert all(0.0 <= v <= 1.0 for v in corr.clipped_table())


class TestDiagonalBridge:
    def test_bfw_round_trip_exact(self):
        qp = bfw_process()
        assert classical_from_diagonal(diagonal_from_classical(qp)).table == qp.table

    def test_non_diagonal_rejected(self):
        pm, _ = builtin_ocb_process()
        with pytest.raises(NonDiagonal):
            classical_from_diagonal(pm)

    @pytest.mark.parametrize("n_parties", [1, 2, 3])
    def test_bridge_matches_classical_evaluator(self, n_parties):
        # dyadic mixtures keep the float representation exact
        rng = random.Random(100 + n_parties)
        sc = make_scenario(n_parties, 2, 2, 2, 2)
        functions = list(enumerate_process_functions(sc))
        for _ in range(3):
            chosen = rng.sample(functions, min(4, len(functions)))
            weights = [Fraction(1, 4)] * 4 if len(chosen) == 4 else [Fraction(1, len(chosen))] * len(chosen)
            process = mixture_process(ProcessFunctionMixture(tuple(zip(chosen, weights))))
            family = random_interventions(rng, sc)
            exact = evaluate_correlation(process, family)
            numeric = pm_correlation(
                diagonal_from_classical(process), classical_instruments(family)
            )
            worst = max(
                abs(float(e) - n) for e, n in zip(exact.table, numeric.table)
            )
            assert worst <= 1e-12


class TestVendoredData:
    def test_checksum_validates(self):
        pm, instruments = builtin_ocb_process()
        assert pm.dim == 16
        assert len(instruments) == 2

    def test_checksum_mismatch_detected(self, monkeypatch):
        import causelab.quantum as q

        monkeypatch.setattr(q, "OCB_DATA_SHA256", "0" * 64)
        with pytest.raises(InvalidTable):
            q.builtin_ocb()
