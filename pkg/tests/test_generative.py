import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harseq.generative import (BernoulliEmissions, HmmModel, HsmmModel, ModelError, NbModel,
                               chunk_lengths, hmm_fit, hmm_log_joint, hmm_viterbi, hsmm_fit,
                               hsmm_log_joint, hsmm_viterbi, label_runs, nb_fit, nb_predict)

from helpers import make_fs
from oracles import bernoulli_loglik, best_path, hsmm_best, hsmm_segmentations

TINY = 1e-12


def random_emissions(rng, C, F):
    p = rng.uniform(0.05, 0.95, (C, F))
    return BernoulliEmissions(np.log(p), np.log1p(-p))


def random_hmm(rng, C, F):
    return HmmModel(np.log(rng.dirichlet(np.ones(C))), np.log(rng.dirichlet(np.ones(C), size=C)),
                    random_emissions(rng, C, F), 0.01, 0.01)


def random_hsmm(rng, C, F, d_max):
    A = rng.dirichlet(np.ones(max(C - 1, 1)), size=C)
    full = np.zeros((C, C))
    for c in range(C):
        full[c, [j for j in range(C) if j != c]] = A[c, :C - 1]
    with np.errstate(divide="ignore"):
        log_A = np.log(full)
    return HsmmModel(np.log(rng.dirichlet(np.ones(C))), log_A,
                     np.log(rng.dirichlet(np.ones(d_max), size=C)),
                     random_emissions(rng, C, F), 0.01, 0.01, 0.01)


def emission_table(em, f):
    C = em.log_on.shape[0]
    return np.array([[bernoulli_loglik(em.log_on, em.log_off, row, c) for c in range(C)]
                     for row in f])


class TestNaiveBayes:
    def test_mle_limit(self):
        m = nb_fit([make_fs([[1]] * 5, [0] * 5)], 1, alpha=TINY)
        assert math.exp(m.log_theta[0, 0]) == pytest.approx(1.0, abs=1e-9)

    def test_unseen_class_pure_smoothing(self):
        m = nb_fit([make_fs([[1], [0], [1]], [0, 0, 0])], 2, alpha=1.0)
        assert math.exp(m.log_theta[1, 0]) == pytest.approx(0.5)
        assert math.exp(m.log_prior[1]) == pytest.approx(1 / (3 + 2))

    def test_hand_count(self):
        m = nb_fit([make_fs([[1], [1], [1], [0], [1]], [0, 0, 0, 0, 1])], 2, alpha=1.0)
        assert math.exp(m.log_theta[0, 0]) == pytest.approx(4 / 6)

    def test_separating_feature(self):
        f = [[1, 0], [0, 1]] * 5
        y = [0, 1] * 5
        m = nb_fit([make_fs(f, y)], 2)
        assert nb_predict(m, make_fs(f, y)).tolist() == y

    def test_tie_goes_to_class_zero(self):
        em = BernoulliEmissions(np.log(np.full((3, 2), 0.5)), np.log(np.full((3, 2), 0.5)))
        m = NbModel(np.log(np.full(3, 1 / 3)), em, 1.0)
        assert nb_predict(m, make_fs([[0, 0]], [0])).tolist() == [0]

    def test_matches_exhaustive_class_scores(self):
        rng = np.random.default_rng(3)
        em = random_emissions(rng, 2, 4)
        m = NbModel(np.log([0.3, 0.7]), em, 1.0)
        row = [1, 0, 1, 1]
        scores = [m.log_prior[c] + bernoulli_loglik(em.log_on, em.log_off, row, c) for c in (0, 1)]
        assert nb_predict(m, make_fs([row], [0]))[0] == int(np.argmax(scores))

    def test_normalisation_and_open_interval(self):
        rng = np.random.default_rng(0)
        m = nb_fit([make_fs(rng.integers(0, 2, (50, 4)), rng.integers(0, 3, 50))], 4)
        assert abs(np.exp(m.log_prior).sum() - 1) < 1e-12
        p = np.exp(m.log_theta)
        assert np.all((p > 0) & (p < 1))

    def test_errors(self):
        with pytest.raises(ModelError):
            nb_fit([], 2)
        with pytest.raises(ModelError):
            nb_fit([make_fs([[1]], [2])], 2)
        m = nb_fit([make_fs([[1]], [0])], 2)
        with pytest.raises(ModelError, match="width"):
            nb_predict(m, make_fs([[1, 0]], [0]))


class TestHmmFit:
    def test_bigram_counts(self):
        m = hmm_fit([make_fs([[0]] * 3, [0, 0, 1])], 2, alpha_trans=TINY)
        A = np.exp(m.log_A)
        assert A[0].tolist() == pytest.approx([0.5, 0.5])
        assert A[1].tolist() == pytest.approx([0.5, 0.5])  # smoothing only

    def test_single_class(self):
        m = hmm_fit([make_fs([[0]] * 4, [0] * 4)], 1)
        assert np.exp(m.log_A).tolist() == [[1.0]]

    def test_pi_first_labels(self):
        m = hmm_fit([make_fs([[0]] * 2, [0, 0]), make_fs([[0]] * 2, [1, 1])], 2, alpha_trans=TINY)
        assert np.exp(m.log_pi).tolist() == pytest.approx([0.5, 0.5])

    def test_normalisation(self):
        rng = np.random.default_rng(1)
        data = [make_fs(rng.integers(0, 2, (30, 3)), rng.integers(0, 4, 30)) for _ in range(3)]
        m = hmm_fit(data, 5)
        assert np.allclose(np.exp(m.log_A).sum(axis=1), 1, atol=1e-12, rtol=0)
        assert abs(np.exp(m.log_pi).sum() - 1) < 1e-12

    @pytest.mark.parametrize("alpha", [1e-3, 1e-6, 1e-9, 1e-12])
    def test_smoothing_converges_to_mle(self, alpha):
        # labels 0,0,1,1,1,0 -> bigrams 00:1 01:1 11:2 10:1
        m = hmm_fit([make_fs([[0]] * 6, [0, 0, 1, 1, 1, 0])], 2, alpha, alpha)
        mle = np.array([[0.5, 0.5], [1 / 3, 2 / 3]])
        assert np.max(np.abs(np.exp(m.log_A) - mle)) < 10 * alpha


class TestHmmViterbi:
    def test_length_one_is_nb_with_pi(self):
        rng = np.random.default_rng(5)
        m = random_hmm(rng, 3, 2)
        row = np.array([[1, 0]])
        scores = m.log_pi + m.emissions.scores(row)[0]
        assert hmm_viterbi(m, row).tolist() == [int(np.argmax(scores))]

    def test_uniform_transitions_give_rowwise_argmax(self, backend):
        rng = np.random.default_rng(6)
        em = random_emissions(rng, 3, 4)
        m = HmmModel(np.log(np.full(3, 1 / 3)), np.log(np.full((3, 3), 1 / 3)), em, 1, 1)
        f = rng.integers(0, 2, (8, 4))
        assert hmm_viterbi(m, f).tolist() == np.argmax(em.scores(f), axis=1).tolist()

    def test_sticky_chain_matches_enumeration(self, backend):
        em = BernoulliEmissions(np.log([[0.6], [0.4]]), np.log([[0.4], [0.6]]))
        A = np.log([[0.95, 0.05], [0.05, 0.95]])
        m = HmmModel(np.log([0.5, 0.5]), A, em, 1, 1)
        f = np.array([[1], [0], [1], [0], [1]])
        score, path = best_path(m.log_pi, m.log_A, emission_table(em, f))
        assert hmm_viterbi(m, f).tolist() == path
        assert hmm_log_joint(m, f, path) == pytest.approx(score, abs=1e-9)

    def test_tie_rule_lexicographic(self, backend):
        em = BernoulliEmissions(np.log(np.full((2, 1), 0.5)), np.log(np.full((2, 1), 0.5)))
        m = HmmModel(np.log([0.5, 0.5]), np.log(np.full((2, 2), 0.5)), em, 1, 1)
        assert hmm_viterbi(m, np.zeros((4, 1))).tolist() == [0, 0, 0, 0]

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6), st.integers(1, 3), st.integers(1, 6), st.integers(1, 3))
    def test_matches_enumeration(self, seed, C, T, F):
        rng = np.random.default_rng(seed)
        m = random_hmm(rng, C, F)
        f = rng.integers(0, 2, (T, F))
        score, path = best_path(m.log_pi, m.log_A, emission_table(m.emissions, f), tol=1e-9)
        got = hmm_viterbi(m, f)
        assert hmm_log_joint(m, f, got) == pytest.approx(score, abs=1e-9)
        assert got.tolist() == path


class TestHsmmFit:
    def test_run_extraction(self):
        assert label_runs([0, 0, 0, 1]) == [(0, 3), (1, 1)]
        m = hsmm_fit([make_fs([[0]] * 4, [0, 0, 0, 1])], 2, d_max=4)
        assert int(np.argmax(m.log_D[0])) == 2  # duration 3

    def test_single_run_uniform_row(self):
        m = hsmm_fit([make_fs([[0]] * 3, [1, 1, 1])], 4, d_max=5)
        row = np.exp(m.log_A[1])
        assert row[1] == 0.0
        assert row[[0, 2, 3]].tolist() == pytest.approx([1 / 3] * 3)

    def test_long_run_lands_in_d_max_bucket(self):
        assert chunk_lengths(7, 3) == [3, 3, 1]
        assert chunk_lengths(6, 3) == [3, 3]
        m = hsmm_fit([make_fs([[0]] * 3, [0, 0, 0])], 1, d_max=2, alpha_dur=TINY)
        assert np.exp(m.log_D[0]).tolist() == pytest.approx([0.5, 0.5])
        m = hsmm_fit([make_fs([[0]] * 9, [0] * 9)], 1, d_max=3, alpha_dur=TINY)
        assert int(np.argmax(m.log_D[0])) == 2

    def test_normalisation_zero_diagonal(self):
        rng = np.random.default_rng(2)
        data = [make_fs(rng.integers(0, 2, (40, 2)), rng.integers(0, 3, 40)) for _ in range(2)]
        m = hsmm_fit(data, 3, d_max=5)
        A = np.exp(m.log_A)
        assert np.all(np.diag(A) == 0)
        assert np.allclose(A.sum(axis=1), 1, atol=1e-12, rtol=0)
        assert np.allclose(np.exp(m.log_D).sum(axis=1), 1, atol=1e-12, rtol=0)

    def test_bad_d_max(self):
        with pytest.raises(ModelError):
            hsmm_fit([make_fs([[0]], [0])], 2, d_max=0)


class TestHsmmViterbi:
    def test_single_class(self, backend):
        m = hsmm_fit([make_fs([[0]] * 3, [0, 0, 0])], 1, d_max=2)
        assert hsmm_viterbi(m, np.zeros((5, 1))).tolist() == [0] * 5

    def test_forced_duration_two(self, backend):
        rng = np.random.default_rng(0)
        m = random_hsmm(rng, 2, 1, 3)
        log_D = np.full((2, 3), -np.inf)
        log_D[:, 1] = 0.0
        m = HsmmModel(m.log_pi, m.log_A, log_D, m.emissions, 1, 1, 1)
        path = hsmm_viterbi(m, rng.integers(0, 2, (4, 1)))
        assert label_runs(path) == [(path[0], 2), (1 - path[0], 2)]

    def test_hand_set_matches_brute_force(self, backend):
        log_pi = np.log([0.6, 0.4])
        log_A = np.log([[1e-300, 1.0], [1.0, 1e-300]])
        log_A[0, 0] = log_A[1, 1] = -np.inf
        log_D = np.log([[0.2, 0.5, 0.3], [0.6, 0.3, 0.1]])
        em = BernoulliEmissions(np.log([[0.8], [0.3]]), np.log([[0.2], [0.7]]))
        m = HsmmModel(log_pi, log_A, log_D, em, 1, 1, 1)
        f = np.array([[1], [1], [0], [0], [1]])
        score, path = hsmm_best(log_pi, log_A, log_D, emission_table(em, f))
        assert hsmm_viterbi(m, f).tolist() == path

    def test_log_joint_rejects_forbidden(self):
        m = random_hsmm(np.random.default_rng(1), 2, 1, 2)
        f = np.zeros((3, 1))
        assert hsmm_log_joint(m, f, [(0, 1), (0, 2)]) == -np.inf
        assert np.isfinite(hsmm_log_joint(m, f, [(0, 2), (0, 1)]))

    def test_enumerator_sanity(self):
        # C=1, d_max=1: only the all-chunks segmentation
        assert list(hsmm_segmentations(3, 1, 1)) == [[(0, 1), (0, 1), (0, 1)]]

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6), st.integers(1, 3), st.integers(1, 6), st.integers(1, 3))
    def test_matches_brute_force(self, seed, C, T, d_max):
        rng = np.random.default_rng(seed)
        m = random_hsmm(rng, C, 2, d_max)
        f = rng.integers(0, 2, (T, 2))
        score, path = hsmm_best(m.log_pi, m.log_A, m.log_D, emission_table(m.emissions, f))
        got = hsmm_viterbi(m, f)
        assert got.tolist() == path
        segs = [(c, n) for c, n in label_runs(got) for n in chunk_lengths(n, d_max)]
        assert hsmm_log_joint(m, f, segs) == pytest.approx(score, abs=1e-9)


def test_decoding_deterministic():
    rng = np.random.default_rng(9)
    m = random_hsmm(rng, 3, 4, 5)
    f = rng.integers(0, 2, (200, 4))
    assert np.array_equal(hsmm_viterbi(m, f), hsmm_viterbi(m, f))
