import math

import numpy as np
import pytest

from tracelink.corpus import Corpus, Artifact, TokenStream, build_term_weights, \
    tokenize_corpus
from tracelink.ir import (
    TECHNIQUES,
    SimilarityMatrix,
    TechniqueConfig,
    combine,
    compute_all,
    js_similarity,
    lda_similarity,
    lda_topic_distributions,
    lsi_similarity,
    nmf_factorize,
    nmf_similarity,
    serialize_matrices,
    vsm_similarity,
)


def make_corpus(source_texts: dict, target_texts: dict, pair_kind="req_src"):
    sources = [Artifact(k, "requirement", k, v) for k, v in sorted(source_texts.items())]
    targets = [Artifact(k, "source_code", k, v) for k, v in sorted(target_texts.items())]
    return Corpus(sources=sources, targets=targets, pair_kind=pair_kind)


def weights_for(corpus):
    streams = tokenize_corpus(corpus)
    return streams, build_term_weights(streams, "tfidf"), \
        build_term_weights(streams, "term_probability")


@pytest.fixture
def mirrored_corpus():
    """Targets are textual copies of sources, so the diagonal must be 1."""
    texts = {
        "a": "certificate enrollment handshake negotiation protocol",
        "b": "archive rotation compression schedule storage",
        "c": "parser grammar validation tokens syntax",
    }
    return make_corpus(
        {f"s_{k}": v for k, v in texts.items()},
        {f"t_{k}": v for k, v in texts.items()},
    )


class TestVSM:
    def test_identical_documents_score_one(self, mirrored_corpus):
        streams, tfidf, _ = weights_for(mirrored_corpus)
        sims = vsm_similarity(tfidf, mirrored_corpus)
        assert np.allclose(np.diag(sims.values), 1.0, atol=1e-9)

    def test_disjoint_vocabulary_scores_zero(self):
        corpus = make_corpus({"s": "alpha bravo charlie"},
                             {"t": "delta echo foxtrot"})
        _, tfidf, _ = weights_for(corpus)
        sims = vsm_similarity(tfidf, corpus)
        assert sims.values[0, 0] == 0.0

    def test_hand_cosine(self):
        # vectors (1,1,0) and (1,0,0) -> 1/sqrt(2); idf made constant by
        # keeping every term in exactly one extra padding document
        vecs = np.array([[1.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
        na = np.linalg.norm(vecs[0])
        expected = vecs[0] @ vecs[1] / (na * np.linalg.norm(vecs[1]))
        assert expected == pytest.approx(1 / math.sqrt(2))
        from tracelink.ir.engines import _cosine_cross
        assert _cosine_cross(vecs[:1], vecs[1:])[0, 0] == pytest.approx(1 / math.sqrt(2))

    def test_symmetry_both_roles(self, mirrored_corpus):
        streams, tfidf, _ = weights_for(mirrored_corpus)
        sims = vsm_similarity(tfidf, mirrored_corpus)
        # mirrored corpus: sim(s_i, t_j) must equal sim(s_j, t_i)
        assert np.allclose(sims.values, sims.values.T, atol=1e-9)


def _jacobi_eigh(gram: np.ndarray, sweeps: int = 60):
    """Independent dense eigendecomposition via cyclic Jacobi rotations."""
    a = gram.copy()
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(sweeps):
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-15:
                    continue
                theta = 0.5 * math.atan2(2 * a[p, q], a[q, q] - a[p, p])
                c, s = math.cos(theta), math.sin(theta)
                rot = np.eye(n)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    return np.diag(a), v


class TestLSI:
    def test_full_rank_matches_vsm(self, mirrored_corpus):
        streams, tfidf, _ = weights_for(mirrored_corpus)
        vsm = vsm_similarity(tfidf, mirrored_corpus)
        lsi = lsi_similarity(tfidf, rank=10_000, corpus=mirrored_corpus)
        assert np.allclose(vsm.values, lsi.values, atol=1e-6)

    def test_identical_documents_score_one_at_low_rank(self):
        # overlapping vocabularies keep every latent row nonzero at rank 1
        texts = {
            "a": "alpha bravo charlie delta charlie",
            "b": "alpha bravo charlie echo bravo",
            "c": "bravo charlie delta echo delta",
        }
        corpus = make_corpus(
            {f"s_{k}": v for k, v in texts.items()},
            {f"t_{k}": v for k, v in texts.items()},
        )
        streams, tfidf, _ = weights_for(corpus)
        for rank in (1, 2, 3):
            lsi = lsi_similarity(tfidf, rank=rank, corpus=corpus)
            assert np.allclose(np.diag(lsi.values), 1.0, atol=1e-9)

    def test_against_jacobi_svd_oracle(self):
        # 3-doc toy matrix, rank 2: latent document coordinates from an
        # independently computed eigendecomposition of the Gram matrix
        corpus = make_corpus(
            {"s1": "alpha alpha bravo", "s2": "bravo charlie charlie",
             "s3": "alpha charlie delta"},
            {"t1": "alpha bravo bravo", "t2": "charlie delta delta",
             "t3": "alpha alpha delta"},
        )
        streams, tfidf, _ = weights_for(corpus)
        rank = 2
        lsi = lsi_similarity(tfidf, rank=rank, corpus=corpus)

        X = tfidf.weights
        evals, evecs = _jacobi_eigh(X @ X.T)
        order = np.argsort(evals)[::-1][:rank]
        docs = evecs[:, order] * np.sqrt(np.maximum(evals[order], 0.0))
        rows = {doc_id: i for i, doc_id in enumerate(tfidf.doc_ids)}
        src = docs[[rows[a.id] for a in corpus.sources]]
        tgt = docs[[rows[a.id] for a in corpus.targets]]
        dots = src @ tgt.T
        norms = np.outer(np.linalg.norm(src, axis=1), np.linalg.norm(tgt, axis=1))
        expected = np.clip(dots / norms, 0.0, 1.0)
        assert np.allclose(lsi.values, expected, atol=1e-6)


class TestJS:
    def test_identical_distributions_score_one(self, mirrored_corpus):
        streams, _, probs = weights_for(mirrored_corpus)
        sims = js_similarity(probs, mirrored_corpus)
        assert np.allclose(np.diag(sims.values), 1.0, atol=1e-9)

    def test_disjoint_support_scores_zero(self):
        corpus = make_corpus({"s": "alpha bravo"}, {"t": "charlie delta"})
        _, _, probs = weights_for(corpus)
        sims = js_similarity(probs, corpus)
        assert sims.values[0, 0] == pytest.approx(0.0, abs=1e-12)

    def test_hand_value(self):
        # p = (1/2, 1/2), q = (1, 0): the divergence works out to exactly
        # 0.75*log2(4/3) ~ 0.3113, so the similarity is ~0.6887
        from tracelink.ir.engines import _jsd_base2
        jsd = _jsd_base2(np.array([0.5, 0.5]), np.array([[1.0, 0.0]]))[0]
        assert jsd == pytest.approx(0.75 * math.log2(4 / 3), abs=1e-12)
        assert 1 - jsd == pytest.approx(0.6887, abs=5e-5)

    def test_unnormalized_row_rejected(self, mirrored_corpus):
        streams, _, probs = weights_for(mirrored_corpus)
        broken = probs
        broken.weights[0, 0] += 0.5
        with pytest.raises(ValueError, match="sum to 1"):
            js_similarity(broken, mirrored_corpus)


class TestLDA:
    def test_document_against_itself(self, mirrored_corpus):
        streams = tokenize_corpus(mirrored_corpus)
        sims = lda_similarity(streams, topics=2, seed=5, corpus=mirrored_corpus,
                              iterations=60)
        assert np.allclose(np.diag(sims.values), 1.0, atol=1e-9)

    def test_seeded_determinism(self, mirrored_corpus):
        streams = tokenize_corpus(mirrored_corpus)
        a = lda_similarity(streams, 3, 11, mirrored_corpus, iterations=40)
        b = lda_similarity(streams, 3, 11, mirrored_corpus, iterations=40)
        assert np.array_equal(a.values, b.values)

    def test_two_cluster_separation(self, rng):
        cluster_a = [f"w{i:02d}" for i in range(12)]
        cluster_b = [f"v{i:02d}" for i in range(12)]
        def doc(words, n=30):
            return tuple(words[k] for k in rng.integers(0, len(words), n))
        streams = []
        labels = {}
        for i in range(8):
            words = cluster_a if i % 2 == 0 else cluster_b
            sid = f"s{i}"
            labels[sid] = i % 2
            streams.append(TokenStream(sid, doc(words)))
        for j in range(8):
            words = cluster_a if j % 2 == 0 else cluster_b
            tid = f"t{j}"
            labels[tid] = j % 2
            streams.append(TokenStream(tid, doc(words)))
        corpus = Corpus(
            sources=[Artifact(s.artifact_id, "requirement", "", "x")
                     for s in streams[:8]],
            targets=[Artifact(s.artifact_id, "source_code", "", "x")
                     for s in streams[8:]],
            pair_kind="req_src")
        sims = lda_similarity(streams, topics=2, seed=3, corpus=corpus,
                              iterations=150)
        within, across = [], []
        for i, sid in enumerate(corpus.source_ids):
            for j, tid in enumerate(corpus.target_ids):
                (within if labels[sid] == labels[tid] else across).append(
                    sims.values[i, j])
        within = np.array(within)
        across = np.array(across)
        # at least 90% of cross-cluster pairs score below the within median
        threshold = np.median(within)
        assert (across < threshold).mean() >= 0.9

    def test_empty_vocabulary_rejected(self):
        with pytest.raises(ValueError, match="empty vocabulary"):
            lda_topic_distributions([TokenStream("d", ())], topics=2, seed=1)


class TestNMF:
    def test_objective_non_increasing(self, rng):
        X = rng.random((12, 30))
        _, _, objectives = nmf_factorize(X, rank=4, seed=9, iterations=80)
        diffs = np.diff(objectives)
        assert np.all(diffs <= 1e-9), f"objective increased by {diffs.max()}"

    def test_document_against_itself(self, mirrored_corpus):
        streams, tfidf, _ = weights_for(mirrored_corpus)
        sims = nmf_similarity(tfidf, rank=2, seed=4, corpus=mirrored_corpus,
                              iterations=150)
        assert np.allclose(np.diag(sims.values), 1.0, atol=1e-6)

    def test_rank_one_matrix_recovered(self, rng):
        u = rng.random(8) + 0.1
        v = rng.random(15) + 0.1
        X = np.outer(u, v)
        W, H, objectives = nmf_factorize(X, rank=1, seed=2, iterations=400)
        assert objectives[-1] < 1e-6

    def test_negative_input_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            nmf_factorize(np.array([[-1.0, 2.0]]), rank=1, seed=0)


class TestCombine:
    @staticmethod
    def matrix(values, technique="A"):
        values = np.asarray(values, dtype=float)
        return SimilarityMatrix(
            technique, values,
            tuple(f"s{i}" for i in range(values.shape[0])),
            tuple(f"t{j}" for j in range(values.shape[1])),
        )

    def test_weighted_mean_of_normalized_values(self):
        # normalized entries 0.2 and 0.6 at the same pair, lambda = 0.5 -> 0.4
        a = self.matrix([[0.0, 0.2, 1.0]])
        b = self.matrix([[0.0, 0.6, 1.0]], "B")
        out = combine(a, b, 0.5)
        assert out.values[0, 1] == pytest.approx(0.4)
        assert out.technique == "A+B"

    def test_lambda_one_returns_normalized_first(self):
        a = self.matrix([[0.2, 0.4, 0.6]])
        b = self.matrix([[0.9, 0.1, 0.5]], "B")
        out = combine(a, b, 1.0)
        assert np.allclose(out.values, [[0.0, 0.5, 1.0]])

    def test_hand_computed_two_by_two(self):
        a = self.matrix([[0.1, 0.3], [0.5, 0.9]])
        b = self.matrix([[0.2, 0.2], [0.6, 1.0]], "B")
        out = combine(a, b, 0.5)
        a_norm = (a.values - 0.1) / 0.8
        b_norm = (b.values - 0.2) / 0.8
        assert np.allclose(out.values, 0.5 * a_norm + 0.5 * b_norm)

    def test_degenerate_input_becomes_half(self):
        a = self.matrix([[0.3, 0.3], [0.3, 0.3]])
        b = self.matrix([[0.1, 0.2], [0.3, 0.4]], "B")
        with pytest.warns(UserWarning, match="degenerate"):
            out = combine(a, b, 0.5)
        b_norm = (b.values - 0.1) / 0.3
        assert np.allclose(out.values, 0.5 * 0.5 + 0.5 * b_norm)

    def test_dimension_mismatch(self):
        a = self.matrix([[0.1, 0.2]])
        b = self.matrix([[0.1], [0.2]], "B")
        with pytest.raises(ValueError, match="same pairs"):
            combine(a, b, 0.5)


@pytest.fixture(scope="module")
def everything():
    texts_s = {
        "s1": "certificate enrollment handshake negotiation trust anchor",
        "s2": "archive rotation compression schedule storage cleanup",
        "s3": "parser grammar validation token syntax tree",
        "s4": "network retry backoff transfer timeout socket",
    }
    texts_t = {
        "t1": "int enrollCertificate() { handshake negotiation anchor trust }",
        "t2": "void rotateArchive() { compression schedule cleanup storage }",
        "t3": "bool parseGrammar() { token validation syntax tree }",
        "t4": "int transferRetry() { backoff timeout socket network }",
        "t5": "float unrelatedMath() { matrix vector tensor scalar }",
    }
    corpus = make_corpus(texts_s, texts_t)
    streams, tfidf, probs = weights_for(corpus)
    config = TechniqueConfig(lda_topics=3, lda_iterations=60,
                             nmf_iterations=80, seed=13)
    matrices = compute_all(corpus, streams, tfidf, probs, config)
    return corpus, streams, tfidf, probs, config, matrices


class TestComputeAll:
    def test_exactly_ten_matrices_with_canonical_tags(self, everything):
        *_, matrices = everything
        assert tuple(matrices) == TECHNIQUES

    def test_all_entries_in_unit_interval(self, everything):
        *_, matrices = everything
        for m in matrices.values():
            assert np.all(m.values >= 0) and np.all(m.values <= 1)
            assert np.all(np.isfinite(m.values))

    def test_combined_equals_pairwise_combine_bit_for_bit(self, everything):
        *_, matrices = everything
        recombined = combine(matrices["VSM"], matrices["LDA"], 0.5)
        assert np.array_equal(matrices["VSM+LDA"].values, recombined.values)

    def test_seeded_determinism(self, everything):
        corpus, streams, tfidf, probs, config, matrices = everything
        again = compute_all(corpus, streams, tfidf, probs, config)
        for tag in TECHNIQUES:
            assert np.array_equal(matrices[tag].values, again[tag].values)

    def test_serialization_format(self, everything):
        *_, matrices = everything
        text = serialize_matrices(matrices)
        lines = text.strip().split("\n")
        header = lines[0].split("\t")
        assert header[:2] == ["source_id", "target_id"]
        assert tuple(header[2:]) == TECHNIQUES
        assert len(lines) == 1 + 4 * 5
        cell = lines[1].split("\t")[2]
        assert len(cell.split(".")[1]) == 6
