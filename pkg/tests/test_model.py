"""Losses, ridge projection, model pieces, two-stage training, checkpoints."""

import math

import numpy as np
import pytest

from caster.corpus import PairCorpus, PairExample
from caster.model import (
    CasterModel,
    CheckpointError,
    LossWeights,
    ModelConfig,
    TrainingConfig,
    classification_loss,
    explain_pair,
    load_checkpoint,
    pretrain_arrays,
    projection_loss,
    reconstruction_loss,
    ridge_coefficients,
    save_checkpoint,
    split_indices,
    train,
    train_arrays,
)
from caster.nn import gradient_check
from caster.spm import MergeRule, Vocabulary


@pytest.fixture
def rng():
    return np.random.default_rng(4242)


def tiny_model(k=10, d=3, seed=0, weights=None, **cfg_kwargs):
    defaults = dict(
        latent_dim=d, encoder_hidden=(8,), decoder_hidden=(8,), predictor_hidden=(8, 6)
    )
    defaults.update(cfg_kwargs)
    return CasterModel(k, ModelConfig(**defaults), weights or LossWeights(), seed=seed)


class TestLosses:
    def test_reconstruction_uniform_predictor(self):
        x = np.zeros(10)
        xhat = np.full(10, 0.5)
        assert reconstruction_loss(x, xhat) == pytest.approx(10 * math.log(2), rel=1e-12)

    def test_reconstruction_perfect_limit(self):
        x = np.array([1.0, 0.0, 1.0])
        xhat = np.array([1 - 1e-9, 1e-9, 1 - 1e-9])
        assert reconstruction_loss(x, xhat) < 1e-7

    def test_reconstruction_vs_scalar_oracle(self, rng):
        x = (rng.random((4, 6)) < 0.5).astype(float)
        xhat = rng.uniform(0.01, 0.99, (4, 6))
        oracle = 0.0
        for t in range(4):
            for i in range(6):
                oracle += -(x[t, i] * math.log(xhat[t, i]) + (1 - x[t, i]) * math.log(1 - xhat[t, i]))
        oracle /= 4
        assert reconstruction_loss(x, xhat) == pytest.approx(oracle, abs=1e-12)

    def test_reconstruction_clamps_boundary(self):
        x = np.array([1.0, 0.0])
        xhat = np.array([0.0, 1.0])  # worst case, exact boundary
        loss = reconstruction_loss(x, xhat)
        assert np.isfinite(loss) and loss > 0

    def test_classification_values(self, rng):
        assert classification_loss(np.array([0.5]), np.array([1.0])) == pytest.approx(math.log(2))
        p = rng.uniform(0.05, 0.95, 12)
        y = rng.integers(0, 2, 12).astype(float)
        oracle = float(np.mean([-(yi * math.log(pi) + (1 - yi) * math.log(1 - pi)) for pi, yi in zip(p, y)]))
        assert classification_loss(p, y) == pytest.approx(oracle, abs=1e-12)

    def test_projection_zero_basis(self, rng):
        z = rng.normal(size=5)
        r = rng.normal(size=7)
        B = np.zeros((5, 7))
        expected = 0.5 * float(z @ z) + 0.05 * float(r @ r)
        assert projection_loss(z, B, r, lambda1=0.1, lambda2=0.3) == pytest.approx(expected)

    def test_projection_frobenius_term(self):
        B = np.array([[1.0, 2.0], [3.0, 4.0]])
        z = np.zeros(2)
        r = np.zeros(2)
        assert projection_loss(z, B, r, 0.0, 0.7) == pytest.approx(0.7 * 30.0)

    def test_projection_at_ridge_solution_identity(self, rng):
        # B = I, r* = z/(1+lam): first two terms collapse to lam/(2(1+lam)) ||z||^2
        z = rng.normal(size=6)
        B = np.eye(6)
        for lam in (0.1, 1.0, 3.0):
            r = ridge_coefficients(z, B, lam)
            value = projection_loss(z, B, r, lam, 0.0)
            assert value == pytest.approx(0.5 * lam / (1 + lam) * float(z @ z), rel=1e-10)

    def test_losses_nonnegative(self, rng):
        for _ in range(10):
            x = (rng.random(5) < 0.5).astype(float)
            xhat = rng.uniform(1e-6, 1 - 1e-6, 5)
            assert reconstruction_loss(x, xhat) >= 0.0
            p = rng.uniform(1e-6, 1 - 1e-6, 5)
            y = rng.integers(0, 2, 5).astype(float)
            assert classification_loss(p, y) >= 0.0


class TestRidge:
    def test_identity_basis_no_penalty(self, rng):
        z = rng.normal(size=4)
        assert np.allclose(ridge_coefficients(z, np.eye(4), 0.0), z)

    def test_identity_basis_shrinkage(self, rng):
        z = rng.normal(size=4)
        for lam in (0.1, 1.0):
            np.testing.assert_allclose(ridge_coefficients(z, np.eye(4), lam), z / (1 + lam), rtol=1e-12)

    def test_matches_gradient_descent_oracle(self, rng):
        # plain GD from zero stays in the row space and converges on it
        d, k, lam = 4, 9, 1e-5
        for _ in range(5):
            B = rng.normal(size=(d, k))
            z = rng.normal(size=d)
            r = ridge_coefficients(z, B, lam)
            step = 1.0 / (np.linalg.norm(B, 2) ** 2 + lam)
            r_gd = np.zeros(k)
            for _ in range(4000):
                r_gd -= step * (B.T @ (B @ r_gd - z) + lam * r_gd)
            assert np.max(np.abs(r - r_gd)) < 1e-6

    def test_routes_agree(self, rng):
        for _ in range(50):
            d = int(rng.integers(2, 9))
            k = int(rng.integers(d + 2, 3 * d + 7))
            B = 0.15 * rng.normal(size=(d, k))
            z = 0.15 * rng.normal(size=(3, d))
            lam = 10.0 ** rng.uniform(-8, 0)
            r_dual = ridge_coefficients(z, B, lam, route="dual")
            r_primal = ridge_coefficients(z, B, lam, route="primal")
            assert np.max(np.abs(r_dual - r_primal)) < 1e-8

    def test_stationarity_residual(self, rng):
        for _ in range(20):
            d, k = 5, 12
            B = rng.normal(size=(d, k))
            z = rng.normal(size=d)
            lam = 10.0 ** rng.uniform(-6, 0)
            r = ridge_coefficients(z, B, lam)
            lhs = (B.T @ B + lam * np.eye(k)) @ r
            rhs = B.T @ z
            assert np.linalg.norm(lhs - rhs) <= 1e-8 * max(1.0, np.linalg.norm(rhs))

    def test_singular_system_advises_positive_lambda(self, rng):
        B = np.zeros((3, 5))
        B[0, 0] = 1.0  # rank 1, not full column rank
        with pytest.raises(ValueError, match="lambda1"):
            ridge_coefficients(rng.normal(size=3), B, 0.0)

    def test_minimizes_objective(self, rng):
        d, k, lam = 3, 7, 0.05
        B = rng.normal(size=(d, k))
        z = rng.normal(size=d)
        r_star = ridge_coefficients(z, B, lam)
        best = projection_loss(z, B, r_star, lam, 0.0)
        for _ in range(30):
            perturbed = r_star + rng.normal(size=k) * 0.01
            assert projection_loss(z, B, perturbed, lam, 0.0) >= best - 1e-12


class TestModelPieces:
    def test_single_layer_encoder_columns(self, rng):
        m = tiny_model(k=6, d=3, encoder_hidden=())
        W = m.encoder.layers[0].W
        m.encoder.layers[0].b[...] = 0.0
        B = m.dictionary_basis()
        np.testing.assert_allclose(B, W)
        e1 = np.zeros(6)
        e1[0] = 1.0
        np.testing.assert_allclose(m.encode(e1), W[:, 0])

    def test_zero_input_gives_bias(self, rng):
        m = tiny_model(k=6, d=3, encoder_hidden=())
        m.encoder.layers[0].b[...] = rng.normal(size=3)
        np.testing.assert_allclose(m.encode(np.zeros(6)), m.encoder.layers[0].b)

    def test_zero_weight_encoder_basis(self):
        m = tiny_model(k=6, d=3, encoder_hidden=())
        m.encoder.layers[0].W[...] = 0.0
        m.encoder.layers[0].b[...] = [1.0, 2.0, 3.0]
        B = m.dictionary_basis()
        for i in range(6):
            np.testing.assert_allclose(B[:, i], [1.0, 2.0, 3.0])

    def test_deep_basis_matches_per_column_encode(self, rng):
        m = tiny_model(k=5, d=2, encoder_hidden=(7, 7))
        B = m.dictionary_basis()
        for i in range(5):
            u = np.zeros(5)
            u[i] = 1.0
            # batched and single-row GEMMs may round differently; the values
            # agree to full double precision
            np.testing.assert_allclose(B[:, i], m.encode(u), rtol=1e-12, atol=1e-15)

    def test_basis_consistency_after_update(self, rng):
        m = tiny_model(k=8, d=3)
        X = (rng.random((6, 8)) < 0.5).astype(float)
        y = rng.integers(0, 2, 6).astype(float)
        from caster.nn import Adam

        adam = Adam(m.parameters(), lr=1e-3)
        for _ in range(3):
            _, _, grads = m.step(X, y, training=True)
            adam.step(grads)
        B = m.dictionary_basis()
        for i in range(8):
            u = np.zeros(8)
            u[i] = 1.0
            np.testing.assert_allclose(B[:, i], m.encode(u), rtol=1e-12, atol=1e-15)

    def test_encode_deterministic(self, rng):
        m = tiny_model()
        x = (rng.random(10) < 0.5).astype(float)
        a = m.encode(x)
        b = m.encode(x)
        np.testing.assert_array_equal(a, b)
        assert np.all(np.isfinite(a))

    def test_decode_range_and_midpoint(self, rng):
        m = tiny_model()
        for layer in m.decoder.layers:
            layer.W[...] = 0.0
            layer.b[...] = 0.0
        np.testing.assert_allclose(m.decode(rng.normal(size=3)), 0.5)
        m.decoder.layers[-1].b[...] = 40.0
        out = m.decode(rng.normal(size=3))
        assert np.all(out >= 1 - 1e-12) and np.all(out < 1)

    def test_zero_predictor_gives_half(self, rng):
        m = tiny_model()
        for layer in m.predictor.layers:
            layer.W[...] = 0.0
            layer.b[...] = 0.0
        assert m.predict_probability(rng.normal(size=10)) == pytest.approx(0.5)

    def test_magnifier_first_layer_scaling_invariance(self, rng):
        # doubling the magnifier while halving first-layer weights keeps the
        # first pre-activation unchanged
        m = tiny_model(seed=3)
        r = rng.normal(size=(4, 10))
        pre_a = (m.config.magnifier * r) @ m.predictor.layers[0].W.T
        m2 = tiny_model(seed=3, magnifier=2 * m.config.magnifier)
        m2.predictor.layers[0].W[...] = 0.5 * m.predictor.layers[0].W
        pre_b = (m2.config.magnifier * r) @ m2.predictor.layers[0].W.T
        np.testing.assert_allclose(pre_a, pre_b, rtol=1e-12)

    def test_default_architecture_builds(self):
        m = CasterModel(100, ModelConfig(), LossWeights(), seed=0)
        assert [l.out_dim for l in m.encoder.layers] == [500, 500, 50]
        assert [l.out_dim for l in m.decoder.layers] == [500, 500, 100]
        assert [l.out_dim for l in m.predictor.layers] == [1024, 1024, 1024, 256, 64, 1]
        p = m.predict_probability(np.zeros(100))
        assert 0.0 < p < 1.0

    def test_latent_dim_must_be_below_k(self):
        with pytest.raises(ValueError, match="latent_dim"):
            CasterModel(10, ModelConfig(latent_dim=10), LossWeights())


class TestStepGradient:
    def test_full_loss_gradient_small(self, rng):
        m = tiny_model(k=8, d=3, seed=11)
        X = (rng.random((5, 8)) < 0.4).astype(float)
        y = rng.integers(0, 2, 5).astype(float)
        for _ in range(2):
            m.step(X, y, training=True)
        # nudge every parameter off exact zeros so no ReLU sits on its kink
        for arr in m.parameters().values():
            arr += 0.02 * rng.normal(size=arr.shape)

        def loss_fn():
            loss, _, grads = m.step(X, y, training=False)
            return loss, grads

        report = gradient_check(loss_fn, m.parameters(), tolerance=1e-4, step=1e-5,
                                max_entries_per_param=20, rng=rng)
        assert report.passed, f"{report.max_rel_error} at {report.worst_param}"

    def test_refinement_gradient(self, rng):
        m = tiny_model(k=8, d=3, seed=5, projection_refine_steps=2, projection_refine_lr=0.05)
        X = (rng.random((5, 8)) < 0.4).astype(float)
        y = rng.integers(0, 2, 5).astype(float)
        m.step(X, y, training=True)
        for arr in m.parameters().values():
            arr += 0.02 * rng.normal(size=arr.shape)

        def loss_fn():
            loss, _, grads = m.step(X, y, training=False)
            return loss, grads

        report = gradient_check(loss_fn, m.parameters(), tolerance=1e-4, step=1e-5,
                                max_entries_per_param=15, rng=rng)
        assert report.passed, f"{report.max_rel_error} at {report.worst_param}"


def _toy_supervised(rng, n=240, k=12):
    """Separable toy problem: label = bit 0 of the functional vector."""
    X = (rng.random((n, k)) < 0.35).astype(float)
    y = X[:, 0].copy()
    # ensure both classes in any contiguous split
    if y[:24].min() == y[:24].max():
        y[0] = 1 - y[0]
        X[0, 0] = y[0]
    return X, y


class TestTraining:
    def test_pretrain_reduces_reconstruction(self, rng):
        m = tiny_model(k=12, d=4)
        X = (rng.random((600, 12)) < 0.35).astype(float)
        config = TrainingConfig(batch_size=32, pretrain_epochs=2, seed=1)
        history = pretrain_arrays(m, X, config)
        first_batch = history[0]["recon"]
        last_epoch = [h["recon"] for h in history if h["epoch"] == 1]
        assert np.mean(last_epoch) < first_batch

    def test_pretrain_noop_when_weights_zero(self, rng):
        weights = LossWeights(alpha=0.0, beta=0.0, gamma=1.0)
        m = tiny_model(k=12, d=4, weights=weights)
        before = m.snapshot()
        X = (rng.random((64, 12)) < 0.35).astype(float)
        pretrain_arrays(m, X, TrainingConfig(batch_size=16, pretrain_epochs=1, seed=0))
        after = m.state_arrays()
        for name, value in before.items():
            np.testing.assert_array_equal(value, after[name])

    def test_pretrain_deterministic(self, rng):
        X = (rng.random((128, 12)) < 0.35).astype(float)
        snaps = []
        for _ in range(2):
            m = tiny_model(k=12, d=4, seed=9)
            pretrain_arrays(m, X, TrainingConfig(batch_size=32, pretrain_epochs=2, seed=9))
            snaps.append(m.snapshot())
        for name in snaps[0]:
            np.testing.assert_array_equal(snaps[0][name], snaps[1][name])

    def test_train_learns_separable_toy(self, rng):
        X, y = _toy_supervised(rng)
        m = tiny_model(k=12, d=4, predictor_hidden=(16, 8))
        config = TrainingConfig(batch_size=16, lr=3e-3, max_epochs=25, patience=8, seed=2)
        result = train_arrays(m, X, y, config)
        assert result.test_metrics["roc_auc"] >= 0.9
        assert len(result.history) <= 25

    def test_train_deterministic_history(self, rng):
        X, y = _toy_supervised(rng)
        histories = []
        for _ in range(2):
            m = tiny_model(k=12, d=4, seed=4)
            result = train_arrays(m, X, y, TrainingConfig(batch_size=32, max_epochs=4, patience=5, seed=4))
            histories.append(result.history)
        assert histories[0] == histories[1]

    def test_patience_zero_stops_after_first_plateau(self, rng):
        X, y = _toy_supervised(rng)
        m = tiny_model(k=12, d=4, seed=1)
        result = train_arrays(m, X, y, TrainingConfig(batch_size=32, max_epochs=30, patience=0, seed=1))
        if len(result.history) < 30:  # early stop happened
            # exactly one epoch ran after the last improvement
            assert len(result.history) == result.best_epoch + 2

    def test_missing_class_in_split_rejected(self, rng):
        X = (rng.random((60, 12)) < 0.35).astype(float)
        y = np.ones(60)
        m = tiny_model(k=12, d=4)
        with pytest.raises(Exception, match="both classes"):
            train_arrays(m, X, y, TrainingConfig(batch_size=16, seed=0))

    def test_gamma_zero_gives_chance_level(self, rng):
        # no supervised signal: mean test AUC over seeds stays near chance
        X, y = _toy_supervised(rng, n=300)
        aucs = []
        for seed in range(3):
            m = tiny_model(k=12, d=4, weights=LossWeights(gamma=0.0), seed=seed)
            result = train_arrays(
                m, X, y, TrainingConfig(batch_size=32, max_epochs=5, patience=10, seed=seed)
            )
            aucs.append(result.test_metrics["roc_auc"])
        assert abs(float(np.mean(aucs)) - 0.5) <= 0.1


class TestSplits:
    def test_ratio_split_sizes(self):
        tr, va, te = split_indices(1000, TrainingConfig(seed=0))
        assert (len(tr), len(va), len(te)) == (700, 100, 200)
        assert sorted(np.concatenate([tr, va, te])) == list(range(1000))

    def test_fold_mode_partitions(self):
        folds = []
        for i in range(5):
            config = TrainingConfig(seed=3, split_mode="folds:5", fold_index=i)
            tr, va, te = split_indices(500, config)
            folds.append(np.concatenate([tr, va, te]))
        all_idx = np.concatenate(folds)
        assert len(all_idx) == 500 and len(set(all_idx.tolist())) == 500

    def test_invalid_configs(self):
        with pytest.raises(ValueError):
            TrainingConfig(batch_size=1)
        with pytest.raises(ValueError):
            TrainingConfig(split_ratio=(0.5, 0.2, 0.2))
        with pytest.raises(ValueError):
            TrainingConfig(split_mode="folds:1")
        with pytest.raises(ValueError):
            LossWeights(lambda1=0.0)
        with pytest.raises(ValueError):
            LossWeights(alpha=-0.1)


@pytest.fixture
def small_vocab():
    return Vocabulary(
        frozenset("CON"),
        [MergeRule("C", "C", "CC", 0, 9)],
        [("CC", 9), ("O", 5), ("N", 4), ("S", 2)],
        eta=1,
        ell=10,
    )


class TestExplain:
    def test_empty_for_disjoint_pair(self, small_vocab, caplog):
        m = tiny_model(k=4, d=2)
        with caplog.at_level("WARNING"):
            table = explain_pair(m, "CC", "OO", small_vocab)
        assert table == []
        assert any("nothing to explain" in rec.message for rec in caplog.records)

    def test_only_present_substructures_ranked_by_magnitude(self, small_vocab):
        m = tiny_model(k=4, d=2, seed=8)
        table = explain_pair(m, "CCO", "OCC", small_vocab)
        names = [t for t, _ in table]
        assert set(names) == {"CC", "O"}
        mags = [abs(c) for _, c in table]
        assert mags == sorted(mags, reverse=True)

    def test_coefficients_are_magnified(self, small_vocab):
        m = tiny_model(k=4, d=2, seed=8)
        from caster.featurize import functional_representation

        x = functional_representation("CCO", "OCC", small_vocab)
        r = m.project(m.encode(x))
        table = dict(explain_pair(m, "CCO", "OCC", small_vocab))
        idx = {tok: i for i, (tok, _) in enumerate(small_vocab.substructures)}
        for tok, coef in table.items():
            assert coef == pytest.approx(100.0 * r[idx[tok]])


class TestCheckpoint:
    def test_roundtrip_preserves_predictions(self, tmp_path, rng):
        m = tiny_model(k=10, d=3, seed=21)
        m.vocab_hash = "abc123"
        X = (rng.random((20, 10)) < 0.4).astype(float)
        y = rng.integers(0, 2, 20).astype(float)
        from caster.nn import Adam

        adam = Adam(m.parameters(), lr=1e-3)
        for _ in range(4):
            _, _, grads = m.step(X, y, training=True)
            adam.step(grads)
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, m)
        loaded = load_checkpoint(path, expected_vocab_hash="abc123")
        np.testing.assert_allclose(loaded.predict_pairs(X), m.predict_pairs(X), atol=1e-6)
        # text round-trip is in fact exact
        np.testing.assert_array_equal(loaded.predict_pairs(X), m.predict_pairs(X))

    def test_vocab_hash_mismatch_refused(self, tmp_path):
        m = tiny_model()
        m.vocab_hash = "originalhash"
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, m)
        with pytest.raises(CheckpointError, match="vocabulary"):
            load_checkpoint(path, expected_vocab_hash="differenthash")

    def test_malformed_checkpoint_rejected(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_text("not a checkpoint\n")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_loss_weights_and_config_roundtrip(self, tmp_path):
        weights = LossWeights(alpha=0.2, beta=0.3, gamma=0.9, lambda1=1e-4, lambda2=0.05)
        m = tiny_model(weights=weights, magnifier=50.0, projection_refine_steps=2)
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, m)
        loaded = load_checkpoint(path)
        assert loaded.weights == weights
        assert loaded.config.magnifier == 50.0
        assert loaded.config.projection_refine_steps == 2


class TestTrainOnCorpus:
    def test_train_from_pair_corpus(self, small_vocab, rng):
        # build a corpus whose label depends on sharing "CC"
        examples = []
        strings_with = ["CCO", "CCN", "OCC", "NCC", "CCS", "SCC", "CCOO", "OOCC"]
        strings_without = ["ON", "NO", "SO", "OS", "OON", "NOO", "SON", "NOS"]
        n = 0
        for i, a in enumerate(strings_with):
            for b in strings_with[i + 1 :]:
                examples.append(PairExample(a, b, 1))
        for i, a in enumerate(strings_without):
            for b in strings_without[i + 1 :]:
                examples.append(PairExample(a, b, 0))
        corpus = PairCorpus(examples, "labelled")
        m = tiny_model(k=4, d=2, predictor_hidden=(8,))
        config = TrainingConfig(batch_size=8, max_epochs=10, patience=3, seed=0)
        result = train(m, corpus, small_vocab, config)
        assert result.test_metrics["roc_auc"] >= 0.9


class TestPretrainOnCorpus:
    def test_pretrain_from_pair_corpus(self, small_vocab):
        from caster.corpus import PairCorpus, PairExample
        from caster.model import pretrain

        pairs = PairCorpus(
            [PairExample("CCO", "CCN"), PairExample("OCC", "NCC"), PairExample("CCS", "SCC"),
             PairExample("ON", "NO"), PairExample("CCOO", "OOCC"), PairExample("SON", "NOS")],
            "unlabelled",
        )
        m = tiny_model(k=4, d=2)
        history = pretrain(m, pairs, small_vocab, TrainingConfig(batch_size=3, pretrain_epochs=2, seed=0))
        assert len(history) == 4  # two epochs of two batches
        assert all(np.isfinite(row["loss"]) for row in history)

    def test_pretrain_rejects_empty_corpus(self, small_vocab):
        from caster.corpus import PairCorpus
        from caster.model import TrainingError, pretrain

        m = tiny_model(k=4, d=2)
        with pytest.raises(TrainingError, match="empty"):
            pretrain(m, PairCorpus([], "unlabelled"), small_vocab, TrainingConfig(seed=0))


class TestSinglePrecisionFlag:
    def test_float32_model_trains_and_predicts(self, rng):
        m = tiny_model(k=10, d=3, dtype="float32", seed=2)
        assert m.encoder.layers[0].W.dtype == np.float32
        X = (rng.random((32, 10)) < 0.4).astype(np.float64)
        y = rng.integers(0, 2, 32).astype(np.float64)
        result = train_arrays(m, X, y, TrainingConfig(batch_size=8, max_epochs=2, patience=2, seed=0))
        assert np.isfinite(result.test_metrics["roc_auc"])
        assert m.encode(X[:4]).dtype == np.float32
        p = m.predict_pairs(X[:4])
        assert np.all((p > 0) & (p < 1))
