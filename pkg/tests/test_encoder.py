import numpy as np
import pytest

from canids.encoder import (EncoderConfig, EncoderModel, GraphEmbedding, embed,
                            read_embeddings_csv, train_encoder, write_embeddings_csv)
from canids.frames import Label
from canids.graph import ByteMode, WindowGraph, build_graph

from conftest import make_frame, normal_frames, windows_from
from gradcheck import assert_gradients_match


def random_graph(w=6, seed=0, label=0, index=0):
    rng = np.random.default_rng(seed)
    feats = rng.integers(0, 2, size=(w, 9)).astype(float)
    feats[:, 0] = rng.integers(0, 9, size=w) / 8.0
    return WindowGraph(node_features=feats, edges=[(i, i + 1) for i in range(w - 1)],
                       label=label, window_index=index)


class TestForward:
    def test_shapes(self):
        (window,) = windows_from(normal_frames(50), 50)
        g = build_graph(window)
        node_emb, recon = EncoderModel(seed=0).forward(g)
        assert node_emb.shape == (50, 32)
        assert recon.shape == (50, 9)

    def test_zero_features_zero_bias_zero_reconstruction(self):
        model = EncoderModel(seed=0)
        for name, p in model.params.items():
            if name.endswith("_b"):
                p.data[...] = 0.0
        g = random_graph()
        g.node_features[...] = 0.0
        node_emb, recon = model.forward(g)
        assert np.all(node_emb.data == 0.0)
        assert np.all(recon.data == 0.0)

    def test_wrong_feature_width(self):
        g = random_graph()
        g.node_features = np.zeros((6, 5))
        with pytest.raises(ValueError, match="9"):
            EncoderModel(seed=0).forward(g)

    def test_overcomplete_structure(self):
        model = EncoderModel(seed=0)
        assert model.params["enc1_w"].data.shape == (9, 16)   # latent 16 > input 9
        assert model.params["gcn3_w"].data.shape == (32, 32)
        assert model.params["dec2_w"].data.shape == (16, 9)

    @pytest.mark.parametrize("seed", range(3))
    def test_reconstruction_gradients(self, seed):
        import canids.nn as nn
        model = EncoderModel(seed=seed)
        g = random_graph(w=4, seed=seed)
        rng = np.random.default_rng(seed)
        assert_gradients_match(
            lambda: nn.mse_loss(model.forward(g)[1], nn.Tensor(g.node_features)),
            model.parameters(), rtol=1e-4, max_coords=6, rng=rng)


class TestTraining:
    def test_overfits_identical_graphs(self):
        graphs = [random_graph(w=6, seed=1, index=i) for i in range(20)]
        model, log = train_encoder(graphs, EncoderConfig(epochs=200, lr=1e-2, patience=200, seed=0))
        assert log["history"][-1]["train_loss"] < 1e-3

    def test_best_epoch_not_worse_than_first(self):
        graphs = [random_graph(w=6, seed=i, index=i) for i in range(10)]
        model, log = train_encoder(graphs, EncoderConfig(epochs=20, seed=0))
        hist = log["history"]
        assert all(np.isfinite(h["train_loss"]) for h in hist)
        best = hist[log["best_epoch"]]["val_loss"]
        assert best <= hist[0]["val_loss"]

    def test_determinism(self, tmp_path):
        graphs = [random_graph(w=5, seed=i, index=i) for i in range(8)]
        m1, _ = train_encoder(graphs, EncoderConfig(epochs=5, seed=3))
        m2, _ = train_encoder(graphs, EncoderConfig(epochs=5, seed=3))
        m1.save(tmp_path / "a.ckpt")
        m2.save(tmp_path / "b.ckpt")
        assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()

    def test_rejects_attack_graphs(self):
        graphs = [random_graph(index=0), random_graph(label=1, index=1)]
        with pytest.raises(ValueError, match="normal-only"):
            train_encoder(graphs)


class TestEmbed:
    def test_uniform_node_embeddings_pool_to_themselves(self):
        model = EncoderModel(seed=0)
        g = random_graph(w=2)
        g.node_features[1] = g.node_features[0]  # identical rows on a 2-path
        node_emb, _ = model.forward(g)
        e = embed(model, g)
        assert np.allclose(node_emb.data[0], node_emb.data[1])
        assert e.vector == pytest.approx(node_emb.data[0])

    @pytest.mark.parametrize("w", [50, 75, 100, 125, 150])
    def test_embedding_length_32(self, w):
        (window,) = windows_from(normal_frames(w), w)
        e = embed(EncoderModel(seed=0), build_graph(window))
        assert e.vector.shape == (32,)
        assert np.all(np.isfinite(e.vector))

    def test_order_sensitivity(self):
        # full reversal is a path automorphism, so it cannot change the pooled
        # embedding; any other frame permutation does
        model = EncoderModel(seed=0)
        g = random_graph(w=10, seed=5)
        rev = WindowGraph(node_features=g.node_features[::-1].copy(),
                          edges=g.edges, label=0, window_index=0)
        assert np.allclose(embed(model, g).vector, embed(model, rev).vector)
        rolled = WindowGraph(node_features=np.roll(g.node_features, 3, axis=0),
                             edges=g.edges, label=0, window_index=0)
        assert not np.allclose(embed(model, g).vector, embed(model, rolled).vector)

    def test_label_and_index_carried(self):
        g = random_graph(label=1, index=17)
        e = embed(EncoderModel(seed=0), g)
        assert (e.window_index, e.label) == (17, 1)


def test_embeddings_csv_round_trip(tmp_path):
    model = EncoderModel(seed=0)
    embs = [embed(model, random_graph(w=5, seed=i, index=i)) for i in range(4)]
    path = tmp_path / "emb.csv"
    write_embeddings_csv(embs, path)
    loaded = read_embeddings_csv(path)
    for a, b in zip(embs, loaded):
        assert (a.window_index, a.label) == (b.window_index, b.label)
        assert np.array_equal(a.vector, b.vector)  # repr round-trips exactly
