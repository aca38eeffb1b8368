import math

import numpy as np
import pytest

import hod


def test_distance_properties():
    x = np.array([0.3, -0.2])
    y = np.array([-0.1, 0.4])
    d = hod.distance(x, y, 1.0)
    assert d > 0
    assert math.isclose(d, hod.distance(y, x, 1.0), rel_tol=1e-12)
    assert hod.distance(x, x, 1.0) <= 1e-6


def test_lift_lands_on_the_sheet():
    z = hod.lift(np.array([0.5, 1.5, -2.0]), 0.7)
    assert z.shape == (4,)
    assert z[0] > 0
    assert hod.manifold_violation(z, 0.7) < 1e-9


def test_contrastive_loss_needs_positives():
    spaces = np.array([[0.1, 0.0], [0.2, 0.1], [0.0, -0.1]])
    value = hod.hsup_loss(spaces, [0, 0, 0], 0.1, 1.0)
    assert math.isfinite(value)
    with pytest.raises(hod.InvalidBatchError):
        hod.hsup_loss(spaces, [0, 1, 2], 0.1, 1.0)


def test_metrics_match_known_values():
    assert hod.auroc([2.0, 3.0], [0.0, 1.0]) == 1.0
    assert hod.auroc([1.0, 3.0], [2.0, 4.0]) == 0.25
    id_scores = [float(v) for v in range(1, 21)]
    assert hod.fpr_at_tpr(id_scores, [0.0, 1.5, 3.0, 5.0], 0.95) == 0.5

    t, df, p, degenerate = hod.welch_t_test([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
    assert math.isclose(t, -3.674234614174767, rel_tol=1e-12)
    assert df == pytest.approx(4.0)
    assert math.isclose(p, 0.021311641128756726, rel_tol=1e-9)
    assert not degenerate

    assert hod.regularized_incomplete_beta(4.0, 7.0, 0.5) == pytest.approx(53 / 64, rel=1e-12)


def test_config_errors_surface():
    with pytest.raises(hod.ConfigError):
        hod.gen_synthetic(["within_std=-1"])


def test_train_embed_score_roundtrip(tmp_path):
    data = hod.gen_synthetic(
        ["n_classes=3", "dim=8", "per_class=20", "ood_count=30", "within_std=0.5"]
    )
    feats, labels = data["train_id"]
    model = hod.train(
        feats,
        labels,
        [
            "iterations=60",
            "warmup_iters=10",
            "batch_size=16",
            "embed_dim=6",
            "hidden_dim=12",
            "alpha=0",
        ],
    )

    emb = model.embed(feats)
    assert emb.shape == (feats.shape[0], 7)
    assert model.curvature > 0
    violations = [hod.manifold_violation(row, model.curvature) for row in emb]
    assert max(violations) < 1e-9

    id_scores = hod.knn_scores(model, feats, labels, data["test_id"][0], 5)
    ood_scores = hod.knn_scores(model, feats, labels, data["test_ood"][0], 5)
    assert hod.auroc(id_scores, ood_scores) > 0.9

    path = str(tmp_path / "model.hodp")
    model.save(path)
    back = hod.Model.load(path)
    assert np.array_equal(emb, back.embed(feats))
