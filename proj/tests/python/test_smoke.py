# Copyright 2026 The fsc Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math

import numpy as np
import pytest

import fsc


def test_bank_shapes_and_bound():
    bank = fsc.make_bank(5, 3, 8, sigma2=1e-3, seed=1)
    assert bank.frozen
    assert bank.weights.shape == (15, 8)
    assert bank.centers.shape == (5, 8)
    assert len(bank.content_hash()) == 16
    assert math.isclose(fsc.kaiming_uniform_bound(512), 0.108253175473055, rel_tol=1e-14)
    mu = fsc.init_centers(4, 6, seed=3)
    assert np.all(np.abs(mu) < 1.0)
    np.testing.assert_array_equal(mu, fsc.init_centers(4, 6, seed=3))


def test_forward_normalization_and_loss():
    bank = fsc.make_bank(2, 2, 4, sigma2=0.0, seed=0)
    x = np.array([[0.3, -0.1, 0.2, 0.5]])
    out = fsc.forward(bank, x, [1])
    np.testing.assert_allclose(out["subclass_probs"].sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(out["class_probs"][0], out["subclass_probs"][0].reshape(2, 2).sum(1))
    loss = fsc.fsc_loss(bank, x, [1], beta=0.0)
    assert math.isclose(loss["cross_entropy"], -math.log(out["class_probs"][0, 1]), rel_tol=1e-12)


def test_gradient_matches_numpy_finite_differences():
    rng = np.random.default_rng(0)
    bank = fsc.make_bank(4, 3, 6, sigma2=1e-2, seed=2)
    x = rng.normal(size=(5, 6))
    y = [0, 1, 2, 3, 1]
    grad = fsc.loss_grad_features(bank, x, y, beta=0.1)
    h = 1e-5
    numeric = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        up, down = x.copy(), x.copy()
        up[idx] += h
        down[idx] -= h
        numeric[idx] = (fsc.fsc_loss(bank, up, y, beta=0.1)["total"]
                        - fsc.fsc_loss(bank, down, y, beta=0.1)["total"]) / (2 * h)
    np.testing.assert_allclose(grad, numeric, atol=1e-8)


def test_dispersion_close_to_two_d_sigma2():
    bank = fsc.make_bank(20, 16, 256, sigma2=1e-3, seed=4)
    stats = fsc.dispersion_stats(bank)
    assert abs(stats["mean_pairwise_sq_dist"] / (2 * 256 * 1e-3) - 1) < 0.1


def test_errors_map_to_python_exceptions():
    bank = fsc.make_bank(3, 2, 4)
    with pytest.raises(ValueError):
        fsc.forward(bank, np.zeros((2, 5)), [0, 1])
    with pytest.raises(ValueError):
        fsc.fsc_loss(bank, np.zeros((1, 4)), [0], beta=-1.0)
    with pytest.raises(ValueError):
        fsc.make_bank(3, 2, 4, sigma2=-1.0)


def test_recall_matches_numpy_brute_force():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(40, 3))
    y = list(rng.integers(0, 4, size=40))
    r = fsc.recall_at_k(x, y, [1, 5])
    xn = x / np.linalg.norm(x, axis=1, keepdims=True)
    sim = xn @ xn.T
    np.fill_diagonal(sim, -np.inf)
    for k in (1, 5):
        # Stable sort by descending similarity breaks ties toward smaller index.
        order = np.argsort(-sim, axis=1, kind="stable")[:, :k]
        hits = [any(y[j] == y[i] for j in order[i]) for i in range(40)]
        assert math.isclose(r[k], np.mean(hits), rel_tol=0, abs_tol=1e-15)
    assert r[1] <= r[5]


def test_mixture_and_training_round_trip():
    data = fsc.generate_mixture(classes=3, modes_per_class=2, input_dim=4, samples_per_mode=10)
    assert data["train"]["x"].shape == (48, 4)
    assert data["test"]["x"].shape == (12, 4)
    assert sorted(set(data["train"]["y"])) == [0, 1, 2]

    kwargs = dict(
        train={"epochs": 3, "batch_size": 8, "hidden_width": 8, "hidden_layers": 1,
               "feature_dim": 4},
        mixture={"classes": 3, "modes_per_class": 2, "input_dim": 4, "samples_per_mode": 10},
    )
    a = fsc.train(**kwargs)
    b = fsc.train(**kwargs)
    assert a == b
    assert 0.0 <= a["top1"] <= 1.0
    assert set(a["recall_at"]) == {"1", "2", "4", "8"}
    assert fsc.top1_accuracy([0, 1, 1], [0, 1, 0]) == pytest.approx(2 / 3)
