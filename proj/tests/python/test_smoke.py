# Copyright 2026 The CGBC Authors
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


import json
import os

import numpy as np
import pytest

import cgbc


def test_hand_example():
    res = cgbc.aggregate([0.1, 0.2, 0.2, 0.3, 0.8], mode="soft_trim", lambda_=2.5, slope=1.0)
    assert res["median"] == pytest.approx(0.2)
    assert res["mad"] == pytest.approx(0.1)
    assert res["rho_raw"] == pytest.approx(0.2)
    assert res["weights"] == pytest.approx([0.2, 0.5, 0.5, 0.2, 2.44e-4], rel=1e-3)
    assert res["mu_hat"] == pytest.approx(0.2001, abs=1e-3)


def test_container_round_trip(tmp_path):
    rows = np.random.default_rng(0).normal(size=(3, 4)).astype(np.float32)
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    c = cgbc.EmbeddingContainer("prompt", ["a", "b", "c"], rows, True)
    path = cgbc.save_container(c, str(tmp_path / "p"))
    back = cgbc.load_container(path)
    assert back.names == ["a", "b", "c"]
    assert back.dim == 4
    np.testing.assert_array_equal(np.asarray(back.rows), rows)
    sims = np.asarray(cgbc.cosine_sim(c, c))
    np.testing.assert_allclose(np.diag(sims), 1.0, atol=1e-6)


def test_bad_manifest_raises(tmp_path):
    (tmp_path / "x.manifest.json").write_text("{}")
    with pytest.raises(cgbc.DataError):
        cgbc.load_container(str(tmp_path / "x.manifest.json"))
    with pytest.raises(ValueError):
        cgbc.load_container(str(tmp_path / "x.manifest.json"))


def test_dpp_skips_duplicate():
    k = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    idx, gains = cgbc.greedy_map(k, 2, 1e-8)
    assert sorted(idx) == [0, 2]
    assert gains[0] >= gains[1]


def test_diagnostics_and_classify():
    d = cgbc.describe([1.0, 2.0, 3.0, 4.0])
    assert d["skewness"] == pytest.approx(0.0, abs=1e-9)
    assert d["excess_kurtosis"] == pytest.approx(-1.36, abs=1e-9)
    ds = cgbc.make_synthetic(k=3, m_per_class=5, n_images=12, dim=16, noise_sigma=0.0,
                             prompt_sigma=0.0, seed=1)
    pred, scores = cgbc.classify(ds["images"], ds["prompts"], ds["class_names"])
    assert list(pred) == list(ds["labels"])
    assert np.asarray(scores).shape == (12, 3)


def test_digest_and_parse():
    assert cgbc.request_digest("m", "s", "u") == (
        "47caec8a8aba3b5848aa55a89850386998013db54f50ad73449103faa7562f52")
    reply = "<concepts begin>\nThe final concept is: a\nThe final concept is: b\n</concepts end>"
    assert cgbc.parse_concepts(reply) == ["a", "b"]
    with pytest.raises(cgbc.DataError):
        cgbc.parse_concepts("The final concept is: a")


def test_cli_simulate(tmp_path):
    code, out, err = cgbc.run_cli(["simulate", "--preset", "theorem1", "--trials", "10",
                                   "--out", str(tmp_path)])
    assert code == 0, err
    header = (tmp_path / "sweep.csv").read_text().splitlines()[0]
    assert header.startswith("rho,M,slope")
    code, _, _ = cgbc.run_cli(["evaluate", "--aggregator", "nope"])
    assert code == 1


def test_cli_demo_evaluate(tmp_path):
    data = os.environ.get("CGBC_DATA_DIR")
    if not data:
        pytest.skip("CGBC_DATA_DIR not set")
    cfg = os.path.join(data, "synthetic", "run.json")
    code, out, err = cgbc.run_cli(["evaluate", "--config", cfg, "--out", str(tmp_path)])
    assert code == 0, err
    report = json.loads((tmp_path / "report.json").read_text())
    assert 0.0 <= report["top1_accuracy"] <= 1.0
