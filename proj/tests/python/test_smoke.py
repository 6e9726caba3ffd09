import math
import os
import subprocess

import numpy as np
import pytest

import emofuse

TINY = dict(dim=8, heads=2, n=4, batch_size=8, lr=1e-3, max_epochs=6, seed=1)


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    root = tmp_path_factory.mktemp("run")
    data = root / "data"
    oracle = emofuse.synth(data, seed=2, videos_per_class=5, test_per_class=2)
    assert 0.0 <= oracle <= 1.0
    emofuse.train(data / "manifest.csv", root / "run", **TINY)
    return root


def test_labels():
    assert emofuse.LABELS == ["anger", "disgust", "fear", "joy", "sadness", "surprise"]


def test_equidistant_sampling():
    assert emofuse.sample_indices(32, 4) == [0, 10, 20, 31]
    picks = emofuse.sample_indices(16, 8, mode="random", seed=3)
    assert len(picks) == 8 and all(0 <= i < 16 for i in picks)
    with pytest.raises(emofuse.ParameterError):
        emofuse.sample_indices(4, 2, mode="sideways")


def test_container_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    f = {
        "clip": rng.standard_normal((5, 3), dtype=np.float32),
        "beats": rng.standard_normal((5, 2), dtype=np.float32),
        "expression": rng.standard_normal((2, 4), dtype=np.float32),
        "expression_frames": [1, 3],
        "ocr_sentiment": rng.standard_normal(6, dtype=np.float32),
        "asr_sentiment": None,
    }
    path = tmp_path / "v.vmf"
    emofuse.write_container(path, f)
    back = emofuse.read_container(path)
    for key in ("clip", "beats", "expression", "ocr_sentiment"):
        np.testing.assert_array_equal(back[key], f[key])
    assert back["expression_frames"] == [1, 3]
    assert back["asr_sentiment"] is None
    assert emofuse.encode_container(back) == path.read_bytes()


def test_corrupt_container_raises(tmp_path):
    f = emofuse.decode_container(emofuse.encode_container({
        "clip": np.zeros((2, 2), np.float32), "beats": np.zeros((2, 2), np.float32),
        "expression": np.zeros((0, 2), np.float32), "expression_frames": [],
        "ocr_sentiment": np.zeros(2, np.float32), "asr_sentiment": np.zeros(2, np.float32)}))
    data = bytearray(emofuse.encode_container(f))
    data[-1] ^= 0xFF
    with pytest.raises(emofuse.DecodeError):
        emofuse.decode_container(bytes(data))


def test_param_count():
    assert emofuse.param_count(d=8, heads=2, dims=[8, 8, 8, 8]) == 1158
    assert emofuse.param_count() == 3697670


def test_gradcheck_passes():
    passed, rows = emofuse.gradcheck()
    assert passed
    assert rows and all(err < 1e-4 for _, _, err, _ in rows)


def test_stats_match_numpy(trained):
    manifest = trained / "data" / "manifest.csv"
    stats = emofuse.compute_stats(manifest)
    lo, hi = stats["clip"]
    rows = []
    for line in manifest.read_text().splitlines()[1:]:
        fields = line.split(",")
        if "train" in fields:
            rows.append(emofuse.read_container(trained / "data" / fields[-1])["clip"])
    stacked = np.concatenate(rows)
    np.testing.assert_array_equal(lo, stacked.min(axis=0))
    np.testing.assert_array_equal(hi, stacked.max(axis=0))
    # train carves its validation rows out of the train split first.
    saved_lo, saved_hi = emofuse.read_stats(trained / "run" / "stats.vmf")["clip"]
    assert np.all(saved_lo >= lo) and np.all(saved_hi <= hi)


def test_predict_and_evaluate(trained):
    model = emofuse.Classifier(trained / "run" / "checkpoint.vmf")
    assert model.parameters == 1158
    videos = sorted((trained / "data" / "videos").glob("*.vmf"))
    p = model.predict(videos[0])
    assert p["video_id"] == videos[0].stem
    assert p["predicted"] in emofuse.LABELS
    assert math.isclose(sum(p["probabilities"].values()), 1.0, abs_tol=1e-6)
    same = model.predict(emofuse.read_container(videos[0]), video_id="x")
    assert same["probabilities"] == p["probabilities"]

    report = emofuse.evaluate(trained / "data" / "manifest.csv", trained / "run" / "checkpoint.vmf",
                              trained / "eval")
    assert report["samples"] == 12
    assert math.isclose(report["accuracy"], model.evaluate(trained / "data" / "manifest.csv"), abs_tol=1e-12)


def test_train_failure_raises(tmp_path):
    with pytest.raises(emofuse.Error):
        emofuse.train(tmp_path / "missing.csv", tmp_path / "run")


def test_cli_binary_usage_error():
    cli = os.environ.get("EMOFUSE_CLI")
    if not cli:
        pytest.skip("EMOFUSE_CLI not set")
    r = subprocess.run([cli, "train"], capture_output=True, text=True)
    assert r.returncode == 2
    r = subprocess.run([cli, "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "train" in r.stdout
