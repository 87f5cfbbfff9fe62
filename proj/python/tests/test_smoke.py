import json
import math
import os
from pathlib import Path

import pytest

import mobprof

SOURCE = Path(os.environ.get("MOBPROF_SOURCE_DIR", Path(__file__).resolve().parents[2]))


def small_config(tmp_path):
    cfg = json.loads((SOURCE / "configs" / "demo.json").read_text())
    cfg["synth"]["population"]["n_users"] = 120
    cfg["markov"]["simulations"] = 5
    cfg["calendar"]["permutations"] = 50
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def test_version():
    assert mobprof.__version__.count(".") == 2


def test_haversine_degree_on_equator():
    assert mobprof.haversine_km(0, 0, 1, 0) == pytest.approx(6371.0 * math.pi / 180.0)


def test_metric_examples():
    a, b = "110000000000", "100000000000"
    assert mobprof.bit_distance(a, b) == pytest.approx(1.0)
    assert mobprof.bit_distance(a, b, "manhattan") == pytest.approx(1.0)
    assert mobprof.bit_distance(a, b, "cosine") == pytest.approx(1 - 1 / math.sqrt(2))
    with pytest.raises(mobprof.InputError):
        mobprof.bit_distance(a, "1", "euclidean")


def test_upgma_and_cluster():
    merges = mobprof.upgma(3, [1.0, 4.0, 5.0])
    assert merges[0][:3] == (0, 1, 1.0)
    assert merges[1][2] == pytest.approx(4.5)
    labels = mobprof.cluster(["000001111000"] * 3 + ["110011001100"] * 2, 2)
    assert labels == [0, 0, 0, 1, 1]


def test_detect_and_periods():
    series = [10.0 + (i % 4) for i in range(60)]
    series[40] = 80.0
    hits = mobprof.detect_spikes(series, 4.0)
    assert [h[0] for h in hits] == [40]
    assert mobprof.select_periods([0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1]) == [9]


def test_calendar_correlation():
    target = [0.0] * 12
    for m in (5, 6, 7):
        target[m] = 1.0
    shifted = target[-2:] + target[:-2]
    best, r, by_lag = mobprof.lagged_correlation(shifted, target)
    assert best == 2 and r == pytest.approx(1.0) and len(by_lag) == 7
    assert mobprof.permutation_p_value(target, target, 0, 200, 1) <= 0.05


def test_markov():
    vectors = [[1] * 12, [1, 2] * 6, [2] * 12]
    model = mobprof.fit_markov(vectors)
    assert model["states"] == [1, 2]
    report = mobprof.nonstationarity_report(vectors, seed=1, simulations=5)
    assert len(report["observed_agreement"]) == 12


def test_pipeline_run(tmp_path):
    cfg = small_config(tmp_path)
    out = tmp_path / "out"
    with pytest.raises(mobprof.MissingStageError):
        mobprof.run(cfg, out, "cluster")
    first = mobprof.run(cfg, out)
    assert [r["stage"] for r in first] == list(mobprof.STAGES)
    assert not any(r["skipped"] for r in first)
    assert all(r["skipped"] for r in mobprof.run(cfg, out))
    clusters = json.loads((out / "cluster" / "clusters.json").read_text())
    assert clusters["zones"][0]["zone"] == 3
    assert mobprof.expanded_config(cfg, seed=99)["seed"] == 99
