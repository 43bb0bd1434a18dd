import math
from pathlib import Path

import numpy as np
import pytest

import dfaprint

DATA = Path(__file__).resolve().parents[2] / "data"
FAMILIES = ["alpha", "beta", "gamma"]


def test_white_noise_exponent():
    rng = np.random.default_rng(3)
    alpha = dfaprint.dfa_exponent(rng.standard_normal(8192))
    assert abs(alpha - 0.5) < 0.06


def test_dfa_result_fields():
    r = dfaprint.dfa(np.cumsum(np.random.default_rng(1).standard_normal(4096)))
    assert len(r.box_sizes) == len(r.fluctuations) >= 4
    assert abs(r.alpha - 1.5) < 0.15
    assert not r.degenerate


def test_pearson_matches_numpy():
    rng = np.random.default_rng(5)
    x, y = rng.standard_normal(500), rng.standard_normal(500)
    assert dfaprint.pearson(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-12)


def test_trace_round_trip():
    values = np.arange(200, dtype=float).reshape(100, 2)
    t = dfaprint.Trace(["a", "b"], values, 0.5)
    assert t.length == 100 and t.num_metrics == 2
    back = dfaprint.parse_trace(dfaprint.write_trace(t))
    assert back.names == ["a", "b"]
    np.testing.assert_array_equal(back.values, values)


def test_fingerprint_size():
    spec = dfaprint.load_family_spec(str(DATA / "alpha.json"))
    fp = dfaprint.fingerprint(dfaprint.generate_synthetic_trace(spec, 7, 1024))
    assert len(fp) == dfaprint.fingerprint_size(4) == 4 + 6
    assert fp.names[0].startswith("dfa:")


def test_mutual_information_perfect_split():
    f = np.array([0.0, 1.0] * 50)
    labels = ["x", "y"] * 50
    assert dfaprint.mutual_information(f, labels, 2) == pytest.approx(math.log(2), abs=1e-12)


def _traces(per_family, seed0):
    traces, families, groups = [], [], []
    for k, name in enumerate(FAMILIES):
        spec = dfaprint.load_family_spec(str(DATA / f"{name}.json"))
        for i in range(per_family):
            seed = seed0 + 1000 * k + i
            traces.append(dfaprint.generate_synthetic_trace(spec, seed, 1024))
            families.append(name)
            groups.append(f"{name}-{i}")
    return traces, families, groups


def test_train_classify_and_reload(tmp_path):
    traces, families, groups = _traces(8, 0)
    config = dfaprint.PipelineConfig()
    config.folds = 3
    config.q_grid = [20, 60, 100]
    model = dfaprint.train(traces, families, groups, config)
    assert model.classes == FAMILIES
    assert 0.0 <= model.cv_accuracy <= 1.0

    test, truth, _ = _traces(3, 500)
    correct = sum(model.classify(t).label == f for t, f in zip(test, truth))
    assert correct >= 7

    path = tmp_path / "model.json"
    model.save(str(path))
    reloaded = dfaprint.load_model(str(path))
    assert reloaded.to_json() == path.read_text()
    for t in test:
        a, b = model.classify(t), reloaded.classify(t)
        assert a.label == b.label and a.votes == b.votes and a.margins == b.margins


def test_schema_mismatch_is_an_error():
    traces, families, groups = _traces(4, 0)
    config = dfaprint.PipelineConfig()
    config.folds = 2
    config.q_grid = [100]
    model = dfaprint.train(traces, families, groups, config)
    other = dfaprint.Trace(["x", "y"], np.random.default_rng(0).standard_normal((256, 2)))
    with pytest.raises(dfaprint.Error, match="schema mismatch"):
        model.classify(other)


def test_evaluate_manifest(tmp_path):
    lines = ["path,family,sample"]
    for k, name in enumerate(FAMILIES):
        spec = dfaprint.load_family_spec(str(DATA / f"{name}.json"))
        for i in range(12):
            p = tmp_path / f"{name}_{i}.csv"
            p.write_text(dfaprint.write_trace(dfaprint.generate_synthetic_trace(spec, 100 * k + i, 1024)))
            lines.append(f"{p.name},{name},{name}-{i // 2}")
    manifest = tmp_path / "manifest.csv"
    manifest.write_text("\n".join(lines) + "\n")
    config = dfaprint.PipelineConfig()
    config.folds = 2
    config.q_grid = [50, 100]
    report = dfaprint.evaluate_manifest(str(manifest), repetitions=2, q_runs=2, config=config)
    assert report["classes"] == FAMILIES
    assert len(report["accuracy_per_repetition"]) == 2
    assert 0.0 <= report["accuracy_mean"] <= 1.0


def test_sample_fake_proc(tmp_path):
    root = tmp_path / "proc"
    (root / "self").mkdir(parents=True)
    (root / "net").mkdir()
    (root / "stat").write_text("cpu 1 2 3 4 5\nctxt 9\nprocs_running 2\n")
    (root / "meminfo").write_text(
        "MemFree: 1 kB\nMemAvailable: 2 kB\nBuffers: 3 kB\nCached: 4 kB\nSwapFree: 5 kB\n"
    )
    (root / "self" / "stat").write_text("1 (x) S " + " ".join(str(i) for i in range(3, 53)) + "\n")
    (root / "self" / "io").write_text("read_bytes: 10\nwrite_bytes: 20\n")
    (root / "net" / "dev").write_text("  eth0: " + " ".join(str(i) for i in range(1, 17)) + "\n")
    (root / "net" / "sockstat").write_text("TCP: inuse 4 orphan 0\n")
    rows = dfaprint.sample_proc(str(root), samples=3)
    names = dfaprint.default_metric_names()
    assert rows.shape == (3, len(names)) == (3, 26)
    # Static tree: counter deltas are zero, gauges repeat.
    assert rows[1, names.index("cpu_user")] == 0.0
    assert rows[2, names.index("procs_running")] == 2.0
