"""Smoke tests for the python module (built extension on PYTHONPATH)."""

import math

import pytest

diffkg = pytest.importorskip("diffkg")


def test_schedule_matches_closed_form():
    sch = diffkg.build_schedule(5, 0, 0.1, 1e-4, 1e-2)
    vals = sch.one_minus_alpha_bar
    for t in range(1, 6):
        expect = 0.1 * (1e-4 + (t - 1) / 4 * (1e-2 - 1e-4))
        assert vals[t - 1] == pytest.approx(expect, rel=1e-15)
    assert vals == sorted(vals)
    assert all(0 < sch.beta(t) < 1 for t in range(1, 6))


def test_q_sample_endpoints():
    import numpy as np

    sch = diffkg.build_schedule(5, 0, 0.5, 0.2, 0.8)
    x0 = np.array([[1.0, 0.0, -2.0]])
    zero = np.zeros_like(x0)
    xt = diffkg.q_sample(x0, [3], zero, sch)
    c = math.sqrt(sch.alpha_bar(3))
    assert xt[0, 0] == pytest.approx(c)
    assert xt[0, 2] == pytest.approx(-2 * c)


def test_metrics_against_python_arithmetic():
    assert diffkg.recall_at_n([2, 7], [2, 5], 2) == pytest.approx(0.5)
    idcg = 1.0 + 1.0 / math.log2(3.0)
    assert diffkg.ndcg_at_n([2, 7], [2, 5], 2) == pytest.approx(1.0 / idcg)
    assert diffkg.ndcg_at_n([4], [4], 1) == pytest.approx(1.0)


def test_k_core_star_collapses():
    edges = [(0, i) for i in range(5)]
    with pytest.raises(Exception):
        diffkg.k_core([(u, i) for u, i in edges], 2)
    full = [(u, i) for u in range(3) for i in range(3)]
    assert sorted(diffkg.k_core(full, 3)) == sorted(full)


def test_infonce_uniform_batch():
    import numpy as np

    v = np.tile([1.0, 2.0, -1.0], (4, 1))
    loss = diffkg.infonce(v, v, 1.0)
    assert loss / 4 == pytest.approx(math.log(4), rel=1e-12)


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    diffkg.write_synth_datasets(str(d), 7)
    return d


def _engine(seed, **extra):
    cfg = {
        "d": 16,
        "hidden": 64,
        "epochs": 3,
        "batch_rec": 512,
        "batch_diff": 128,
        "lambda1": 0.02,
        "lr_rec": 0.02,
        "lr_diff": 0.01,
        "k": 3,
        "rho_kg": 0.3,
        "seed": seed,
    }
    cfg.update(extra)
    return diffkg.Engine({k: str(v) for k, v in cfg.items()})


def test_engine_trains_and_evaluates(synth_dir):
    eng = _engine(7)
    eng.load(str(synth_dir / "cf" / "interactions.txt"), str(synth_dir / "cf" / "kg.txt"))
    assert eng.n_users == 200
    assert eng.n_items == 100
    stats = eng.train(3)
    assert len(stats) == 3
    assert all(math.isfinite(row["bpr"]) for row in stats)
    res = eng.evaluate()
    assert 0.0 <= res["recall"] <= 1.0
    assert res["users"] > 0

    recs = eng.recommend(0, 5)
    assert len(recs) == 5
    assert len({item for item, _ in recs}) == 5

    triplets = eng.denoised_triplets()
    heads = {h for h, _, _ in triplets}
    assert heads == set(range(100))  # every item rebuilt with k picks


def test_engine_is_deterministic(synth_dir):
    runs = []
    for _ in range(2):
        eng = _engine(11)
        eng.load(str(synth_dir / "cf" / "interactions.txt"), str(synth_dir / "cf" / "kg.txt"))
        runs.append(eng.train(2))
    assert runs[0] == runs[1]


def test_engine_checkpoint_roundtrip(synth_dir, tmp_path):
    eng = _engine(5)
    eng.load(str(synth_dir / "cf" / "interactions.txt"), str(synth_dir / "cf" / "kg.txt"))
    eng.train(1)
    before = eng.evaluate()
    path = str(tmp_path / "model.ckpt")
    eng.save(path)

    other = _engine(5)
    other.load(str(synth_dir / "cf" / "interactions.txt"), str(synth_dir / "cf" / "kg.txt"))
    other.load_checkpoint(path)
    after = other.evaluate()
    assert after == before


def test_unknown_config_key_rejected():
    with pytest.raises(Exception):
        diffkg.Engine({"no_such_key": "1"})
