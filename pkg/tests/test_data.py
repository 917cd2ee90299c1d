"""Embedding stores, sample and judgment files, and the synthetic task."""

import itertools
import json
import math

import numpy as np
import pytest

from qproj.data import (
    MAGIC,
    EmbeddingStore,
    SynthConfig,
    gen_synth,
    infer_store_format,
    load_qrels,
    load_samples,
    load_store,
    save_qrels,
    save_samples,
    save_store,
)
from qproj.errors import ConfigError, DataError, DimensionError, DomainError
from qproj.evaluation import ndcg_at_k
from qproj.training import TrainingSample


def random_store(rng, n=10, dim=4):
    store = EmbeddingStore(dim)
    for i in range(n):
        store.add(f"v{i:03d}", rng.normal(size=dim))
    return store


# ---------------------------------------------------------------------------
# in-memory store

def test_store_basic_access():
    store = EmbeddingStore(3)
    store.add("a", np.array([1.0, 2.0, 3.0]))
    store.add("b", np.array([4.0, 5.0, 6.0]))
    assert len(store) == 2
    assert "a" in store and "c" not in store
    np.testing.assert_array_equal(store["b"], [4.0, 5.0, 6.0])
    assert store.ids() == ["a", "b"]


def test_store_matrix_preserves_requested_order():
    rng = np.random.default_rng(100)
    store = random_store(rng)
    mat = store.matrix(["v003", "v001"])
    np.testing.assert_array_equal(mat[0], store["v003"])
    np.testing.assert_array_equal(mat[1], store["v001"])


def test_store_rejects_bad_adds():
    store = EmbeddingStore(2)
    store.add("a", np.zeros(2))
    with pytest.raises(DataError) as exc:
        store.add("a", np.ones(2))
    assert exc.value.kind == "duplicate-id"
    with pytest.raises(DataError):
        store.add("", np.zeros(2))
    with pytest.raises(DimensionError):
        store.add("b", np.zeros(3))
    with pytest.raises(DomainError):
        store.add("c", np.array([np.nan, 0.0]))


def test_store_missing_id():
    store = EmbeddingStore(2)
    with pytest.raises(DataError) as exc:
        store["ghost"]
    assert exc.value.kind == "missing-id"


# ---------------------------------------------------------------------------
# store serialization

def test_binary_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(101)
    store = random_store(rng, n=17, dim=6)
    path = str(tmp_path / "store.bin")
    save_store(path, store, "binary")
    loaded = load_store(path, "binary")
    assert loaded.dim == 6
    assert loaded.ids() == store.ids()
    for vid in store.ids():
        np.testing.assert_array_equal(loaded[vid], store[vid])


def test_jsonl_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(102)
    store = random_store(rng, n=9, dim=3)
    path = str(tmp_path / "store.jsonl")
    save_store(path, store, "jsonl")
    loaded = load_store(path, "jsonl")
    for vid in store.ids():
        np.testing.assert_array_equal(loaded[vid], store[vid])


def test_empty_binary_store_roundtrips(tmp_path):
    path = str(tmp_path / "empty.bin")
    save_store(path, EmbeddingStore(5), "binary")
    loaded = load_store(path, "binary")
    assert len(loaded) == 0
    assert loaded.dim == 5


def test_empty_jsonl_store_rejected(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    with pytest.raises(DataError) as exc:
        load_store(str(path), "jsonl")
    assert exc.value.kind == "empty"


def test_jsonl_error_positions(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": "a", "vec": [1.0, 2.0]}\n{oops\n')
    with pytest.raises(DataError) as exc:
        load_store(str(path), "jsonl")
    assert exc.value.kind == "json"
    assert ":2:" in str(exc.value)

    path.write_text('{"id": "a", "vec": [1.0, 2.0]}\n{"id": "b", "vec": [1.0]}\n')
    with pytest.raises(DataError) as exc:
        load_store(str(path), "jsonl")
    assert exc.value.kind == "dim"
    assert ":2:" in str(exc.value)

    path.write_text('{"id": "a"}\n')
    with pytest.raises(DataError) as exc:
        load_store(str(path), "jsonl")
    assert exc.value.kind == "schema"


def test_binary_error_kinds(tmp_path):
    good = tmp_path / "good.bin"
    rng = np.random.default_rng(103)
    save_store(str(good), random_store(rng, n=3, dim=2), "binary")
    raw = good.read_bytes()

    bad_magic = tmp_path / "magic.bin"
    bad_magic.write_bytes(b"NOTMAGIC" + raw[8:])
    with pytest.raises(DataError) as exc:
        load_store(str(bad_magic), "binary")
    assert exc.value.kind == "magic"

    truncated = tmp_path / "trunc.bin"
    truncated.write_bytes(raw[:-5])
    with pytest.raises(DataError) as exc:
        load_store(str(truncated), "binary")
    assert exc.value.kind == "truncated"

    trailing = tmp_path / "trail.bin"
    trailing.write_bytes(raw + b"\x00")
    with pytest.raises(DataError) as exc:
        load_store(str(trailing), "binary")
    assert exc.value.kind == "trailing"


def test_binary_layout_starts_with_magic(tmp_path):
    path = tmp_path / "store.bin"
    save_store(str(path), EmbeddingStore(2), "binary")
    assert path.read_bytes().startswith(MAGIC)


def test_infer_store_format():
    assert infer_store_format("x/store.jsonl") == "jsonl"
    assert infer_store_format("x/store.bin") == "binary"
    assert infer_store_format("weird.dat") == "binary"


# ---------------------------------------------------------------------------
# samples and judgments

def test_samples_roundtrip(tmp_path):
    samples = [
        TrainingSample("q1", "p1", ("n1", "n2", "n3", "n4", "n5")),
        TrainingSample("q2", "p2", ("m1", "m2", "m3", "m4", "m5")),
    ]
    path = str(tmp_path / "samples.jsonl")
    save_samples(path, samples)
    assert load_samples(path) == samples


def test_samples_schema_error(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"query_id": "q", "pos_id": "p", "neg_ids": ["a"]}\n')
    with pytest.raises(DataError) as exc:
        load_samples(str(path))
    assert exc.value.kind == "schema"


def test_qrels_roundtrip(tmp_path):
    judgments = {"q1": {"p1": 3, "p2": 0}, "q2": {"p1": 1}}
    path = str(tmp_path / "qrels.tsv")
    save_qrels(path, judgments)
    assert load_qrels(path) == judgments


def test_qrels_error_kinds(tmp_path):
    path = tmp_path / "qrels.tsv"
    path.write_text("q1\tp1\t9\n")
    with pytest.raises(DataError) as exc:
        load_qrels(str(path))
    assert exc.value.kind == "grade"

    path.write_text("q1\tp1\n")
    with pytest.raises(DataError) as exc:
        load_qrels(str(path))
    assert exc.value.kind == "schema"

    path.write_text("q1\tp1\t1\nq1\tp1\t2\n")
    with pytest.raises(DataError) as exc:
        load_qrels(str(path))
    assert exc.value.kind == "duplicate-id"


# ---------------------------------------------------------------------------
# the synthetic ranking task

def test_synth_config_validation():
    with pytest.raises(ConfigError):
        SynthConfig(n_passages_per_query=5)
    with pytest.raises(ConfigError):
        SynthConfig(noise_sigma=-0.1)
    with pytest.raises(ConfigError):
        SynthConfig(val_fraction=1.0)


def test_synth_shapes_and_split():
    ds = gen_synth(SynthConfig())
    assert len(ds.store) == 400  # 200 queries + 200 positives
    assert ds.store.dim == 32
    assert len(ds.train_samples) == 160
    assert len(ds.val_samples) == 40
    assert len(ds.judgments) == 40
    train_qids = {s.query_id for s in ds.train_samples}
    val_qids = {s.query_id for s in ds.val_samples}
    assert not train_qids & val_qids
    assert set(ds.judgments) == val_qids


def test_synth_judgment_pools():
    ds = gen_synth(SynthConfig(n_queries=20, seed=1))
    for s in ds.val_samples:
        grades = ds.judgments[s.query_id]
        assert grades[s.pos_id] == 3
        assert sorted(grades.values()) == [0, 0, 0, 1, 1, 3]
        assert set(grades) == {s.pos_id, *s.neg_ids}


def test_synth_negatives_are_other_queries_positives():
    ds = gen_synth(SynthConfig(n_queries=16, seed=2))
    for s in ds.train_samples + ds.val_samples:
        own = "p" + s.query_id[1:]
        assert s.pos_id == own
        assert own not in s.neg_ids
        assert len(set(s.neg_ids)) == 5


def test_synth_deterministic():
    a = gen_synth(SynthConfig(n_queries=12, seed=5))
    b = gen_synth(SynthConfig(n_queries=12, seed=5))
    c = gen_synth(SynthConfig(n_queries=12, seed=6))
    assert a.train_samples == b.train_samples
    assert a.judgments == b.judgments
    for vid in a.store.ids():
        np.testing.assert_array_equal(a.store[vid], b.store[vid])
    assert any(
        not np.array_equal(a.store[vid], c.store[vid]) for vid in a.store.ids()
    )


def test_synth_zero_noise_makes_positive_equal_query():
    ds = gen_synth(SynthConfig(n_queries=8, noise_sigma=0.0, seed=3))
    for i in range(8):
        np.testing.assert_allclose(
            ds.store[f"p{i:04d}"], ds.store[f"q{i:04d}"], atol=1e-12
        )


def test_random_scorer_ndcg_matches_enumeration():
    """A scorer with no signal should sit at the permutation average."""
    grades = (3, 1, 1, 0, 0, 0)
    idcg = sum(g / math.log2(i + 1) for i, g in enumerate(sorted(grades, reverse=True), 1))
    expected = np.mean(
        [
            sum(g / math.log2(i + 1) for i, g in enumerate(perm, 1)) / idcg
            for perm in itertools.permutations(grades)
        ]
    )

    ds = gen_synth(SynthConfig(n_queries=50, seed=11))
    means = []
    for seed in range(20):
        rng = np.random.default_rng([99, seed])
        vals = []
        for qid, pool in ds.judgments.items():
            pids = sorted(pool)
            order = list(rng.permutation(pids))
            vals.append(ndcg_at_k(order, pool))
        means.append(np.mean(vals))
    assert np.mean(means) == pytest.approx(expected, abs=0.05)
