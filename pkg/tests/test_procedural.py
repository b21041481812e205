from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cradle.errors import CorruptEntry, DimensionMismatch, DuplicateName, FormatVersionMismatch, NotFound
from cradle.memory import SkillEntry, SkillStore, build_store
from cradle.provider import HashEmbedder
from cradle.skills import BUILTIN_NATIVES, INFEASIBLE, SkillCall, compile_call, load_preset
from synth import brute_retrieve, random_store, tiny_script


def names(entries) -> list[str]:
    return [e.name for e in entries]


def test_retrieve_matches_oracle(rng):
    for _ in range(20):
        store = random_store(rng, int(rng.integers(1, 120)))
        q = rng.normal(size=8)
        k = int(rng.integers(1, 30))
        assert names(store.retrieve_by_vector(q, k)) == brute_retrieve(store, q, k)


def test_ties_break_by_name():
    store = SkillStore(2)
    for n in ["zeta", "alpha", "mid"]:
        store.add(SkillEntry(tiny_script(n), [1.0, 0.0]))
    store.add(SkillEntry(tiny_script("other"), [0.0, 1.0]))
    assert names(store.retrieve_by_vector([3.0, 0.0], 3)) == ["alpha", "mid", "zeta"]


@pytest.mark.parametrize("n", [7, 303])
def test_identical_embeddings_tie_wherever_they_sit(rng, n):
    # a BLAS matrix-vector product rounds the tail rows of these sizes differently
    store = SkillStore(8)
    v = rng.normal(size=8)
    order = [f"n{i:03d}" for i in range(n)][::-1]  # rows in reverse name order
    for name in order:
        store.add(SkillEntry(tiny_script(name), v))
    for _ in range(20):
        q = rng.normal(size=8)
        assert names(store.retrieve_by_vector(q, n)) == sorted(order)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-6, 1e6))
def test_positive_scaling_invariance(seed, scale):
    rng = np.random.default_rng(seed)
    store = random_store(rng, 40)
    q = rng.normal(size=8)
    assert names(store.retrieve_by_vector(q, 40)) == names(store.retrieve_by_vector(q * scale, 40))


def test_k_larger_than_store_and_empty():
    store = random_store(np.random.default_rng(0), 5)
    assert len(store.retrieve_by_vector(np.ones(8), 50)) == 5
    assert SkillStore(8).retrieve_by_vector(np.ones(8), 3) == []
    with pytest.raises(ValueError):
        store.retrieve_by_vector(np.ones(8), 0)
    with pytest.raises(ValueError):
        store.retrieve_by_vector(np.zeros(8), 1)


def test_dimension_and_duplicate_checks():
    store = SkillStore(4)
    store.add(SkillEntry(tiny_script("a"), [1, 0, 0, 0]))
    with pytest.raises(DuplicateName):
        store.add(SkillEntry(tiny_script("a"), [0, 1, 0, 0]))
    with pytest.raises(DimensionMismatch):
        store.add(SkillEntry(tiny_script("b"), [1, 0, 0]))
    with pytest.raises(NotFound):
        store.get("missing")


def test_persist_load_roundtrip(tmp_path, rng):
    emb = HashEmbedder(16)
    store = build_store(load_preset("games"), emb, 16)
    store.add(SkillEntry(BUILTIN_NATIVES[INFEASIBLE], rng.normal(size=16), "predefined"))
    store.compose("turn_move_tool", ["turn", "move_forward", "use_tool"], "Turn, walk, then use the tool.", emb, 7)
    path = store.persist(tmp_path / "store.skills")
    back = SkillStore.load(path)
    assert back == store
    assert back.get("turn_move_tool").source == "composed" and back.get("turn_move_tool").created_at == 7
    # embeddings survive bit-for-bit
    assert all(np.array_equal(a.embedding, b.embedding) for a, b in zip(back.entries(), store.entries()))


def test_load_rejects_bad_files(tmp_path):
    store = build_store(load_preset("software")[:2], HashEmbedder(8), 8)
    good = store.persist(tmp_path / "s").read_text()
    cases = {
        "version": (good.replace("skillstore v1", "skillstore v9", 1), FormatVersionMismatch),
        "header": ("garbage\n", CorruptEntry),
        "truncated": ("\n".join(good.splitlines()[:5]), CorruptEntry),
        "embedding": (good.replace("embedding ", "embedding !!", 1), CorruptEntry),
        "count": (good.replace("count=2", "count=3"), CorruptEntry),
    }
    for label, (text, err) in cases.items():
        p = tmp_path / label
        p.write_text(text)
        with pytest.raises(err):
            SkillStore.load(p)


def test_compose_compiles_to_concatenation():
    emb = HashEmbedder(8)
    store = build_store(load_preset("games"), emb, 8)
    entry = store.compose("go", ["turn", "move_forward"], "Turn then move.", emb)
    assert [p.name for p in entry.script.params] == ["degree", "duration"]
    reg = store.registry()
    whole = compile_call(SkillCall("go", (45, 1.0)), reg, (100, 100))
    parts = compile_call(SkillCall("turn", (45,)), reg, (100, 100)) + \
        compile_call(SkillCall("move_forward", (1.0,)), reg, (100, 100))
    assert whole == parts


def test_compose_renames_clashing_params():
    emb = HashEmbedder(8)
    store = build_store(load_preset("games"), emb, 8)
    entry = store.compose("zigzag", ["move_up", "move_right"], "Up then right.", emb)
    assert [p.name for p in entry.script.params] == ["duration", "move_right_duration"]


def test_update_keeps_embedding_when_doc_unchanged():
    emb = HashEmbedder(8)
    store = build_store([tiny_script("a", "first doc")], emb, 8)
    before = store.get("a").embedding.copy()
    store.update("a", tiny_script("a", "first doc"), emb)
    assert np.array_equal(store.get("a").embedding, before)
    store.update("a", tiny_script("a", "a rather different description"), emb)
    assert not np.array_equal(store.get("a").embedding, before)
