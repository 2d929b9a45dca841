import pytest
from hypothesis import given, settings, strategies as st

from chainscope.data import EOA, SC, ingest, is_address, normalize_address
from chainscope.errors import DuplicateAccount, EmptyDataset

from conftest import addr, write_dataset

A, B, C, D = addr(0xA), addr(0xB), addr(0xC), addr(0xD)


def small(tmp_path):
    return write_dataset(
        tmp_path,
        external=[(1, 5, A, B, 10, 1), (2, 10, B, C, 0, 2), (3, 20, A, D, 7, 3)],
        internal=[(2, 10, B, A, 3, "CALL"), (1, 7, C, D, 0, "CALL")],
    )


def test_max_block_is_largest_block(tmp_path):
    store = ingest(small(tmp_path))
    assert store.max_block == 20
    assert len(store.external) == 3 and len(store.internal) == 2


def test_unknown_opcode_row_is_rejected(tmp_path):
    write_dataset(tmp_path, external=[(1, 1, A, B, 0, 1)], internal=[(1, 1, B, C, 0, "CREATE2"), (1, 1, B, D, 0, "CALL")])
    store = ingest(tmp_path)
    assert len(store.internal) == 1
    assert len(store.rejects) == 1
    assert store.rejects[0].file == "internal.csv" and store.rejects[0].line == 2
    assert "CREATE2" in store.rejects[0].reason


def test_bad_rows_are_skipped_with_line_numbers(tmp_path):
    write_dataset(
        tmp_path,
        external=[(1, 1, A, B, 0, 1), (2, 2, "0x123", B, 0, 1), (3, 3, A, B, -5, 1), (4, 4, A, B, 2**256, 1)],
    )
    store = ingest(tmp_path)
    assert len(store.external) == 1
    assert [r.line for r in store.rejects] == [3, 4, 5]


def test_ingest_twice_is_byte_identical(tmp_path):
    d = small(tmp_path)
    assert ingest(d).to_json() == ingest(d).to_json()


def test_duplicate_label_is_fatal(tmp_path):
    write_dataset(tmp_path, external=[(1, 1, A, B, 0, 1)], labels=[(B, "Ponzi"), (B.upper().replace("0X", "0x"), "Phishing")])
    with pytest.raises(DuplicateAccount):
        ingest(tmp_path)


def test_empty_dataset_is_fatal(tmp_path):
    write_dataset(tmp_path)
    with pytest.raises(EmptyDataset):
        ingest(tmp_path)


def test_max_block_bound_rejects_later_rows(tmp_path):
    store = ingest(small(tmp_path), max_block=12)
    assert store.max_block == 10
    assert len(store.rejects) == 1


def test_activity_slice_examples(tmp_path):
    write_dataset(tmp_path, external=[(1, 5, A, B, 1, 1), (2, 10, B, A, 1, 1), (3, 20, A, C, 1, 1)])
    store = ingest(tmp_path)
    assert [t.block for t in store.activity_slice(A, 1, 10)] == [5, 10]
    assert store.activity_slice(A, 21, 30) == []
    assert len(store.activity_slice(A, 0, store.max_block)) == store.index_size(A) == 3
    assert store.activity_slice(addr(0x999), 0, 100) == []


def test_externals_precede_internals_within_block(tmp_path):
    write_dataset(tmp_path, external=[(1, 4, A, B, 1, 1)], internal=[(1, 4, B, A, 1, "CALL"), (1, 3, B, C, 0, "CALL")])
    store = ingest(tmp_path)
    kinds = [(t.block, t.kind) for t in store.activity_slice(B, 0, 10)]
    assert kinds == [(3, "internal"), (4, "external"), (4, "internal")]


def test_creation_tx_gets_created_address(tmp_path):
    write_dataset(tmp_path, external=[(1, 3, A, None, 0, 1)], internal=[(1, 3, A, B, 0, "CREATE")])
    store = ingest(tmp_path)
    assert store.external[0].receiver == B
    assert store.kind(A) == EOA and store.kind(B) == SC


def test_sources_cells(tmp_path):
    (tmp_path / "code.sol").write_bytes(b"contract X {}")
    write_dataset(tmp_path, external=[(1, 1, A, B, 0, 1)], sources=[(B, b"contract B {}"), (C, None)])
    with open(tmp_path / "sources.csv", "a") as fh:
        fh.write(f"{D},code.sol\n")
    store = ingest(tmp_path)
    assert store.sources[B].source == b"contract B {}" and store.sources[B].available
    assert store.sources[C].source == b"" and not store.sources[C].available
    assert store.sources[D].source == b"contract X {}"


def test_every_address_indexed_once(tmp_path):
    store = ingest(small(tmp_path))
    touched = {a for t in store.events for a in (t.sender, t.receiver) if a}
    assert set(store.accounts) == touched


def test_address_normalization():
    mixed = "0x" + "AbCd" * 10
    assert normalize_address(mixed) == mixed.lower()
    assert not is_address("0x" + "g" * 40)
    assert not is_address("0x" + "a" * 39)


_blocks = st.lists(st.tuples(st.integers(1, 50), st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=30)


@settings(max_examples=40, deadline=None)
@given(_blocks, st.integers(0, 50))
def test_slice_union_and_total_count(tmp_path_factory, rows, cut):
    root = tmp_path_factory.mktemp("ds")
    accts = [addr(i + 1) for i in range(4)]
    write_dataset(root, external=[(i, b, accts[s], accts[r], 1, 1) for i, (b, s, r) in enumerate(rows)])
    store = ingest(root)
    total = 0
    for a in store.accounts:
        whole = store.activity_slice(a, 0, store.max_block)
        left = store.activity_slice(a, 0, cut)
        right = store.activity_slice(a, cut + 1, store.max_block) if cut < store.max_block else []
        assert left + right == whole
        total += len(whole)
    self_txs = sum(1 for _, s, r in rows if s == r)
    assert total == 2 * len(rows) - self_txs
