"""Embedding file format, manifest parsing, binding, and subsetting."""

import json
import struct

import numpy as np
import pytest

from protoshot import (
    BindError,
    DataError,
    EmbeddingMatrix,
    FormatError,
    ManifestError,
    TruncationError,
    bind,
    read_embeddings,
    read_manifest,
    subset,
    write_embeddings,
    write_manifest,
)
from protoshot.embedstore import ClassVocab

from helpers import make_dataset


def random_matrix(rng, n=None, l=None):
    n = int(rng.integers(0, 30)) if n is None else n
    l = int(rng.integers(1, 40)) if l is None else l
    return EmbeddingMatrix(rng.standard_normal((n, l)).astype(np.float32))


class TestEmbeddingFile:
    def test_empty_matrix_roundtrip(self, tmp_path):
        """n=0 with a declared dimension survives the file format."""
        path = tmp_path / "e.emb1"
        write_embeddings(EmbeddingMatrix(np.zeros((0, 4), dtype=np.float32)), path)
        assert path.stat().st_size == 16
        m = read_embeddings(path)
        assert (m.n, m.l) == (0, 4)

    def test_known_payload(self, tmp_path):
        path = tmp_path / "e.emb1"
        write_embeddings(
            EmbeddingMatrix(np.array([[1.0, 0.0, -2.5]], dtype=np.float32)), path
        )
        m = read_embeddings(path)
        np.testing.assert_array_equal(m.data, [[1.0, 0.0, -2.5]])

    def test_file_size_formula(self, tmp_path):
        path = tmp_path / "e.emb1"
        write_embeddings(
            EmbeddingMatrix(np.ones((2, 2), dtype=np.float32)), path
        )
        assert path.stat().st_size == 16 + 2 * 2 * 4

    def test_roundtrip_bytes(self, tmp_path, rng):
        """write(read(f)) reproduces the file byte for byte."""
        for _ in range(50):
            m = random_matrix(rng)
            p1, p2 = tmp_path / "a.emb1", tmp_path / "b.emb1"
            write_embeddings(m, p1)
            write_embeddings(read_embeddings(p1), p2)
            assert p1.read_bytes() == p2.read_bytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.emb1"
        path.write_bytes(b"XXXX" + struct.pack("<III", 1, 0, 4))
        with pytest.raises(FormatError):
            read_embeddings(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "bad.emb1"
        path.write_bytes(b"EMB1" + struct.pack("<III", 7, 0, 4))
        with pytest.raises(FormatError):
            read_embeddings(path)

    def test_zero_dimension_rejected(self, tmp_path):
        path = tmp_path / "bad.emb1"
        path.write_bytes(b"EMB1" + struct.pack("<III", 1, 3, 0))
        with pytest.raises(FormatError):
            read_embeddings(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "bad.emb1"
        path.write_bytes(b"EMB1" + struct.pack("<III", 1, 2, 2) + b"\x00" * 7)
        with pytest.raises(TruncationError):
            read_embeddings(path)

    def test_oversized_payload(self, tmp_path):
        path = tmp_path / "bad.emb1"
        path.write_bytes(b"EMB1" + struct.pack("<III", 1, 1, 1) + b"\x00" * 8)
        with pytest.raises(TruncationError):
            read_embeddings(path)

    def test_nonfinite_payload(self, tmp_path):
        path = tmp_path / "bad.emb1"
        payload = np.array([np.nan, 1.0], dtype="<f4").tobytes()
        path.write_bytes(b"EMB1" + struct.pack("<III", 1, 1, 2) + payload)
        with pytest.raises(DataError):
            read_embeddings(path)

    def test_nonfinite_matrix_rejected(self):
        with pytest.raises(DataError):
            EmbeddingMatrix(np.array([[np.inf]], dtype=np.float32))


class TestManifest:
    def write(self, tmp_path, lines):
        path = tmp_path / "m.jsonl"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    def test_single_record(self, tmp_path):
        path = self.write(
            tmp_path, [json.dumps({"id": "a", "labels": ["dog"], "split": "dev"})]
        )
        man = read_manifest(path)
        assert len(man) == 1
        assert man.records[0].labels == frozenset({"dog"})

    def test_duplicate_id_reports_second_line(self, tmp_path):
        rec = lambda i: json.dumps({"id": i, "labels": ["x"], "split": "dev"})
        lines = [rec("a"), rec("b"), rec("dup"), rec("c"), rec("d"), rec("e"), rec("dup")]
        with pytest.raises(ManifestError) as err:
            read_manifest(self.write(tmp_path, lines))
        assert err.value.line == 7

    def test_multilabel_record(self, tmp_path):
        path = self.write(
            tmp_path,
            [json.dumps({"id": "a", "labels": ["dog", "bark"], "split": "dev"})],
        )
        man = read_manifest(path)
        assert len(man.records[0].labels) == 2

    def test_empty_labels_rejected(self, tmp_path):
        path = self.write(
            tmp_path, [json.dumps({"id": "a", "labels": [], "split": "dev"})]
        )
        with pytest.raises(ManifestError) as err:
            read_manifest(path)
        assert err.value.line == 1

    def test_unknown_split_rejected(self, tmp_path):
        path = self.write(
            tmp_path, [json.dumps({"id": "a", "labels": ["x"], "split": "test"})]
        )
        with pytest.raises(ManifestError):
            read_manifest(path)

    def test_blank_lines_and_comments_ignored(self, tmp_path):
        path = self.write(
            tmp_path,
            [
                "# header comment",
                "",
                json.dumps({"id": "a", "labels": ["x"], "split": "dev"}),
            ],
        )
        assert len(read_manifest(path)) == 1

    def test_negative_fold_rejected(self, tmp_path):
        path = self.write(
            tmp_path,
            [json.dumps({"id": "a", "labels": ["x"], "split": "dev", "fold": -1})],
        )
        with pytest.raises(ManifestError):
            read_manifest(path)

    def test_write_read_roundtrip(self, tmp_path):
        ds = make_dataset(
            np.eye(3, dtype=np.float32),
            ["a", "b", "a"],
            splits=["dev", "dev", "eval"],
            folds=[0, 1, 0],
        )
        path = tmp_path / "m.jsonl"
        write_manifest(ds.manifest, path, header_comment="test header")
        again = read_manifest(path)
        assert again == ds.manifest


class TestBind:
    def test_vocab_sorted_union(self):
        ds = make_dataset(np.eye(3, dtype=np.float32), ["b", "a", "a"])
        assert ds.vocab.classes == ("a", "b")

    def test_count_mismatch(self):
        m = EmbeddingMatrix(np.zeros((3, 2), dtype=np.float32))
        ds = make_dataset(np.zeros((2, 2), dtype=np.float32), ["a", "b"])
        with pytest.raises(BindError):
            bind(m, ds.manifest)

    def test_vocab_indices_stable(self):
        ds1 = make_dataset(np.eye(3, dtype=np.float32), ["b", "a", "c"])
        ds2 = make_dataset(np.eye(3, dtype=np.float32), ["b", "a", "c"])
        assert ds1.vocab.index == ds2.vocab.index

    def test_vocab_order_independent_of_record_order(self):
        """Vocabulary is a pure function of the label set."""
        ds1 = make_dataset(np.eye(3, dtype=np.float32), ["c", "a", "b"])
        ds2 = make_dataset(np.eye(3, dtype=np.float32), ["b", "c", "a"])
        assert ds1.vocab.classes == ds2.vocab.classes

    def test_unsorted_vocab_rejected(self):
        with pytest.raises(DataError):
            ClassVocab(("b", "a"))


class TestSubset:
    def test_identity_on_all_dev(self):
        ds = make_dataset(np.eye(3, dtype=np.float32), ["a", "b", "a"])
        sub = subset(ds, split="dev")
        np.testing.assert_array_equal(sub.matrix.data, ds.matrix.data)
        assert sub.manifest == ds.manifest

    def test_fold_filter(self):
        ds = make_dataset(
            np.eye(5, dtype=np.float32),
            ["a"] * 5,
            folds=[0, 1, 2, 1, 0],
        )
        sub = subset(ds, fold=1)
        assert [r.id for r in sub.manifest.records] == ["r0001", "r0003"]

    def test_vocab_preserved(self):
        ds = make_dataset(np.eye(3, dtype=np.float32), ["a", "b", "c"])
        sub = subset(ds, indices=[1])
        assert sub.vocab.classes == ("a", "b", "c")
        assert sub.vocab.index["c"] == 2

    def test_order_preserved_with_indices(self):
        ds = make_dataset(np.eye(4, dtype=np.float32), ["a"] * 4)
        sub = subset(ds, indices=[3, 0, 2])
        assert [r.id for r in sub.manifest.records] == ["r0000", "r0002", "r0003"]

    def test_out_of_range_index(self):
        ds = make_dataset(np.eye(2, dtype=np.float32), ["a", "b"])
        with pytest.raises(IndexError):
            subset(ds, indices=[5])

    def test_composition_matches_combined(self, rng):
        """Chained subsets equal the single subset with both predicates."""
        for _ in range(20):
            n = int(rng.integers(4, 20))
            splits = [("dev", "eval")[int(rng.integers(0, 2))] for _ in range(n)]
            folds = [int(rng.integers(0, 3)) for _ in range(n)]
            ds = make_dataset(
                rng.standard_normal((n, 3)).astype(np.float32),
                ["a"] * n,
                splits=splits,
                folds=folds,
            )
            chained = subset(subset(ds, split="dev"), fold=1)
            combined = subset(ds, split="dev", fold=1)
            assert chained.manifest == combined.manifest
            np.testing.assert_array_equal(
                chained.matrix.data, combined.matrix.data
            )

    def test_never_grows(self, rng):
        ds = make_dataset(rng.standard_normal((10, 3)).astype(np.float32), ["a"] * 10)
        assert subset(ds, split="eval").n <= ds.n
