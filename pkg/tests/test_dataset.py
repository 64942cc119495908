from pathlib import Path

import numpy as np
import pytest

from fishscan.dataset import DatasetManifest, ManifestEntry, stratified_split
from fishscan.errors import BadParameter, DataError, EmptyClass, IoFailure, MissingLabelDir


def dummy_tree(root: Path, fresh: int, infected: int) -> Path:
    for label, n in (("fresh", fresh), ("infected", infected)):
        (root / label).mkdir(parents=True)
        for i in range(n):
            (root / label / f"img{i:03d}.png").write_bytes(b"")
    (root / "fresh" / "notes.txt").write_text("not an image")
    return root


def test_split_counts_follow_ratio(tmp_path):
    m = stratified_split(dummy_tree(tmp_path, 83, 183), ratio=0.868, seed=42)
    c = m.counts()
    # round(0.868 * 83) = 72 and round(0.868 * 183) = 159
    assert (c[("fresh", "train")], c[("fresh", "test")]) == (72, 11)
    assert (c[("infected", "train")], c[("infected", "test")]) == (159, 24)
    assert len(m.entries) == 266


def test_split_test_counts_override(tmp_path):
    m = stratified_split(dummy_tree(tmp_path, 83, 183), seed=1,
                         test_counts={"fresh": 15, "infected": 20})
    c = m.counts()
    assert (c[("fresh", "train")], c[("infected", "train")]) == (68, 163)
    assert (c[("fresh", "test")], c[("infected", "test")]) == (15, 20)


def test_split_deterministic(tmp_path):
    root = dummy_tree(tmp_path, 12, 17)
    assert stratified_split(root, seed=9).to_csv() == stratified_split(root, seed=9).to_csv()
    assert stratified_split(root, seed=9).to_csv() != stratified_split(root, seed=10).to_csv()


def test_split_ignores_non_images(tmp_path):
    m = stratified_split(dummy_tree(tmp_path, 5, 5), ratio=0.6)
    assert all(e.path.endswith(".png") for e in m.entries)


def test_ratio_one_leaves_empty_test(tmp_path):
    with pytest.raises(EmptyClass):
        stratified_split(dummy_tree(tmp_path, 8, 8), ratio=1.0)


@pytest.mark.parametrize("ratio", [0.0, -0.1, 1.5])
def test_ratio_out_of_range(tmp_path, ratio):
    with pytest.raises(BadParameter):
        stratified_split(dummy_tree(tmp_path, 8, 8), ratio=ratio)


def test_missing_label_dir(tmp_path):
    (tmp_path / "fresh").mkdir()
    (tmp_path / "fresh" / "a.png").write_bytes(b"")
    with pytest.raises(MissingLabelDir):
        stratified_split(tmp_path)


def test_empty_class(tmp_path):
    dummy_tree(tmp_path, 4, 0)
    with pytest.raises(EmptyClass):
        stratified_split(tmp_path)


def test_bad_test_counts_key(tmp_path):
    with pytest.raises(BadParameter):
        stratified_split(dummy_tree(tmp_path, 4, 4), test_counts={"healthy": 1})


def test_manifest_round_trip(tmp_path):
    m = stratified_split(dummy_tree(tmp_path / "imgs", 6, 7), seed=3)
    path = tmp_path / "manifest.csv"
    m.write(path)
    text = path.read_text()
    assert text.splitlines()[0] == "path,label,split"
    again = DatasetManifest.read(path)
    assert again.entries == m.entries
    assert again.root == tmp_path
    assert again.to_csv() == text


def test_manifest_resolution(tmp_path):
    m = DatasetManifest([ManifestEntry("fresh/a.png", "fresh", "train"),
                         ManifestEntry(str(tmp_path / "b.png"), "infected", "test")], root=tmp_path / "r")
    assert m.resolve(m.entries[0]) == tmp_path / "r" / "fresh" / "a.png"
    assert m.resolve(m.entries[1]) == tmp_path / "b.png"
    assert [e.path for e in m.split("test")] == [str(tmp_path / "b.png")]


@pytest.mark.parametrize("entries", [
    [ManifestEntry("a.png", "healthy", "train")],
    [ManifestEntry("a.png", "fresh", "validate")],
    [ManifestEntry("a.png", "fresh", "train"), ManifestEntry("a.png", "infected", "test")],
])
def test_manifest_validation(entries):
    with pytest.raises(DataError):
        DatasetManifest(entries)


def test_manifest_bad_header(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("file,class\nx.png,fresh\n")
    with pytest.raises(DataError):
        DatasetManifest.read(path)


def test_manifest_missing_file(tmp_path):
    with pytest.raises(IoFailure):
        DatasetManifest.read(tmp_path / "absent.csv")


def test_split_order_is_seeded_shuffle(tmp_path):
    m = stratified_split(dummy_tree(tmp_path, 30, 30), seed=5)
    names = [e.path for e in m.entries if e.label == "fresh"]
    assert names != sorted(names)
    assert sorted(names) == sorted(f"fresh/img{i:03d}.png" for i in range(30))
    assert np.all([e.split == "train" for e in m.entries[:26]])
