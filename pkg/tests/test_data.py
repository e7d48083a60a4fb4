import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdwce.data import (
    LIMUC_PROPORTIONS,
    CsvParseError,
    Dataset,
    DatasetError,
    SplitSpec,
    StratificationError,
    SyntheticParams,
    class_centers,
    class_counts_for,
    export_csv,
    generate_synthetic,
    largest_remainder,
    load_csv,
    split,
)


def test_default_counts_n1000():
    ds = generate_synthetic(SyntheticParams(n_samples=1000), seed=0)
    assert ds.class_counts().tolist() == [541, 271, 111, 77]


@settings(max_examples=100, deadline=None)
@given(st.integers(4, 5000), st.lists(st.floats(0.01, 1.0), min_size=2, max_size=7))
def test_counts_sum_to_n(n, weights):
    props = np.array(weights) / sum(weights)
    if n < len(props):
        return
    counts = class_counts_for(n, props)
    assert counts.sum() == n
    assert counts.min() >= 1


def test_largest_remainder_examples():
    assert largest_remainder(10, (1 / 3, 1 / 3, 1 / 3)).tolist() == [4, 3, 3]
    assert largest_remainder(7, (0.5, 0.5)).tolist() == [4, 3]


def test_noise_free_is_nearest_center_separable():
    ds = generate_synthetic(SyntheticParams(n_samples=400, noise_sigma=0.0), seed=4)
    centers = class_centers(ds)
    np.testing.assert_allclose(ds.X, centers[ds.y], atol=1e-12)
    d = np.linalg.norm(ds.X[:, None, :] - centers[None, :, :], axis=2)
    assert np.mean(np.argmin(d, axis=1) == ds.y) == 1.0


def test_synthetic_deterministic():
    a = generate_synthetic(SyntheticParams(n_samples=300), seed=7)
    b = generate_synthetic(SyntheticParams(n_samples=300), seed=7)
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.y, b.y)
    c = generate_synthetic(SyntheticParams(n_samples=300), seed=8)
    assert not np.array_equal(a.X, c.X)


def test_center_distances_proportional():
    ds = generate_synthetic(SyntheticParams(n_classes=6, class_proportions=[1 / 6] * 6, class_center_spacing=1.7), 1)
    centers = class_centers(ds)
    for j in range(6):
        for k in range(6):
            assert np.linalg.norm(centers[j] - centers[k]) == pytest.approx(1.7 * abs(j - k), abs=1e-12)


def test_jitter_moves_along_direction_only():
    p = SyntheticParams(n_samples=200, noise_sigma=0.0, overlap_jitter=0.4)
    ds = generate_synthetic(p, seed=3)
    u = np.asarray(ds.provenance["direction"])
    resid = ds.X - class_centers(ds)[ds.y]
    along = resid @ u
    np.testing.assert_allclose(resid, np.outer(along, u), atol=1e-12)
    assert np.abs(along).max() <= 0.4 + 1e-12


def test_synthetic_errors():
    with pytest.raises(DatasetError):
        generate_synthetic(SyntheticParams(n_samples=3), seed=0)
    with pytest.raises(DatasetError):
        SyntheticParams(class_proportions=(0.5, 0.5, 0.1, -0.1))
    with pytest.raises(DatasetError):
        SyntheticParams(class_proportions=(0.5, 0.5))
    assert SyntheticParams().class_proportions == LIMUC_PROPORTIONS


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_load_csv_fixture(tmp_path):
    ds = load_csv(_write(tmp_path, "a,label,b\n1.5,0,2\n-1,2,0.25\n3,1,4\n"))
    assert len(ds) == 3
    assert ds.y.tolist() == [0, 2, 1]
    np.testing.assert_array_equal(ds.X, [[1.5, 2], [-1, 0.25], [3, 4]])
    assert ds.n_classes == 3


def test_load_csv_label_out_of_range(tmp_path):
    with pytest.raises(DatasetError, match="out of range"):
        load_csv(_write(tmp_path, "x,label\n0,0\n1,7\n"), n_classes=4)


def test_load_csv_header_only(tmp_path):
    with pytest.raises(DatasetError, match="no data rows"):
        load_csv(_write(tmp_path, "x,label\n"))


def test_load_csv_parse_error_names_row_and_column(tmp_path):
    with pytest.raises(CsvParseError, match=r"row 3, column 'x'"):
        load_csv(_write(tmp_path, "x,label\n0,0\nabc,1\n"))


def test_load_csv_missing_label_column(tmp_path):
    with pytest.raises(DatasetError, match="missing label column"):
        load_csv(_write(tmp_path, "x,y\n0,0\n"))


def test_load_csv_missing_class(tmp_path):
    with pytest.raises(DatasetError, match="without samples"):
        load_csv(_write(tmp_path, "x,label\n0,0\n1,2\n"))


def test_export_roundtrip(tmp_path):
    ds = generate_synthetic(SyntheticParams(n_samples=60, input_dim=3), seed=2)
    path = tmp_path / "out.csv"
    export_csv(ds, path)
    back = load_csv(path, n_classes=4)
    np.testing.assert_array_equal(back.X, ds.X)
    np.testing.assert_array_equal(back.y, ds.y)


def test_stratified_train_counts():
    ds = generate_synthetic(SyntheticParams(n_samples=1000), seed=0)
    tr, va, te = split(ds, SplitSpec((0.8, 0.1, 0.1), True, 0))
    expected = [round(0.8 * c) for c in (541, 271, 111, 77)]
    assert expected == [433, 217, 89, 62]
    for got, want in zip(tr.class_counts(), expected):
        assert abs(int(got) - want) <= 1
    assert len(tr) + len(va) + len(te) == 1000


def test_split_all_train():
    ds = generate_synthetic(SyntheticParams(n_samples=100), seed=0)
    tr, va, te = split(ds, SplitSpec((1.0, 0.0, 0.0)))
    assert len(tr) == 100 and len(va) == 0 and len(te) == 0


@pytest.mark.parametrize("stratified", [True, False])
def test_split_partition_and_determinism(stratified):
    ds = generate_synthetic(SyntheticParams(n_samples=357), seed=5)
    spec = SplitSpec((0.6, 0.25, 0.15), stratified, 9)
    parts = split(ds, spec)
    idx = np.concatenate([p.indices for p in parts])
    assert sorted(idx.tolist()) == list(range(357))
    again = split(ds, spec)
    for a, b in zip(parts, again):
        np.testing.assert_array_equal(a.indices, b.indices)
    other = split(ds, SplitSpec((0.6, 0.25, 0.15), stratified, 10))
    assert not np.array_equal(parts[0].indices, other[0].indices)


def test_stratification_error():
    ds = Dataset(np.zeros((6, 1)), [0, 0, 0, 0, 1, 1], 2)
    with pytest.raises(StratificationError):
        split(ds, SplitSpec((0.5, 0.25, 0.25)))


def test_bad_fractions():
    with pytest.raises(DatasetError):
        SplitSpec((0.5, 0.5, 0.5))
    with pytest.raises(DatasetError):
        SplitSpec((1.2, -0.1, -0.1))
