import numpy as np
import pytest

from randne.errors import IOFailure
from randne.mtx import read_matrix, write_matrix


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    a = rng.standard_normal((7, 3)) * np.logspace(-200, 200, 21).reshape(7, 3)
    path = tmp_path / "a.mtx"
    write_matrix(path, a)
    back = read_matrix(path)
    assert back.shape == a.shape
    assert np.array_equal(back, a)  # repr round trip is exact, not approximate


def test_round_trip_vector(tmp_path):
    v = np.array([1.0, -2.5, 3e-300, 7e300])
    path = tmp_path / "v.mtx"
    write_matrix(path, v)
    back = read_matrix(path)
    assert back.shape == (4, 1)
    assert np.array_equal(back.ravel(), v)


def test_file_layout_is_column_major(tmp_path):
    a = np.array([[1.0, 3.0], [2.0, 4.0]])
    path = tmp_path / "a.mtx"
    write_matrix(path, a)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    assert lines[0] == "%%MatrixMarket matrix array real general"
    assert lines[1].split() == ["2", "2"]
    assert [float(x) for x in lines[2:]] == [1.0, 2.0, 3.0, 4.0]


def test_header_case_insensitive(tmp_path):
    path = tmp_path / "a.mtx"
    path.write_text(
        "%%matrixmarket MATRIX Array Real General\n2 1\n1.5\n-2.5\n"
    )
    back = read_matrix(path)
    assert np.array_equal(back, np.array([[1.5], [-2.5]]))


def test_comments_skipped(tmp_path):
    path = tmp_path / "a.mtx"
    path.write_text(
        "%%MatrixMarket matrix array real general\n"
        "% a comment line\n"
        "1 1\n"
        "42.0\n"
    )
    assert read_matrix(path)[0, 0] == 42.0


def test_missing_file_raises_io_failure(tmp_path):
    with pytest.raises(IOFailure):
        read_matrix(tmp_path / "nope.mtx")


def test_wrong_header_raises(tmp_path):
    path = tmp_path / "a.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n1 1 1\n")
    with pytest.raises(IOFailure):
        read_matrix(path)


def test_wrong_entry_count_raises(tmp_path):
    path = tmp_path / "a.mtx"
    path.write_text("%%MatrixMarket matrix array real general\n2 2\n1.0\n2.0\n")
    with pytest.raises(IOFailure):
        read_matrix(path)


def test_non_numeric_entry_raises(tmp_path):
    path = tmp_path / "a.mtx"
    path.write_text("%%MatrixMarket matrix array real general\n1 1\nfoo\n")
    with pytest.raises(IOFailure):
        read_matrix(path)


def test_non_finite_entry_raises(tmp_path):
    path = tmp_path / "a.mtx"
    path.write_text("%%MatrixMarket matrix array real general\n1 1\nnan\n")
    with pytest.raises(IOFailure):
        read_matrix(path)
