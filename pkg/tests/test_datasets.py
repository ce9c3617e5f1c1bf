import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from expweibull.datasets import (
    BUNDLED,
    Dataset,
    apply_type2_censoring,
    bundled_path,
    load_ballbearings,
    load_carbon_fibre,
    load_csv,
    rate_to_r,
)
from expweibull.exceptions import DataError, InvalidParameterError


def test_bundled_sizes_and_sources():
    bb, cf = load_ballbearings(), load_carbon_fibre()
    assert bb.n == 23 and cf.n == 100
    assert "Lieblein" in bb.source and "Nichols" in cf.source
    assert min(bb.values) == pytest.approx(17.88) and max(bb.values) == pytest.approx(173.40)
    assert set(BUNDLED) == {"ballbearings", "carbon"}
    assert bundled_path("carbon.csv") == bundled_path("carbon")
    with pytest.raises(DataError):
        bundled_path("nope")


def test_single_column_file(tmp_path):
    values = load_ballbearings().values
    path = tmp_path / "bb.csv"
    path.write_text("\n".join(str(v) for v in values) + "\n")
    data = load_csv(path)
    assert data.n == 23 and data.values == values and data.name == "bb"


def test_header_and_named_column(tmp_path):
    path = tmp_path / "two.csv"
    path.write_text("id;life\n1;2.5\n\n2;0.7\n")
    assert load_csv(path, column="life", delimiter=";").values == (2.5, 0.7)
    assert load_csv(path, column=1, delimiter=";").values == (2.5, 0.7)
    with pytest.raises(DataError, match="not in header"):
        load_csv(path, column="age", delimiter=";")


@pytest.mark.parametrize(
    "body, message",
    [
        ("1.0\n0\n3.0\n", "line 2"),
        ("1.0\n2.0\n-4\n", "line 3"),
        ("x\n1.0\nabc\n", "line 3"),
        ("1.0\nnan\n", "line 2"),
        ("", "no data"),
        ("life\n", "no data"),
    ],
)
def test_bad_files_name_the_line(tmp_path, body, message):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(DataError, match=message):
        load_csv(path)


def test_missing_file_and_short_row(tmp_path):
    with pytest.raises(DataError, match="cannot read"):
        load_csv(tmp_path / "absent.csv")
    path = tmp_path / "short.csv"
    path.write_text("1,2\n3\n")
    with pytest.raises(DataError, match="line 2"):
        load_csv(path, column=1)
    with pytest.raises(InvalidParameterError):
        load_csv(path, column=-1)


def test_dataset_validation():
    with pytest.raises(DataError):
        Dataset("empty", ())
    with pytest.raises(DataError):
        Dataset("neg", (1.0, -1.0))


@pytest.mark.parametrize(
    "n, rate, rounding, r",
    [(23, 0.0, "round", 23), (100, 0.10, "round", 90), (23, 0.10, "round", 21), (23, 0.10, "floor", 20),
     (23, 0.10, "ceil", 21), (23, 0.20, "round", 18), (23, 0.20, "floor", 18), (23, 0.20, "ceil", 19),
     (100, 0.20, "floor", 80), (10, 0.25, "round", 8)],
)
def test_rate_to_r(n, rate, rounding, r):
    assert rate_to_r(n, rate, rounding) == r


def test_rate_to_r_rejects():
    with pytest.raises(InvalidParameterError):
        rate_to_r(10, 1.0)
    with pytest.raises(InvalidParameterError):
        rate_to_r(10, 0.1, "bankers")
    with pytest.raises(DataError):
        rate_to_r(2, 0.9, "floor")


@given(st.integers(1, 500), st.sampled_from(["floor", "round", "ceil"]))
def test_r_nonincreasing_in_rate(n, rounding):
    rates = np.linspace(0, 0.99, 60)
    rs = []
    for c in rates:
        try:
            rs.append(rate_to_r(n, c, rounding))
        except DataError:
            rs.append(0)
    assert all(b <= a for a, b in zip(rs, rs[1:]))


def test_censoring_basics():
    bb = load_ballbearings()
    full = apply_type2_censoring(bb)
    assert full.r == full.n_total == 23 and np.all(np.diff(full.observed) >= 0)
    part = apply_type2_censoring(bb, rate=0.1)
    assert (part.r, part.n_total) == (21, 23)
    assert np.array_equal(part.observed, full.observed[:21])
    with pytest.raises(InvalidParameterError):
        apply_type2_censoring(bb, r=5, rate=0.1)
    for bad in (0, 24, 2.5, True):
        with pytest.raises(DataError):
            apply_type2_censoring(bb, r=bad)
    with pytest.raises(DataError):
        apply_type2_censoring([])


@given(st.lists(st.floats(0.01, 100), min_size=1, max_size=60), st.randoms(use_true_random=False), st.data())
def test_censoring_invariants(values, random, data):
    r = data.draw(st.integers(1, len(values)))
    once = apply_type2_censoring(values, r=r)
    shuffled = list(values)
    random.shuffle(shuffled)
    assert apply_type2_censoring(shuffled, r=r) == once
    # censoring the kept values again at the same r keeps the same failures
    assert np.array_equal(apply_type2_censoring(once.observed, r=r).observed, once.observed)
    assert apply_type2_censoring(values, rate=0.0) == apply_type2_censoring(sorted(values))
