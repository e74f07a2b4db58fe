import numpy as np
import pytest

from funkmean import FunctionalDataset, read_curves, write_long, write_wide
from funkmean.errors import ParseError


def write(tmp_path, text, name="in.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_wide_layout(tmp_path):
    path = write(tmp_path, "#grid,0,0.5,1\nctrl,a,1,2,3\ncase,x,0,0,0\nctrl,b,4,5,6\n")
    table = read_curves(path)
    assert table.layout == "wide"
    assert table.data.labels == ["ctrl", "case"]
    assert table.group_index == {"ctrl": 0, "case": 1}
    assert table.ids == [["a", "b"], ["x"]]
    np.testing.assert_array_equal(table.data.groups[0][1].values, [4, 5, 6])
    np.testing.assert_array_equal(table.data.groups[0][1].times, [0, 0.5, 1])


def test_long_layout_with_own_grids(tmp_path):
    rows = ["group,id,time,value", "b,1,0,1", "b,1,1,2", "a,1,0,0", "a,1,0.3,1", "a,1,1,0", "b,2,0,5", "b,2,1,6"]
    table = read_curves(write(tmp_path, "\n".join(rows) + "\n"))
    assert table.layout == "long" and table.data.labels == ["b", "a"]
    assert table.data.sizes == [2, 1]
    np.testing.assert_array_equal(table.data.groups[1][0].times, [0, 0.3, 1])


def test_wide_and_long_round_trip_agree(tmp_path, rng):
    t = np.linspace(0, 1, 7)
    data = FunctionalDataset.from_arrays(t, [rng.standard_normal((3, 7)), rng.standard_normal((2, 7))], labels=["g1", "g2"])
    wide = read_curves(write_wide(data, tmp_path / "w.csv"))
    long = read_curves(write_long(data, tmp_path / "l.csv"))
    assert wide.data.labels == long.data.labels == ["g1", "g2"]
    assert wide.ids == long.ids
    for gw, gl, g0 in zip(wide.data.groups, long.data.groups, data.groups):
        for cw, cl, c0 in zip(gw, gl, g0):
            assert np.array_equal(cw.times, cl.times) and np.array_equal(cw.values, cl.values)
            assert np.array_equal(cw.values, c0.values)


@pytest.mark.parametrize(
    "text, line",
    [
        ("#grid,0,1\na,1,1,2\nb,1,1,x\n", 3),
        ("#grid,0,1\na,1,1,2\nb,1,1\n", 3),
        ("#grid,0,0.5,0.5\na,1,1,2,3\n", 1),
        ("#grid,0,1\na,1,1,2\na,1,3,4\nb,1,0,0\n", 3),
        ("#grid,0,1\na,1,1,inf\nb,1,0,0\n", 2),
        ("group,id,time,value\na,1,0,1\na,1,0,2\n", 3),
        ("group,id,time,value\na,1,0,1\na,1,1\n", 3),
        ("time,value\n0,1\n", 1),
    ],
)
def test_parse_errors_carry_line_numbers(tmp_path, text, line):
    with pytest.raises(ParseError) as exc:
        read_curves(write(tmp_path, text))
    assert exc.value.line == line
    assert str(exc.value).startswith(f"line {line}:")


def test_single_group_and_empty_file(tmp_path):
    with pytest.raises(ParseError, match="at least 2"):
        read_curves(write(tmp_path, "#grid,0,1\na,1,1,2\na,2,3,4\n"))
    with pytest.raises(ParseError, match="empty"):
        read_curves(write(tmp_path, "\n\n", name="e.csv"))


def test_long_single_observation_curve(tmp_path):
    with pytest.raises(ParseError) as exc:
        read_curves(write(tmp_path, "group,id,time,value\na,1,0,1\na,1,1,1\nb,7,0,3\n"))
    assert exc.value.line == 4
