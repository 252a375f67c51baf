import xml.etree.ElementTree as ET

import numpy as np
import pytest

from seba import io as sio
from seba import svg

NS = "{http://www.w3.org/2000/svg}"


def parse(path):
    root = ET.parse(path).getroot()
    assert root.tag == NS + "svg"
    return root


def count(root, tag):
    return len(root.findall(f".//{NS}{tag}"))


def test_figure_renders_valid_svg(tmp_path):
    fig = svg.Figure((0, 1), (0, 1), title="a < b & c")
    fig.line([0, 1], [0, 1])
    fig.markers([0.5], [0.5], shape="diamond")
    fig.rect(0.1, 0.1, 0.2, 0.2, "#ff0000")
    fig.legend([("one", "#000000")])
    fig.save(tmp_path / "f.svg")
    root = parse(tmp_path / "f.svg")
    assert count(root, "polyline") >= 1
    assert "a &lt; b &amp; c" in (tmp_path / "f.svg").read_text()


def test_spectrum_plot(tmp_path):
    sio.write_csv_table(tmp_path / "s.csv", ["r", "value"], [(r, -1.0 - 0.1 * r) for r in range(2, 9)])
    sio.write_csv_table(tmp_path / "d.csv", ["r", "drop"], [(5, 0.3), (3, 0.2), (7, 0.1)])
    svg.spectrum_plot(tmp_path / "s.csv", tmp_path / "d.csv", tmp_path / "s.svg")
    text = (tmp_path / "s.svg").read_text()
    parse(tmp_path / "s.svg")
    assert "r=5" in text and "r=3" in text and "r=7" not in text


def test_scan_plots(tmp_path):
    rows = [(r, k, 0.01 * max(0, k - 2) * r) for r in range(2, 5) for k in range(1, r + 1)]
    sio.write_csv_table(tmp_path / "scan.csv", ["r", "k", "minval"], rows)
    sio.write_csv_table(tmp_path / "rmin.csv", ["k", "r_min"], [(1, 2), (2, 2), (3, 3), (4, 4)])
    sio.write_csv_table(tmp_path / "picks.csv", ["k", "r"], [(1, 2), (3, 3), (4, 4)])
    svg.min_value_plot(tmp_path / "scan.csv", tmp_path / "rmin.csv", tmp_path / "m.svg")
    svg.rmin_plot(tmp_path / "rmin.csv", tmp_path / "r.svg", tmp_path / "picks.csv")
    assert count(parse(tmp_path / "m.svg"), "polyline") >= 4
    parse(tmp_path / "r.svg")


def test_heatmap(tmp_path):
    vals = np.linspace(0, 1, 12)
    sio.write_csv_table(tmp_path / "v.csv", ["i", "value"], list(zip(range(12), vals)))
    svg.heatmap_plot(tmp_path / "v.csv", tmp_path / "h.svg", 4, 3)
    # zero cells are left blank
    root = parse(tmp_path / "h.svg")
    assert count(root, "rect") >= 11
    with pytest.raises(ValueError):
        svg.heatmap_plot(tmp_path / "v.csv", tmp_path / "h.svg", 5, 3)


def test_cheeger_plot(tmp_path):
    sio.write_csv_table(tmp_path / "c.csv", ["tau", "h"], [(0.1, 4.0), (0.2, 3.6), (0.3, float("nan"))])
    th = np.linspace(0, 2 * np.pi, 9)
    rows = [("contour", 0, np.cos(a), np.sin(a)) for a in th]
    rows += [("image", 0, 1.1 * np.cos(a), np.sin(a)) for a in th]
    sio.write_csv_table(tmp_path / "k.csv", ["which", "line", "x", "y"], rows)
    svg.cheeger_plot(tmp_path / "c.csv", tmp_path / "k.csv", tmp_path / "c.svg",
                     (-2, 2), (-2, 2), tau=0.2)
    root = parse(tmp_path / "c.svg")
    ids = [e.get("id") for e in root.iter() if e.get("id")]
    assert len(ids) == len(set(ids))
    assert count(root, "polyline") >= 3


def test_ticks_have_no_signed_zero():
    ticks = svg._ticks(-0.3, 0.9)
    assert 0.0 in ticks
    assert all(svg._label(t) != "-0" for t in ticks)
    assert svg._label(-0.0) == "0"
