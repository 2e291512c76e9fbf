import xml.etree.ElementTree as ET

import numpy as np
import pytest

from qkflow.plotting import bar_chart_svg, summarize

SVG = "{http://www.w3.org/2000/svg}"


def parse(svg):
    return ET.fromstring(svg)


def test_summarize():
    assert summarize([2.0]) == (2.0, 0.0)
    mean, std = summarize([1.0, 2.0, 4.0])
    assert mean == pytest.approx(7 / 3)
    assert std == pytest.approx(np.std([1, 2, 4], ddof=1))


def test_one_group_per_label():
    groups = {"quantum": {"alignment": [0.3, 0.4], "test_accuracy": [0.9]}, "rbf <&>": {"alignment": [0.2]}}
    root = parse(bar_chart_svg(groups, title="t"))
    bar_groups = root.findall(f".//{SVG}g[@class='bar-group']")
    assert [g.get("data-label") for g in bar_groups] == ["quantum", "rbf <&>"]
    bars = bar_groups[0].findall(f"{SVG}rect[@class='bar']")
    assert {b.get("data-metric") for b in bars} == {"alignment", "test_accuracy"}
    assert len(bar_groups[1].findall(f"{SVG}rect[@class='bar']")) == 1
    texts = [t.text for t in root.iter(f"{SVG}text")]
    assert "quantum" in texts and "rbf <&>" in texts


def test_whisker_spans_one_std():
    values = [0.5, 0.7, 0.9]
    root = parse(bar_chart_svg({"a": {"m": values}}))
    bar = root.find(f".//{SVG}rect[@class='bar']")
    assert float(bar.get("data-std")) == pytest.approx(np.std(values, ddof=1))
    assert float(bar.get("data-mean")) == pytest.approx(0.7)
    assert bar.get("data-n") == "3"
    whisker = root.find(f".//{SVG}g[@class='errorbar']/{SVG}line")
    y1, y2 = float(whisker.get("y1")), float(whisker.get("y2"))
    # pixel length of the whisker against the bar's pixels-per-unit
    top = float(bar.get("y"))
    height = float(bar.get("height"))
    px_per_unit = height / 0.7
    assert abs(y1 - y2) == pytest.approx(2 * np.std(values, ddof=1) * px_per_unit, rel=1e-3)
    assert min(y1, y2) < top < max(y1, y2)


def test_single_sample_zero_whisker():
    root = parse(bar_chart_svg({"only": {"alignment": [0.42]}}))
    bar = root.find(f".//{SVG}rect[@class='bar']")
    assert float(bar.get("data-std")) == 0.0
    line = root.find(f".//{SVG}g[@class='errorbar']/{SVG}line")
    assert float(line.get("y1")) == pytest.approx(float(line.get("y2")))


def test_negative_values_render():
    root = parse(bar_chart_svg({"a": {"m": [-0.5, -0.3]}, "b": {"m": [0.2]}}))
    for bar in root.iter(f"{SVG}rect"):
        assert float(bar.get("height", 0)) >= 0


def test_deterministic():
    groups = {"x": {"m": [1.0, 2.0]}}
    assert bar_chart_svg(groups) == bar_chart_svg(groups)
