import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import pytest

from src.errors import RenderError
from src.visualization.plots import build_figure, build_histogram_figure, render_svg, series_frame
from src.visualization.statistics import AggregateSeries


def series(values, std=None, label=""):
    values = np.asarray(values, dtype=float)
    return AggregateSeries(
        iterations=np.arange(1, len(values) + 1),
        mean=values,
        std=np.zeros_like(values) if std is None else np.asarray(std, dtype=float),
        seeds=1 if std is None else 3,
        label=label,
    )


def test_flat_single_seed_curve_has_one_line_and_no_band(tmp_path):
    path = render_svg([series([2.0] * 5, label="flat")], tmp_path / "flat.svg")
    text = path.read_text()
    assert 'id="series-0"' in text
    assert 'id="series-1"' not in text
    assert 'id="band-0"' not in text


def test_spread_draws_a_band(tmp_path):
    path = render_svg([series([1.0, 2.0, 3.0], std=[0.5, 0.5, 0.0], label="spread")], tmp_path / "band.svg")
    assert 'id="band-0"' in path.read_text()


def test_svg_output_is_byte_identical(tmp_path):
    data = [series([1.0, 3.0, 2.0], std=[0.1, 0.2, 0.3], label="a"), series([0.0, 1.0, 4.0], label="b")]
    first = render_svg(data, tmp_path / "one.svg", title="Same").read_bytes()
    second = render_svg(data, tmp_path / "two.svg", title="Same").read_bytes()
    assert first == second


def test_two_series_two_legend_entries():
    fig = build_figure([series([1.0, 2.0], label="pong"), series([2.0, 1.0], label="breakout")])
    try:
        labels = [t.get_text() for t in fig.axes[0].get_legend().get_texts()]
    finally:
        plt.close(fig)
    assert labels == ["pong", "breakout"]


@pytest.mark.parametrize("data", [[], [series([])]])
def test_empty_series_rejected(data):
    with pytest.raises(RenderError):
        build_figure(data)


def test_series_frame_is_long_format():
    frame = series_frame([series([1.0, 2.0], label="a"), series([3.0], label="b")])
    assert list(frame.columns) == ["label", "iteration", "mean", "std", "seeds"]
    assert list(frame["label"]) == ["a", "a", "b"]


def test_histogram_figure_panels(tmp_path):
    frame = pd.DataFrame(
        {"bin_left": [0.0, 0.5], "bin_right": [0.5, 1.0], "count_amn": [10, 2], "count_expert": [1, 5]}
    )
    fig = build_histogram_figure([("seed 0", frame), ("seed 1", frame)])
    try:
        assert len(fig.axes) == 2
    finally:
        plt.close(fig)
    with pytest.raises(RenderError):
        build_histogram_figure([])
