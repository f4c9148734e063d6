import io
import logging
import os
import re
from dataclasses import dataclass
from typing import Dict, List, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from suites import CheckResult  # noqa: E402

# Text stays text and element ids are salted, so equal series give equal bytes
SVG_STYLE = {"svg.fonttype": "none", "svg.hashsalt": "polylab"}
SVG_METADATA = {"Date": None}


@dataclass(frozen=True)
class AxisStyle:
    x_label: str
    y_label: str
    log_x: bool
    log_y: bool


AXES: Dict[str, AxisStyle] = {
    "residual": AxisStyle("r", "|residual|", log_x=False, log_y=True),
    "ratio": AxisStyle("rho", "integral / envelope", log_x=True, log_y=True),
    "branch": AxisStyle("p", "max u", log_x=False, log_y=False),
}


def slugify(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._=-]+", "_", name).strip("_")


def _log_floor(values: np.ndarray) -> np.ndarray:
    """|values| with non-positive entries lifted a decade under the smallest positive one"""
    data = np.abs(values)
    positive = data[data > 0]
    floor = positive.min() / 10 if positive.size else 1e-300
    return np.maximum(data, floor)


class PlotRenderer:
    """Renders check series (residual vs r, ratio vs rho, branch diagrams) as SVG"""

    def __init__(self, figsize: Tuple[float, float] = (6.4, 3.8)):
        self.logger = logging.getLogger(__name__)
        self.figsize = figsize

    def _lines(self, series: Dict) -> List[Dict]:
        """Split a series into one line per group value"""
        groups = series.get("group")
        if groups is None:
            return [{"name": series["label"], "x": series["x"], "y": series["y"]}]
        lines: Dict[float, Dict] = {}
        for x, y, g in zip(series["x"], series["y"], groups):
            line = lines.setdefault(g, {"name": f"xi/rho={g:g}", "x": [], "y": []})
            line["x"].append(x)
            line["y"].append(y)
        return [lines[g] for g in sorted(lines)]

    def figure(self, title: str, series: Dict) -> Figure:
        """Figure for one series; the caller closes it"""
        kind = series["kind"]
        if kind not in AXES:
            raise ValueError(f"Unknown series kind '{kind}', expected one of {', '.join(AXES)}")
        if not series["x"] or len(series["x"]) != len(series["y"]):
            raise ValueError(f"Series for {title} needs matching non-empty x and y")

        axis = AXES[kind]
        fig, ax = plt.subplots(figsize=self.figsize)
        for line in self._lines(series):
            y = np.asarray(line["y"], dtype=float)
            if axis.log_y:
                y = _log_floor(y)
            ax.plot(line["x"], y, marker="o", lw=1.5, label=line["name"])
        if axis.log_x:
            ax.set_xscale("log")
        if axis.log_y:
            ax.set_yscale("log")
        ax.set(xlabel=axis.x_label, ylabel=axis.y_label, title=f"{title} ({series['label']})")
        ax.grid(alpha=0.25, linestyle=":")
        if series.get("group") is not None:
            ax.legend(loc="best", frameon=False)
        fig.tight_layout()
        return fig

    def _save(self, fig: Figure, target) -> None:
        try:
            with plt.rc_context(SVG_STYLE):
                fig.savefig(target, format="svg", metadata=SVG_METADATA)
        finally:
            plt.close(fig)

    def render(self, title: str, series: Dict) -> str:
        buffer = io.StringIO()
        self._save(self.figure(title, series), buffer)
        return buffer.getvalue()

    def write_all(self, results: List[CheckResult], out_dir: str) -> List[str]:
        """One SVG per check that carries a series"""
        plot_dir = os.path.join(out_dir, "plots")
        files_created = []
        for result in results:
            if not result.series:
                continue
            try:
                fig = self.figure(result.name, result.series)
            except Exception as e:
                self.logger.error(f"Error rendering plot for {result.name}: {str(e)}")
                continue
            os.makedirs(plot_dir, exist_ok=True)
            full_path = os.path.join(plot_dir, f"{slugify(result.name)}.svg")
            self._save(fig, full_path)
            files_created.append(full_path)
        self.logger.info(f"Rendered {len(files_created)} plots")
        return files_created
