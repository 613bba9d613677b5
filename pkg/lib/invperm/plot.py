import io
from typing import *

import matplotlib

matplotlib.use("Agg")
import matplotlib.pylab as plt

from .permcore import Permutation
from .utils import write_text

CANVAS = 1000  # svg units (points)
POINT_RADIUS = 2


def permutation_svg(p: Permutation, out: Optional[str] = None) -> str:
    """Square scatter of the points (i, p(i)), origin bottom-left."""
    n = p.n
    plt.rcParams["svg.hashsalt"] = "invperm"
    fig = plt.figure(figsize=(CANVAS / 72, CANVAS / 72), dpi=72)
    ax = fig.add_axes([0, 0, 1, 1])
    ax.set_xlim(0.5, n + 0.5)
    ax.set_ylim(0.5, n + 0.5)
    ax.set_axis_off()
    # marker size is in points^2; diameter 2 * POINT_RADIUS
    ax.scatter(range(1, n + 1), p.values, s=(2 * POINT_RADIUS) ** 2, c="black", linewidths=0)

    buffer = io.StringIO()
    fig.savefig(buffer, format="svg", metadata={"Date": None})
    plt.close(fig)
    return write_text(buffer.getvalue(), out)
