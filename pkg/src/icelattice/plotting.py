"""Matplotlib renderings of domains, configurations and flip activity."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import LineCollection, PolyCollection  # noqa: E402

from .analysis import hexagon_outline  # noqa: E402

# no timestamps or version strings, so identical inputs give identical files
_PNG_META = {"Software": None}


def _face_polygons(domain):
    polys = []
    for f in domain.faces:
        pts = []
        for e in f.edges:
            pts.append(domain.vert_pos[domain.edge_tail[e]])
            pts.append(domain.vert_pos[domain.edge_head[e]])
        pts = np.unique(np.round(np.array(pts), 9), axis=0)
        c = pts.mean(axis=0)
        order = np.argsort(np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0]))
        polys.append(pts[order])
    return polys


def _finish(fig, ax, path, title):
    ax.set_aspect("equal")
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=150, bbox_inches="tight", metadata=_PNG_META)
    plt.close(fig)


def plot_activity(domain, counts, path, title=None):
    """Faces shaded by flip count, darkest = busiest, on a light gray hexagon."""
    counts = np.asarray(counts, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 6))
    hexa = hexagon_outline(domain)
    ax.fill(hexa[:, 0], hexa[:, 1], color="0.85", zorder=0)
    peak = counts.max() if counts.size and counts.max() > 0 else 1.0
    shade = 0.85 * (1.0 - counts / peak)
    colors = [(s, s, s) for s in shade]
    coll = PolyCollection(_face_polygons(domain), facecolors=colors, edgecolors="none")
    ax.add_collection(coll)
    ax.autoscale_view()
    _finish(fig, ax, path, title)


def plot_config(domain, config, path, title=None, highlight=None):
    """Arrows of a configuration; ``highlight`` face ids are filled."""
    fig, ax = plt.subplots(figsize=(6, 6))
    if highlight is not None and len(highlight):
        polys = _face_polygons(domain)
        ax.add_collection(PolyCollection([polys[i] for i in highlight],
                                         facecolors="tab:orange", alpha=0.5))
    t, h = domain.edge_tail, domain.edge_head
    src = np.where(config.bits, t, h)
    dst = np.where(config.bits, h, t)
    p, q = domain.vert_pos[src], domain.vert_pos[dst]
    colors = np.where(domain.edge_boundary, "tab:red", "0.2")
    ax.add_collection(LineCollection(np.stack([p, q], axis=1), colors=colors, linewidths=0.6))
    mid = (p + q) / 2
    v = (q - p) * 0.25
    ax.quiver(mid[:, 0] - v[:, 0] / 2, mid[:, 1] - v[:, 1] / 2, v[:, 0], v[:, 1],
              angles="xy", scale_units="xy", scale=1, width=0.003, color=list(colors))
    ax.autoscale_view()
    _finish(fig, ax, path, title)


def plot_profile(profile, sides, path, title=None):
    """Boundary height against loop position, with side breaks marked."""
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(np.arange(len(profile)), profile, lw=1)
    for b in np.flatnonzero(np.diff(sides)) + 1:
        ax.axvline(b, color="0.7", lw=0.5)
    ax.set_xlabel("boundary position")
    ax.set_ylabel("height")
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=150, bbox_inches="tight", metadata=_PNG_META)
    plt.close(fig)


def plot_trend(xs, series: dict, path, xlabel="", ylabel="", title=None):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, ys in series.items():
        ax.plot(xs, ys, marker="o", lw=1, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(frameon=False)
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=150, bbox_inches="tight", metadata=_PNG_META)
    plt.close(fig)
