"""Figure rendering writes actual images."""

import numpy as np

from sparsescope.cluster import ClusterLabels
from sparsescope.figures import comparison_figure, missingness_figure, scene_figure
from sparsescope.layout.scene import SceneParams, assemble_scene

PNG_MAGIC = b"\x89PNG"


def is_png(path):
    with open(path, "rb") as fh:
        return fh.read(4) == PNG_MAGIC


def test_comparison_figure(tmp_path):
    grid = {
        "mean": {"booster": 41.0, "knn": 48.5},
        "cami": {"booster": 33.2, "knn": 40.1},
    }
    out = tmp_path / "cmp.png"
    comparison_figure(grid, out, target="gap")
    assert is_png(out) and out.stat().st_size > 1000


def test_missingness_figure(tmp_path):
    stats = {
        "colFraction": {"a": 0.1, "b": 0.4, "c": 0.0},
        "rowFraction": {f"r{i}": i / 10 for i in range(10)},
    }
    out = tmp_path / "miss.png"
    missingness_figure(stats, out)
    assert is_png(out) and out.stat().st_size > 1000


def test_scene_figure(tmp_path):
    rng = np.random.default_rng(3)
    pts = np.vstack([rng.normal(0, 1, (8, 2)), rng.normal(8, 1, (8, 2))])
    labels = ClusterLabels(labels=np.repeat([0, 1], 8), n_clusters=2, sizes=(8, 8))
    scene = assemble_scene(pts, labels, params=SceneParams(glyph_radius=0.01))
    out = tmp_path / "scene.png"
    scene_figure(scene, out)
    assert is_png(out) and out.stat().st_size > 5000
