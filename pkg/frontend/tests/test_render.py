"""End-to-end: generate quick bundles through the softimpact CLI, render each.

The renderer only ever sees the CLI's files (CSV + summary.json), matching
how it is used in production.
"""

import shutil
import subprocess

import pytest

from figrender import FIGURE_IDS, FigureError, render

pytestmark = pytest.mark.skipif(
    shutil.which("softimpact") is None, reason="softimpact CLI not installed"
)


@pytest.fixture(scope="session")
def bundles(tmp_path_factory):
    root = tmp_path_factory.mktemp("bundles")
    for bundle_id in FIGURE_IDS:
        subprocess.run(
            ["softimpact", "reproduce", bundle_id, "--quick", "--workers", "2",
             "-o", str(root / bundle_id)],
            check=True,
            capture_output=True,
            text=True,
        )
    return root


@pytest.mark.parametrize("figure_id", FIGURE_IDS)
def test_every_bundle_renders(bundles, tmp_path, figure_id):
    paths = render(figure_id, bundles / figure_id, tmp_path)
    names = {p.suffix for p in paths}
    assert names == {".png", ".svg"}
    for p in paths:
        assert p.stat().st_size > 1000


def test_rendering_is_deterministic(bundles, tmp_path):
    a = render("fig4", bundles / "fig4", tmp_path / "a")
    b = render("fig4", bundles / "fig4", tmp_path / "b")
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()


def test_annotations_show_reference_values(bundles, tmp_path):
    paths = render("fig9", bundles / "fig9", tmp_path)
    svg = next(p for p in paths if p.suffix == ".svg").read_text()
    assert "ref" in svg  # computed values annotated next to the references


def test_missing_input_fails_cleanly(tmp_path):
    (tmp_path / "empty").mkdir()
    with pytest.raises(FigureError, match="missing input file"):
        render("fig4", tmp_path / "empty", tmp_path / "out")


def test_empty_csv_fails_cleanly(tmp_path):
    bundle = tmp_path / "bundle"
    bundle.mkdir()
    (bundle / "overlap.csv").write_text("t,overlap\n")
    with pytest.raises(FigureError, match="no data rows"):
        render("fig4", bundle, tmp_path / "out")


def test_unknown_figure_id(tmp_path):
    with pytest.raises(FigureError, match="unknown figure id"):
        render("fig99", tmp_path, tmp_path)


def test_cli_roundtrip(bundles, tmp_path):
    from figrender.cli import main

    assert main(["fig13", str(bundles / "fig13"), str(tmp_path)]) == 0
    assert (tmp_path / "fig13.png").exists()
    assert main(["fig13", str(tmp_path / "nope"), str(tmp_path)]) == 1
