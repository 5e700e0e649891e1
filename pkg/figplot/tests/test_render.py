import numpy as np
import pytest

from figplot import CsvFormatError, PlotJob, parse_csv, render
from figplot.render import clip_limit


def line_csv(tmp_path, name="fig2.csv", gaps=(7,)):
    lines = ["x,t,value"]
    for t in (-1.0, 0.0, 1.0):
        for i, x in enumerate(np.linspace(-5, 5, 21)):
            if i in gaps:
                lines.append(f"{x:.6e},{t:.6e},")
            else:
                lines.append(f"{x:.6e},{t:.6e},{np.sin(x) + t:.6e}")
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return path


def grid_csv(tmp_path, name="fig5.csv", spike=None):
    lines = ["x,z,value"]
    for z in np.linspace(-2, 2, 9):
        for x in np.linspace(-5, 5, 21):
            v = np.cos(x) * z
            if spike is not None and abs(x) < 0.3 and abs(z) < 0.3:
                v = spike
            lines.append(f"{x:.6e},{z:.6e},{v:.6e}")
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return path


class TestParse:
    def test_line_shape_and_gaps(self, tmp_path):
        parsed = parse_csv(line_csv(tmp_path))
        assert parsed.kind == "line"
        assert parsed.values.shape == (3, 21)
        assert np.isnan(parsed.values[:, 7]).all()
        assert np.isfinite(parsed.values[:, 0]).all()
        # values arrive untouched (up to the fixture's 7-digit formatting):
        # the plot never invents data
        assert parsed.values[0, 0] == pytest.approx(np.sin(-5.0) - 1.0, abs=1e-6)
        assert parsed.values[2, 20] == pytest.approx(np.sin(5.0) + 1.0, abs=1e-6)

    def test_grid_shape(self, tmp_path):
        parsed = parse_csv(grid_csv(tmp_path))
        assert parsed.kind == "grid"
        assert parsed.values.shape == (9, 21)

    def test_bad_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(CsvFormatError):
            parse_csv(p)

    def test_bad_cell_count(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("x,t,value\n1,2\n")
        with pytest.raises(CsvFormatError):
            parse_csv(p)

    def test_non_numeric(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("x,t,value\n1,2,zebra\n")
        with pytest.raises(CsvFormatError):
            parse_csv(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CsvFormatError):
            parse_csv(tmp_path / "nope.csv")


class TestClip:
    def test_quantile_clips_spikes(self, tmp_path):
        parsed = parse_csv(grid_csv(tmp_path, spike=1e6))
        limit = clip_limit(parsed.values, 0.99)
        assert limit < 1e6
        assert limit >= np.nanquantile(np.abs(parsed.values), 0.98)

    def test_all_nan_fallback(self):
        assert clip_limit(np.full((3, 3), np.nan), 0.99) == 1.0


class TestRender:
    def test_line_render_and_determinism(self, tmp_path):
        csv = line_csv(tmp_path)
        out = tmp_path / "fig2.png"
        job = PlotJob(inputs=[csv], figure_id=2, output=out)
        render(job)
        first = out.read_bytes()
        render(job)
        assert out.read_bytes() == first
        assert first[:8] == b"\x89PNG\r\n\x1a\n"

    def test_grid_panels(self, tmp_path):
        csvs = [grid_csv(tmp_path, name=f"fig4_t{k}.csv") for k in range(5)]
        out = tmp_path / "fig4.png"
        render(PlotJob(inputs=csvs, figure_id=4, output=out))
        assert out.exists() and out.stat().st_size > 0

    def test_gaps_do_not_crash(self, tmp_path):
        csv = line_csv(tmp_path, gaps=(3, 4, 12))
        out = tmp_path / "g.png"
        render(PlotJob(inputs=[csv], figure_id=2, output=out))
        assert out.exists()

    def test_mixed_kinds_rejected(self, tmp_path):
        a = line_csv(tmp_path, name="a.csv")
        b = grid_csv(tmp_path, name="b.csv")
        with pytest.raises(CsvFormatError):
            render(PlotJob(inputs=[a, b], figure_id=4, output=tmp_path / "x.png"))


class TestCli:
    def test_roundtrip(self, tmp_path):
        from figplot.cli import main
        csv = grid_csv(tmp_path)
        out = tmp_path / "fig5.png"
        assert main(["5", str(csv), "--out", str(out)]) == 0
        assert out.exists()

    def test_malformed_csv_exit_code(self, tmp_path, capsys):
        from figplot.cli import main
        bad = tmp_path / "bad.csv"
        bad.write_text("nope\n")
        assert main(["2", str(bad), "--out", str(tmp_path / "x.png")]) == 1
        assert "error" in capsys.readouterr().err

    def test_unknown_figure_id(self, tmp_path):
        from figplot.cli import main
        with pytest.raises(SystemExit) as exc:
            main(["9", "whatever.csv", "--out", str(tmp_path / "x.png")])
        assert exc.value.code == 2
