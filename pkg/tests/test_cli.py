"""Command-line behavior: presets, defaults, exit codes, artifacts on disk."""

import csv
from pathlib import Path

import numpy as np
import pytest

from neuralcanvas import ImageBuffer, load_image, save_image
from neuralcanvas.cli import (
    CONTENT_PRESETS,
    DEFAULT_WEIGHTS,
    STYLE_PRESETS,
    build_parser,
    main,
)

FIXTURE = str(Path(__file__).parent / "fixtures" / "mini_4_8_8.ncw")


@pytest.fixture()
def photo(tmp_path):
    rng = np.random.default_rng(41)
    path = tmp_path / "photo.png"
    save_image(ImageBuffer(rng.integers(0, 256, size=(24, 16, 3), dtype=np.uint8)), str(path))
    return str(path)


@pytest.fixture()
def artwork(tmp_path):
    rng = np.random.default_rng(42)
    path = tmp_path / "art.png"
    save_image(ImageBuffer(rng.integers(0, 256, size=(10, 30, 3), dtype=np.uint8)), str(path))
    return str(path)


class TestPresetTables:
    def test_content_presets_are_the_first_conv_of_each_block(self):
        expected = {
            "content-a": ("conv1_1",),
            "content-b": ("conv2_1",),
            "content-c": ("conv3_1",),
            "content-d": ("conv4_1",),
            "content-e": ("conv5_1",),
        }
        assert CONTENT_PRESETS == expected

    def test_style_presets_nest_cumulatively(self):
        names = sorted(STYLE_PRESETS)
        assert names == ["style-a", "style-b", "style-c", "style-d", "style-e"]
        for shallower, deeper in zip(names, names[1:]):
            a, b = STYLE_PRESETS[shallower], STYLE_PRESETS[deeper]
            assert set(a) < set(b)
            assert b[: len(a)] == a
        assert STYLE_PRESETS["style-e"] == (
            "conv1_1", "conv2_1", "conv3_1", "conv4_1", "conv5_1",
        )

    def test_every_preset_layer_count_matches_its_rank(self):
        for i, name in enumerate(sorted(STYLE_PRESETS), start=1):
            assert len(STYLE_PRESETS[name]) == i


class TestParserDefaults:
    def test_transfer_defaults(self):
        args = build_parser().parse_args(["transfer", "c.png", "s.png"])
        assert args.content_layer == "conv4_2"
        assert args.style_layers == STYLE_PRESETS["style-e"]
        assert args.ratio == 1e-3
        assert args.pooling == "average"
        assert args.size == 512
        assert args.method == "adaptive-moments"
        assert args.init == "white-noise"
        assert args.step_size == 10.0
        assert args.iters == 500
        assert args.seed == 0
        assert args.rel_tol == 0.0
        assert args.trace is None
        assert args.weights is None  # resolved later from env or DEFAULT_WEIGHTS

    def test_reconstruct_defaults(self):
        rc = build_parser().parse_args(["reconstruct-content", "c.png"])
        assert rc.layer == "conv1_1"
        rs = build_parser().parse_args(["reconstruct-style", "s.png"])
        assert rs.style_layers == STYLE_PRESETS["style-e"]

    def test_content_flag_accepts_raw_layer_names(self):
        args = build_parser().parse_args(
            ["reconstruct-content", "c.png", "--preset", "conv3_2"]
        )
        assert args.layer == "conv3_2"

    def test_default_weights_constant(self):
        assert DEFAULT_WEIGHTS == "vgg19.ncw"


class TestReconstructContent:
    def test_writes_png_and_trace(self, photo, tmp_path):
        out = tmp_path / "out.png"
        trace = tmp_path / "trace.csv"
        code = main([
            "reconstruct-content", photo,
            "--weights", FIXTURE, "--preset", "content-a",
            "--size", "16", "--iters", "4",
            "--output", str(out), "--trace", str(trace),
        ])
        assert code == 0
        assert out.exists()
        buf = load_image(str(out))
        assert (buf.height, buf.width) == (16, 11)  # 24x16 scaled to long edge 16
        with open(trace, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["iter", "content_loss", "style_loss", "total", "grad_max_norm"]
        assert len(rows) == 1 + 4

    def test_size_flag_sets_long_edge(self, photo, tmp_path):
        out = tmp_path / "r12.png"
        code = main([
            "reconstruct-content", photo, "--weights", FIXTURE,
            "--size", "12", "--iters", "1", "--output", str(out),
        ])
        assert code == 0
        buf = load_image(str(out))
        assert (buf.height, buf.width) == (12, 8)

    def test_content_image_init_starts_at_zero_loss(self, photo, tmp_path):
        trace = tmp_path / "t.csv"
        code = main([
            "reconstruct-content", photo, "--weights", FIXTURE,
            "--size", "16", "--iters", "2", "--init", "content-image",
            "--output", str(tmp_path / "o.png"), "--trace", str(trace),
        ])
        assert code == 0
        with open(trace, newline="") as fh:
            first = list(csv.DictReader(fh))[0]
        assert float(first["content_loss"]) == 0.0


class TestReconstructStyle:
    def test_runs_on_available_layers(self, artwork, tmp_path):
        out = tmp_path / "style.png"
        code = main([
            "reconstruct-style", artwork, "--weights", FIXTURE,
            "--preset", "style-c", "--size", "16", "--iters", "4",
            "--output", str(out),
        ])
        assert code == 0
        assert out.exists()

    def test_trace_has_zero_content_loss(self, artwork, tmp_path):
        trace = tmp_path / "t.csv"
        code = main([
            "reconstruct-style", artwork, "--weights", FIXTURE,
            "--preset", "style-a", "--size", "16", "--iters", "3",
            "--output", str(tmp_path / "o.png"), "--trace", str(trace),
        ])
        assert code == 0
        with open(trace, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 3
        for row in rows:
            assert float(row["content_loss"]) == 0.0
            assert float(row["total"]) == float(row["style_loss"])


class TestTransfer:
    def test_combines_and_reports_both_terms(self, photo, artwork, tmp_path):
        out = tmp_path / "mix.png"
        trace = tmp_path / "t.csv"
        code = main([
            "transfer", photo, artwork, "--weights", FIXTURE,
            "--content-layer", "conv2_1", "--style-preset", "style-b",
            "--ratio", "0.01", "--size", "16", "--iters", "4",
            "--output", str(out), "--trace", str(trace),
        ])
        assert code == 0
        assert out.exists()
        with open(trace, newline="") as fh:
            rows = list(csv.DictReader(fh))
        for row in rows:
            content = float(row["content_loss"])
            style = float(row["style_loss"])
            total = float(row["total"])
            assert content > 0
            assert style > 0
            assert total == pytest.approx(0.01 * content + style, rel=1e-12)

    def test_style_image_resized_to_content_dims(self, photo, artwork, tmp_path):
        # style source is 10x30; output must follow the content image's aspect
        out = tmp_path / "mix.png"
        code = main([
            "transfer", photo, artwork, "--weights", FIXTURE,
            "--content-layer", "conv1_1", "--style-preset", "style-a",
            "--size", "16", "--iters", "1", "--output", str(out),
        ])
        assert code == 0
        buf = load_image(str(out))
        assert (buf.height, buf.width) == (16, 11)


class TestUsageErrors:
    def test_unknown_content_preset_exits_2_and_lists_presets(self, capsys):
        code = main(["reconstruct-content", "x.png", "--preset", "content-z"])
        assert code == 2
        err = capsys.readouterr().err
        for name in CONTENT_PRESETS:
            assert name in err

    def test_unknown_style_preset_exits_2(self, capsys):
        code = main(["reconstruct-style", "x.png", "--preset", "mystery"])
        assert code == 2
        assert "style-a" in capsys.readouterr().err

    def test_unknown_layer_name_exits_2(self):
        assert main(["reconstruct-content", "x.png", "--preset", "conv9_9"]) == 2

    def test_pool_layer_rejected_as_content_target(self):
        assert main(["reconstruct-content", "x.png", "--preset", "pool3"]) == 2

    def test_nonpositive_ratio_exits_2(self, capsys):
        assert main(["transfer", "c.png", "s.png", "--ratio", "0"]) == 2
        assert "--ratio" in capsys.readouterr().err

    def test_missing_subcommand_exits_2(self):
        assert main([]) == 2

    def test_help_exits_0(self):
        assert main(["--help"]) == 0

    def test_preset_deeper_than_weight_file_exits_2(self, artwork, tmp_path, capsys):
        code = main([
            "reconstruct-style", artwork, "--weights", FIXTURE,
            "--preset", "style-e", "--size", "16", "--iters", "1",
            "--output", str(tmp_path / "o.png"),
        ])
        assert code == 2
        assert "conv4_1" in capsys.readouterr().err


class TestIOErrors:
    def test_missing_weight_file_exits_3_naming_path(self, photo, capsys):
        code = main([
            "reconstruct-content", photo,
            "--weights", "/nowhere/vgg.ncw", "--size", "16", "--iters", "1",
        ])
        assert code == 3
        assert "/nowhere/vgg.ncw" in capsys.readouterr().err

    def test_missing_input_image_exits_3(self, tmp_path, capsys):
        code = main([
            "reconstruct-content", str(tmp_path / "ghost.png"),
            "--weights", FIXTURE, "--size", "16", "--iters", "1",
        ])
        assert code == 3
        assert "ghost.png" in capsys.readouterr().err

    def test_corrupt_weight_file_exits_3(self, photo, tmp_path, capsys):
        bad = tmp_path / "bad.ncw"
        bad.write_bytes(b"NCW1" + b"\x01\x00\x00\x00" + b"\x02")  # cut mid layer_count
        code = main([
            "reconstruct-content", photo,
            "--weights", str(bad), "--size", "16", "--iters", "1",
        ])
        assert code == 3
        assert "byte offset" in capsys.readouterr().err


class TestDivergenceExit:
    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_exploding_plain_gd_exits_4(self, photo, tmp_path, capsys):
        code = main([
            "reconstruct-content", photo, "--weights", FIXTURE,
            "--size", "16", "--iters", "50",
            "--method", "plain-gd", "--step-size", "1e9",
            "--output", str(tmp_path / "o.png"),
        ])
        assert code == 4
        assert "iteration" in capsys.readouterr().err


class TestWeightResolution:
    def test_env_var_supplies_weights(self, photo, tmp_path, monkeypatch):
        monkeypatch.setenv("NEURALCANVAS_WEIGHTS", FIXTURE)
        code = main([
            "reconstruct-content", photo, "--size", "16", "--iters", "1",
            "--output", str(tmp_path / "o.png"),
        ])
        assert code == 0

    def test_flag_beats_env_var(self, photo, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("NEURALCANVAS_WEIGHTS", "/does/not/exist.ncw")
        code = main([
            "reconstruct-content", photo, "--weights", FIXTURE,
            "--size", "16", "--iters", "1", "--output", str(tmp_path / "o.png"),
        ])
        assert code == 0

    def test_default_path_is_cwd_relative(self, photo, tmp_path, monkeypatch):
        monkeypatch.delenv("NEURALCANVAS_WEIGHTS", raising=False)
        monkeypatch.chdir(tmp_path)
        (tmp_path / "vgg19.ncw").write_bytes(Path(FIXTURE).read_bytes())
        code = main([
            "reconstruct-content", photo, "--size", "16", "--iters", "1",
            "--output", str(tmp_path / "o.png"),
        ])
        assert code == 0

    def test_default_path_missing_exits_3(self, photo, tmp_path, monkeypatch, capsys):
        monkeypatch.delenv("NEURALCANVAS_WEIGHTS", raising=False)
        monkeypatch.chdir(tmp_path)
        code = main(["reconstruct-content", photo, "--size", "16", "--iters", "1"])
        assert code == 3
        assert "vgg19.ncw" in capsys.readouterr().err
