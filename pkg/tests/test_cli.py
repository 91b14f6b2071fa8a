"""命令行端到端测试"""
import pytest

from src.cli import build_parser, main
from src.errors import NumericError
from src.imaging import load_image
from src.training import Trainer, load_checkpoint
from src.training.trainer import LATEST_NAME, LOG_NAME

TINY_CONFIG = """\
# 小模型、几步训练
c_filters = 8
n_blocks = 1
batch = 2
patch_size = 8
max_steps = 3
val_every = 0
val_patches = 0
checkpoint_every = 0
log_every = 1
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY_CONFIG, encoding='utf-8')
    return path


@pytest.mark.parametrize('argv, flags', [
    (['dataset', 'build'], ['--input-dir', '--output-dir', '--step', '--cfa', '--r', '--holdout']),
    (['dataset', 'synth'], ['--count', '--size']),
    (['train'], ['--manifest', '--out', '--preset', '--steps', '--resume']),
    (['eval'], ['--checkpoint', '--manifest', '--baseline', '--tile', '--report']),
    (['infer'], ['--checkpoint', '--input', '--output', '--tile']),
])
def test_help_lists_flags(capsys, argv, flags):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(argv + ['--help'])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for flag in flags:
        assert flag in text


def test_missing_required_argument_exits():
    with pytest.raises(SystemExit) as exc:
        main(['train'])
    assert exc.value.code == 2


def test_train_eval_infer(tmp_path, capsys, config_file, tiny_dataset):
    out = tmp_path / "run"
    assert main(['--config', str(config_file), 'train', '--manifest', str(tiny_dataset),
                 '--out', str(out)]) == 0
    ckpt = load_checkpoint(out / LATEST_NAME)
    assert ckpt.step == 3 and ckpt.model_config.c_filters == 8
    assert len((out / LOG_NAME).read_text(encoding='utf-8').splitlines()) == 4

    report = tmp_path / "eval.csv"
    capsys.readouterr()
    assert main(['eval', '--checkpoint', str(out / LATEST_NAME), '--manifest', str(tiny_dataset),
                 '--baseline', 'bilinear-bicubic', '--tile', '8', '--report', str(report)]) == 0
    lines = report.read_text(encoding='utf-8').splitlines()
    assert lines[0] == 'image,psnr_db,ssim,baseline_psnr_db,baseline_ssim'
    assert len(lines) == 4
    assert capsys.readouterr().out.splitlines() == lines

    bayer = tiny_dataset.parent / "bayer" / "smooth.pgm"
    image = tmp_path / "sr" / "smooth.png"
    assert main(['infer', '--checkpoint', str(out / LATEST_NAME), '--input', str(bayer),
                 '--output', str(image), '--bits', '16']) == 0
    result = load_image(image)
    assert (result.channels, result.height, result.width) == (3, 32, 32)


def test_zero_steps_writes_initial_checkpoint(tmp_path, config_file, tiny_dataset):
    out = tmp_path / "run"
    assert main(['--config', str(config_file), 'train', '--manifest', str(tiny_dataset),
                 '--out', str(out), '--steps', '0', '--seed', '9']) == 0
    ckpt = load_checkpoint(out / LATEST_NAME)
    assert ckpt.step == 0 and ckpt.train_config.seed == 9


def test_failed_training_removes_partial_output(tmp_path, monkeypatch, config_file, tiny_dataset):
    def explode(self):
        raise NumericError("loss 为 NaN")

    monkeypatch.setattr(Trainer, 'train_step', explode)
    out = tmp_path / "run"
    assert main(['--config', str(config_file), 'train', '--manifest', str(tiny_dataset),
                 '--out', str(out)]) == 1
    assert not out.exists()


def test_bad_config_file_fails(tmp_path, tiny_dataset):
    bad = tmp_path / "bad.cfg"
    bad.write_text("unknown_key = 1\n", encoding='utf-8')
    assert main(['--config', str(bad), 'train', '--manifest', str(tiny_dataset),
                 '--out', str(tmp_path / "run")]) == 1
    assert main(['--config', str(tmp_path / "missing.cfg"), 'infer', '--checkpoint', 'x',
                 '--input', 'y', '--output', 'z.png']) == 1


def test_infer_rejects_rgb_input(tmp_path, config_file, tiny_dataset):
    out = tmp_path / "run"
    assert main(['--config', str(config_file), 'train', '--manifest', str(tiny_dataset),
                 '--out', str(out), '--steps', '0']) == 0
    rgb = tiny_dataset.parent / "gt" / "smooth.png"
    target = tmp_path / "out.png"
    assert main(['infer', '--checkpoint', str(out / LATEST_NAME), '--input', str(rgb),
                 '--output', str(target)]) == 1
    assert not target.exists()


def test_dataset_synth_and_build(tmp_path):
    raw = tmp_path / "raw"
    assert main(['dataset', 'synth', '--output-dir', str(raw), '--count', '3', '--size', '128']) == 0
    assert len(list(raw.glob('*.png'))) == 3

    data = tmp_path / "data"
    assert main(['dataset', 'build', '--input-dir', str(raw), '--output-dir', str(data),
                 '--holdout', '1', '--patch-size', '16', '--cfa', 'bggr']) == 0
    assert (data / "manifest.tsv").is_file() and (data / "holdout.tsv").is_file()

    again = tmp_path / "again"
    assert main(['dataset', 'build', '--input-dir', str(raw), '--output-dir', str(again),
                 '--holdout', '1', '--patch-size', '16', '--cfa', 'bggr']) == 0
    for path in sorted(p for p in data.rglob('*') if p.is_file()):
        assert (again / path.relative_to(data)).read_bytes() == path.read_bytes()


def test_dataset_build_failure_cleans_up(tmp_path):
    raw = tmp_path / "raw"
    raw.mkdir()
    data = tmp_path / "data"
    assert main(['dataset', 'build', '--input-dir', str(raw), '--output-dir', str(data)]) == 1
    assert not data.exists()
