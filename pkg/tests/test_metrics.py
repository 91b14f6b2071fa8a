"""PSNR/SSIM 与评估报告测试"""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.dataset import load_manifest
from src.errors import ConfigError, DimensionError
from src.imaging import Image
from src.metrics import (ImageScore, MetricReport, evaluate, psnr,
                         score_images, ssim, ssim_window)
from src.model import ModelConfig, build


def _reference_ssim(a: np.ndarray, b: np.ndarray) -> float:
    """逐窗口循环求和的 SSIM，用作对照"""
    taps = np.exp(-((np.arange(11) - 5.0) ** 2) / (2.0 * 1.5 ** 2))
    window = np.outer(taps, taps)
    window /= window.sum()
    c1, c2 = 0.01 ** 2, 0.03 ** 2
    per_channel = []
    for pa, pb in zip(a, b):
        values = []
        for i in range(pa.shape[0] - 10):
            for j in range(pa.shape[1] - 10):
                wa = pa[i:i + 11, j:j + 11]
                wb = pb[i:i + 11, j:j + 11]
                mu_a = (window * wa).sum()
                mu_b = (window * wb).sum()
                var_a = (window * (wa - mu_a) ** 2).sum()
                var_b = (window * (wb - mu_b) ** 2).sum()
                cov = (window * (wa - mu_a) * (wb - mu_b)).sum()
                values.append((2 * mu_a * mu_b + c1) * (2 * cov + c2)
                              / ((mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)))
        per_channel.append(np.mean(values))
    return float(np.mean(per_channel))


def test_psnr_uniform_difference():
    a = Image.constant(8, 8, [0.25, 0.5, 0.75])
    b = Image(a.data + 0.1)
    assert psnr(a, b) == pytest.approx(20.0, abs=1e-9)


def test_psnr_eight_bit_step():
    a = np.zeros((3, 4, 4))
    b = np.full((3, 4, 4), 16.0 / 255.0)
    assert psnr(a, b) == pytest.approx(10.0 * math.log10(255.0 ** 2 / 256.0), abs=1e-9)


def test_psnr_identical_is_infinite(rng):
    img = Image(rng.uniform(0.0, 1.0, (3, 6, 6)))
    assert psnr(img, img) == math.inf


def test_psnr_clips_inputs():
    a = np.full((1, 4, 4), 1.5)
    b = np.ones((1, 4, 4))
    assert psnr(a, b) == math.inf


def test_ssim_of_identical_images_is_one(rng):
    img = Image(rng.uniform(0.0, 1.0, (3, 24, 20)))
    assert ssim(img, img) == pytest.approx(1.0, abs=1e-9)


def test_ssim_zero_variance_case():
    c1 = 1e-4
    assert ssim(np.zeros((1, 16, 16)), np.ones((1, 16, 16))) == pytest.approx(c1 / (1.0 + c1), rel=1e-9)


def test_ssim_window_is_normalized():
    window = ssim_window()
    assert len(window) == 11
    assert window.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(window, window[::-1])


def test_ssim_matches_windowed_reference(rng):
    a = rng.uniform(0.0, 1.0, (3, 16, 18))
    b = np.clip(a + rng.normal(0.0, 0.1, a.shape), 0.0, 1.0)
    assert ssim(a, b) == pytest.approx(_reference_ssim(a, b), abs=1e-6)
    assert ssim(a, b) < 1.0


def test_metric_shape_errors(rng):
    with pytest.raises(DimensionError):
        psnr(np.zeros((3, 4, 4)), np.zeros((3, 4, 5)))
    with pytest.raises(DimensionError):
        ssim(np.zeros((1, 10, 16)), np.zeros((1, 10, 16)))


def test_report_means_and_csv():
    report = MetricReport([
        ImageScore('a', 30.0, 0.5, 20.0, 0.25),
        ImageScore('b', 32.0, 0.75, 22.0, 0.5),
    ])
    assert report.mean_psnr == 31.0
    assert report.mean_ssim == 0.625
    assert report.mean_baseline_psnr == 21.0
    lines = report.to_csv().strip().split('\n')
    assert lines[0] == 'image,psnr_db,ssim,baseline_psnr_db,baseline_ssim'
    assert len(lines) == 4
    assert lines[-1].startswith('mean,31.000000,0.625000')


def test_report_without_baseline(tmp_path):
    report = MetricReport([ImageScore('a', 30.0, 0.5)])
    path = report.save(tmp_path / "reports" / "eval.csv")
    assert path.read_text(encoding='utf-8').splitlines()[0] == 'image,psnr_db,ssim'
    assert math.isnan(MetricReport().mean_psnr)


def test_score_images_of_ground_truth(rng):
    gt = Image(rng.uniform(0.0, 1.0, (3, 16, 16)))
    score = score_images('gt', gt, gt, baseline=gt)
    assert score.psnr_db == math.inf
    assert score.ssim == pytest.approx(1.0, abs=1e-9)
    assert score.baseline_ssim == pytest.approx(1.0, abs=1e-9)


def test_evaluate_manifest(tiny_dataset, tiny_config):
    manifest = load_manifest(tiny_dataset)
    params = build(tiny_config, seed=0)
    report = evaluate(params, tiny_config, manifest, tile=8, baseline='bilinear-bicubic', threads=1)
    assert [s.image for s in report.scores] == ['smooth', 'zoneplate']
    assert report.has_baseline
    for score in report.scores:
        assert math.isfinite(score.psnr_db) and score.seconds >= 0.0
        assert -1.0 <= score.ssim <= 1.0
        assert score.baseline_psnr_db > 5.0
    assert len(report.to_csv().strip().split('\n')) == 4


def test_evaluate_tiled_and_untiled_agree(tiny_dataset, tiny_config):
    manifest = load_manifest(tiny_dataset)
    params = build(tiny_config, seed=1)
    whole = evaluate(params, tiny_config, manifest, threads=2)
    tiled = evaluate(params, tiny_config, manifest, tile=8, threads=1)
    assert [s.psnr_db for s in whole.scores] == [s.psnr_db for s in tiled.scores]
    assert not whole.has_baseline


def test_evaluate_rejects_mismatched_model(tiny_dataset):
    manifest = load_manifest(tiny_dataset)
    config = ModelConfig(c_filters=36, n_blocks=0, upscale=3)
    with pytest.raises(ConfigError):
        evaluate(build(config, seed=0), config, manifest)



def test_psnr_decreases_with_noise_amplitude(rng):
    base = np.full((3, 16, 16), 0.5)
    pattern = rng.uniform(-1.0, 1.0, base.shape)
    values = [psnr(base, base + amplitude * pattern) for amplitude in (0.01, 0.05, 0.1, 0.2, 0.4)]
    assert all(later < earlier for earlier, later in zip(values, values[1:]))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 16), st.sampled_from(['random', 'inverted', 'shifted']))
def test_ssim_is_bounded(seed, relation):
    gen = np.random.default_rng(seed)
    a = gen.uniform(0.0, 1.0, (3, 14, 13))
    if relation == 'random':
        b = gen.uniform(0.0, 1.0, a.shape)
    elif relation == 'inverted':
        b = 1.0 - a
    else:
        b = np.clip(a + gen.uniform(-0.5, 0.5), 0.0, 1.0)
    assert -1.0 <= ssim(a, b) <= 1.0
