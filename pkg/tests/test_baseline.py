"""顺序基线（去马赛克 + 双三次）测试"""
import numpy as np
import pytest

from src.baseline import (SequentialPipeline, bicubic_upsample,
                          bilinear_demosaic, malvar_demosaic, run_sequential)
from src.errors import ConfigError, DimensionError, UnsupportedCfaError
from src.imaging import BGGR, GRBG, RGGB, XTRANS, Image, mosaic
from src.imaging.cfa import B, G, R


@pytest.mark.parametrize('demosaic', [bilinear_demosaic, malvar_demosaic])
@pytest.mark.parametrize('cfa', [RGGB, BGGR, GRBG])
def test_constant_scene_is_reconstructed_exactly(demosaic, cfa):
    scene = Image.constant(12, 16, [0.25, 0.5, 0.75])
    out = demosaic(mosaic(scene, cfa), cfa)
    np.testing.assert_allclose(out.data, scene.data, atol=1e-12)


def test_bilinear_keeps_known_samples(rng):
    bayer = Image(rng.uniform(0.0, 1.0, (1, 10, 12)))
    out = bilinear_demosaic(bayer, RGGB)
    index = RGGB.channel_map(10, 12)
    for channel in (R, G, B):
        sites = index == channel
        np.testing.assert_array_equal(out.data[channel][sites], bayer.plane()[sites])


def test_bilinear_green_ramp_exact_in_interior():
    ramp = np.tile(np.arange(16, dtype=np.float64) / 32.0, (16, 1))
    scene = Image(np.stack([np.full((16, 16), 0.5), ramp, np.full((16, 16), 0.5)]))
    out = bilinear_demosaic(mosaic(scene, RGGB), RGGB)
    np.testing.assert_allclose(out.data[G, 1:-1, 1:-1], ramp[1:-1, 1:-1], atol=1e-12)


def test_step_edge_shows_zipper_artifact():
    # 灰度竖直台阶：远离边缘处恢复精确，边缘附近出现色差
    plane = np.full((16, 16), 0.25)
    plane[:, 8:] = 0.75
    scene = Image(np.stack([plane] * 3))
    out = bilinear_demosaic(mosaic(scene, RGGB), RGGB).data
    chroma = np.abs(out[R] - out[G]) + np.abs(out[B] - out[G])
    assert chroma[:, 6:10].max() > 0.1
    np.testing.assert_allclose(out[:, :, :5], scene.data[:, :, :5], atol=1e-12)
    np.testing.assert_allclose(out[:, :, 11:], scene.data[:, :, 11:], atol=1e-12)


def test_bicubic_reproduces_linear_ramp():
    ramp = np.tile(np.arange(16, dtype=np.float64) / 16.0, (3, 4, 1))
    out = bicubic_upsample(Image(ramp), 2).data
    assert out.shape == (3, 8, 32)
    src = (np.arange(32) + 0.5) / 2.0 - 0.5
    np.testing.assert_allclose(out[0, 0, 4:28], src[4:28] / 16.0, atol=1e-12)


def test_bicubic_identity_and_bad_factor(rng):
    img = Image(rng.uniform(0.0, 1.0, (3, 5, 5)))
    np.testing.assert_array_equal(bicubic_upsample(img, 1).data, img.data)
    with pytest.raises(ValueError):
        bicubic_upsample(img, 0)


def test_bicubic_output_is_clipped():
    data = np.zeros((1, 6, 6))
    data[:, :, 3:] = 1.0
    out = bicubic_upsample(Image(data), 3).data
    assert out.min() >= 0.0 and out.max() <= 1.0


@pytest.mark.parametrize('demosaic', [bilinear_demosaic, malvar_demosaic])
def test_xtrans_is_unsupported(demosaic):
    with pytest.raises(UnsupportedCfaError):
        demosaic(Image.constant(12, 12, [0.5]), XTRANS)


def test_demosaic_requires_single_channel():
    with pytest.raises(DimensionError):
        bilinear_demosaic(Image.constant(4, 4, [0.1, 0.2, 0.3]))
    with pytest.raises(DimensionError):
        malvar_demosaic(Image.constant(5, 4, [0.5]))


def test_run_sequential_shape(rng):
    bayer = Image(rng.uniform(0.0, 1.0, (1, 8, 10)))
    out = run_sequential(bayer, SequentialPipeline.from_name('malvar-bicubic', scale=3))
    assert (out.channels, out.height, out.width) == (3, 24, 30)
    assert run_sequential(bayer).height == 16


def test_pipeline_names():
    pipeline = SequentialPipeline.from_name('malvar-bicubic')
    assert pipeline.demosaicer == 'malvar' and pipeline.name == 'malvar-bicubic'
    for name in ('bilinear', 'nearest-bicubic', 'bilinear-lanczos'):
        with pytest.raises(ConfigError):
            SequentialPipeline.from_name(name)
