"""测试共享夹具"""
import numpy as np
import pytest

from src.dataset import build_input, synthesize_image
from src.dataset.manifest import (MANIFEST_NAME, DatasetManifest,
                                  ManifestEntry, write_manifest)
from src.imaging import RGGB, save_pgm, save_png
from src.model import ModelConfig, build
from src.training import TrainConfig
from src.utils.file_manager import sha256_files


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config():
    """C=8、单个残差块的小模型"""
    return ModelConfig(c_filters=8, n_blocks=1)


@pytest.fixture
def tiny_params64(tiny_config):
    return build(tiny_config, seed=3, dtype=np.float64)


@pytest.fixture
def tiny_train_config():
    """几步即可跑完的训练配置（不验证、只在结束时保存）"""
    return TrainConfig(batch=2, patch_size=8, max_steps=4, lr0=1e-3, val_every=0,
                       val_patches=0, checkpoint_every=0, log_every=1)


def _write_pair(root, name, gt, r=2, cfa=RGGB):
    bayer = build_input(gt, r, cfa)
    gt_path = root / "gt" / f"{name}.png"
    bayer_path = root / "bayer" / f"{name}.pgm"
    save_png(gt, gt_path, bits=16)
    save_pgm(bayer, bayer_path, bits=16)
    return ManifestEntry(gt_path, bayer_path, sha256_files(gt_path, bayer_path))


@pytest.fixture
def tiny_dataset(tmp_path):
    """两对 32×32 GT / 16×16 Bayer 的数据集，返回清单路径"""
    root = tmp_path / "data"
    entries = [
        _write_pair(root, "smooth", synthesize_image("smooth", 32, seed=1)),
        _write_pair(root, "zoneplate", synthesize_image("zoneplate", 32, seed=2)),
    ]
    return write_manifest(DatasetManifest(entries), root / MANIFEST_NAME)
