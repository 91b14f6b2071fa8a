"""训练补丁采样

每个补丁是 (seed, index) 的纯函数；补丁序列由逐个索引的采样组成，
因此训练从任意步恢复都能得到相同的数据流。
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from src.errors import DimensionError
from src.imaging import RGGB, CfaSpec, Image, crop

logger = logging.getLogger(__name__)


@dataclass
class PatchPair:
    """对齐的训练补丁

    Attributes:
        bayer: p×p 单通道 Bayer 补丁
        target: (r·p)×(r·p) 三通道目标补丁
        source_id: 来源图像标识
        origin: 目标补丁在高分辨率图像中的左上角 (y, x)
    """
    bayer: Image
    target: Image
    source_id: str
    origin: Tuple[int, int]


def _check_pair(gt: Image, bayer: Image, patch_size: int, r: int, cfa: CfaSpec) -> None:
    if bayer.height * r != gt.height or bayer.width * r != gt.width:
        raise DimensionError(
            f"Bayer 尺寸 {bayer.height}×{bayer.width} 与 GT 尺寸 {gt.height}×{gt.width} / r={r} 不一致")
    if patch_size % cfa.period:
        raise DimensionError(f"补丁尺寸 {patch_size} 必须是 CFA 周期 {cfa.period} 的倍数")
    if patch_size > bayer.height or patch_size > bayer.width:
        raise DimensionError(f"补丁尺寸 {patch_size} 大于 Bayer 图像 {bayer.height}×{bayer.width}")


def sample_patch(gt: Image, bayer: Image, index: int, seed: int, patch_size: int = 64,
                 r: int = 2, cfa: CfaSpec = RGGB, source_id: str = "") -> PatchPair:
    """按 (seed, index) 采样一个对齐补丁

    原点在低分辨率坐标中均匀随机，并向下取整到 CFA 周期的倍数。

    Raises:
        DimensionError: 尺寸不一致或补丁大于图像
    """
    _check_pair(gt, bayer, patch_size, r, cfa)
    s = cfa.period
    rng = np.random.default_rng([seed, index])
    y = int(rng.integers(0, (bayer.height - patch_size) // s + 1)) * s
    x = int(rng.integers(0, (bayer.width - patch_size) // s + 1)) * s
    return PatchPair(
        bayer=crop(bayer, y, x, patch_size, patch_size),
        target=crop(gt, r * y, r * x, r * patch_size, r * patch_size),
        source_id=source_id,
        origin=(r * y, r * x),
    )


def sample_patches(gt: Image, bayer: Image, count: int, rng_seed: int, patch_size: int = 64,
                   r: int = 2, cfa: CfaSpec = RGGB, source_id: str = "", start: int = 0) -> List[PatchPair]:
    """确定性补丁序列 sample_patch(index = start, start+1, …)"""
    return [sample_patch(gt, bayer, start + i, rng_seed, patch_size, r, cfa, source_id)
            for i in range(count)]


def sample_from_corpus(pairs: Sequence[Tuple[str, Image, Image]], index: int, seed: int,
                       patch_size: int = 64, r: int = 2, cfa: CfaSpec = RGGB) -> PatchPair:
    """从多张图像中按 (seed, index) 选图并采样补丁

    Args:
        pairs: (来源标识, GT, Bayer) 列表
    """
    if not pairs:
        raise DimensionError("语料为空，无法采样补丁")
    choice = int(np.random.default_rng([seed, index, len(pairs)]).integers(0, len(pairs)))
    source_id, gt, bayer = pairs[choice]
    return sample_patch(gt, bayer, index, seed, patch_size, r, cfa, source_id)
