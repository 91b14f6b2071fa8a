"""顺序基线：先去马赛克，再单图超分

去马赛克可选双线性或 Malvar-He-Cutler 梯度校正线性插值，上采样为 Catmull-Rom 双三次。
基线只读取 Bayer 输入，不接触 GT。
"""
import logging
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from scipy.ndimage import convolve, correlate

from src.errors import ConfigError, DimensionError, UnsupportedCfaError
from src.imaging import RGGB, CfaSpec, Image
from src.imaging.cfa import B, G, R

logger = logging.getLogger(__name__)

# 双线性插值核
_KERNEL_G = np.array([[0, 1, 0],
                      [1, 4, 1],
                      [0, 1, 0]], dtype=np.float64) / 4.0
_KERNEL_RB = np.array([[1, 2, 1],
                       [2, 4, 2],
                       [1, 2, 1]], dtype=np.float64) / 4.0

# Malvar-He-Cutler 5×5 核（均已除以 8）
_MHC_G_AT_RB = np.array([[0, 0, -1, 0, 0],
                         [0, 0, 2, 0, 0],
                         [-1, 2, 4, 2, -1],
                         [0, 0, 2, 0, 0],
                         [0, 0, -1, 0, 0]], dtype=np.float64) / 8.0
_MHC_ROW = np.array([[0, 0, 0.5, 0, 0],
                     [0, -1, 0, -1, 0],
                     [-1, 4, 5, 4, -1],
                     [0, -1, 0, -1, 0],
                     [0, 0, 0.5, 0, 0]], dtype=np.float64) / 8.0
_MHC_COL = _MHC_ROW.T
_MHC_DIAG = np.array([[0, 0, -1.5, 0, 0],
                      [0, 2, 0, 2, 0],
                      [-1.5, 0, 6, 0, -1.5],
                      [0, 2, 0, 2, 0],
                      [0, 0, -1.5, 0, 0]], dtype=np.float64) / 8.0

CATMULL_ROM_A = -0.5


def _bayer_sites(cfa: CfaSpec) -> Tuple[Tuple[int, int], Tuple[int, int]]:
    """返回 R 与 B 在 2×2 周期中的位置；不是标准 Bayer 排列时抛 UnsupportedCfaError"""
    grid = cfa.grid
    if cfa.period != 2:
        raise UnsupportedCfaError(f"基线去马赛克只支持 2×2 Bayer 类 CFA，实际: {cfa.name}（周期 {cfa.period}）")
    reds = np.argwhere(grid == R)
    blues = np.argwhere(grid == B)
    greens = np.argwhere(grid == G)
    if len(reds) != 1 or len(blues) != 1 or len(greens) != 2 or greens[0][0] == greens[1][0]:
        raise UnsupportedCfaError(f"CFA {cfa.name} 不是 Bayer 排列（两个 G 必须位于对角）")
    return tuple(reds[0]), tuple(blues[0])


def _check_bayer(bayer: Image, cfa: CfaSpec) -> np.ndarray:
    if bayer.channels != 1:
        raise DimensionError(f"Bayer 输入必须是单通道，实际通道数: {bayer.channels}")
    if bayer.height % cfa.period or bayer.width % cfa.period:
        raise DimensionError(f"Bayer 尺寸 {bayer.height}×{bayer.width} 不能被 CFA 周期 {cfa.period} 整除")
    return bayer.plane()


def bilinear_demosaic(bayer: Image, cfa: CfaSpec = RGGB) -> Image:
    """双线性去马赛克：缺失颜色取同色最近邻的平均，已知采样原样保留

    Raises:
        UnsupportedCfaError: 非 2×2 Bayer 类 CFA
    """
    _bayer_sites(cfa)
    raw = _check_bayer(bayer, cfa)
    masks = cfa.masks(bayer.height, bayer.width)
    planes = []
    for channel, kernel in ((R, _KERNEL_RB), (G, _KERNEL_G), (B, _KERNEL_RB)):
        planes.append(convolve(raw * masks[channel], kernel, mode='mirror'))
    return Image(np.clip(np.stack(planes), 0.0, 1.0))


def malvar_demosaic(bayer: Image, cfa: CfaSpec = RGGB) -> Image:
    """Malvar-He-Cutler 梯度校正线性插值

    Raises:
        UnsupportedCfaError: 非 2×2 Bayer 类 CFA
    """
    (ry, rx), (by, bx) = _bayer_sites(cfa)
    raw = _check_bayer(bayer, cfa)
    h, w = raw.shape
    rows = (np.arange(h) % 2)[:, None]
    cols = (np.arange(w) % 2)[None, :]
    at_r = (rows == ry) & (cols == rx)
    at_b = (rows == by) & (cols == bx)
    at_g_rrow = (rows == ry) & ~at_r
    at_g_brow = (rows == by) & ~at_b

    filtered: Dict[str, np.ndarray] = {
        name: correlate(raw, kernel, mode='mirror')
        for name, kernel in (('g', _MHC_G_AT_RB), ('row', _MHC_ROW), ('col', _MHC_COL), ('diag', _MHC_DIAG))
    }
    red = np.select([at_r, at_g_rrow, at_g_brow, at_b], [raw, filtered['row'], filtered['col'], filtered['diag']])
    green = np.where(at_r | at_b, filtered['g'], raw)
    blue = np.select([at_b, at_g_brow, at_g_rrow, at_r], [raw, filtered['row'], filtered['col'], filtered['diag']])
    return Image(np.clip(np.stack([red, green, blue]), 0.0, 1.0))


def _cubic_weight(t: np.ndarray, a: float = CATMULL_ROM_A) -> np.ndarray:
    t = np.abs(t)
    near = ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0
    far = ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a
    return np.where(t <= 1.0, near, np.where(t < 2.0, far, 0.0))


def _bicubic_axis(data: np.ndarray, r: int, axis: int) -> np.ndarray:
    size = data.shape[axis]
    out_size = size * r
    src = (np.arange(out_size, dtype=np.float64) + 0.5) / r - 0.5
    base = np.floor(src).astype(np.intp)
    frac = src - base
    shape = [1] * data.ndim
    shape[axis] = out_size
    result = np.zeros(data.shape[:axis] + (out_size,) + data.shape[axis + 1:])
    for offset in (-1, 0, 1, 2):
        index = np.clip(base + offset, 0, size - 1)
        weight = _cubic_weight(frac - offset).reshape(shape)
        result += weight * np.take(data, index, axis=axis)
    return result


def bicubic_upsample(img: Image, r: int) -> Image:
    """Catmull-Rom 双三次上采样（半像素对齐，边界钳位，结果裁剪到 [0, 1]）

    Raises:
        ValueError: r < 1
    """
    if r < 1:
        raise ValueError(f"放大倍数必须 ≥ 1，实际: {r}")
    if r == 1:
        return Image(img.data.copy())
    data = _bicubic_axis(img.data, r, axis=1)
    data = _bicubic_axis(data, r, axis=2)
    return Image(np.clip(data, 0.0, 1.0))


_DEMOSAICERS = {
    'bilinear': bilinear_demosaic,
    'malvar': malvar_demosaic,
}


@dataclass(frozen=True)
class SequentialPipeline:
    """顺序流水线配置

    Attributes:
        demosaicer: 'bilinear' 或 'malvar'
        upsampler: 目前只有 'bicubic'
        scale: 放大倍数 r
        cfa: Bayer 类 CFA
    """
    demosaicer: str = 'bilinear'
    upsampler: str = 'bicubic'
    scale: int = 2
    cfa: CfaSpec = RGGB

    def __post_init__(self) -> None:
        if self.demosaicer not in _DEMOSAICERS:
            raise ConfigError(f"未知的去马赛克器: {self.demosaicer}，可选: {', '.join(_DEMOSAICERS)}")
        if self.upsampler != 'bicubic':
            raise ConfigError(f"未知的上采样器: {self.upsampler}")
        if self.scale < 1:
            raise ConfigError(f"放大倍数必须 ≥ 1，实际: {self.scale}")

    @classmethod
    def from_name(cls, name: str, scale: int = 2, cfa: CfaSpec = RGGB) -> "SequentialPipeline":
        """由 'bilinear-bicubic' 形式的名称构建"""
        demosaicer, sep, upsampler = name.partition('-')
        if not sep:
            raise ConfigError(f"基线名称应为 <demosaicer>-<upsampler>，实际: {name}")
        return cls(demosaicer, upsampler, scale, cfa)

    @property
    def name(self) -> str:
        return f"{self.demosaicer}-{self.upsampler}"


def run_sequential(bayer: Image, pipeline: SequentialPipeline = SequentialPipeline()) -> Image:
    """去马赛克后上采样，输出 (3, r·h, r·w)"""
    demosaiced = _DEMOSAICERS[pipeline.demosaicer](bayer, pipeline.cfa)
    return bicubic_upsample(demosaiced, pipeline.scale)
