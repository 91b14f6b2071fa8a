"""分块推理模块

大图按 tile×tile 的低分辨率块推理，每块向外扩展 halo 个像素作为上下文，
推理后只保留中心部分拼接。halo 不小于感受野半径时，结果与整图推理一致。
"""
import logging
from typing import Optional

import numpy as np

from src.errors import DimensionError
from src.model.config import ModelConfig
from src.model.network import ModelParams, forward, receptive_halo
from src.tensor import Tensor

logger = logging.getLogger(__name__)


def _as_plane(bayer) -> np.ndarray:
    if isinstance(bayer, Tensor):
        if bayer.shape[0] != 1 or bayer.shape[1] != 1:
            raise DimensionError(f"分块推理只接受 1×1×h×w 的 Bayer 张量，实际: {bayer.shape}")
        return bayer.data[0, 0]
    plane = np.asarray(bayer)
    if plane.ndim != 2:
        raise DimensionError(f"Bayer 平面必须是二维数组，实际维数: {plane.ndim}")
    return plane


def infer_tiled(params: ModelParams, config: ModelConfig, bayer,
                tile: Optional[int] = None, halo: Optional[int] = None) -> np.ndarray:
    """对单张 Bayer 图像执行推理

    Args:
        params: 网络参数
        config: 模型配置
        bayer: (h, w) 数组或 1×1×h×w 张量
        tile: 块边长（低分辨率像素，必须是 cfa_period 的倍数），None 表示整图推理
        halo: 块外扩宽度，None 时取 receptive_halo(config)

    Returns:
        形状 (3, r·h, r·w) 的线性输出（不裁剪）
    """
    plane = _as_plane(bayer)
    dtype = next(iter(params.values())).dtype
    h, w = plane.shape
    s = config.cfa_period
    r = config.upscale

    if tile is None:
        out = forward(params, config, Tensor(plane[None, None], dtype=dtype))
        return out.data[0]

    if tile < 1 or tile % s:
        raise DimensionError(f"块边长 {tile} 必须是 CFA 周期 {s} 的正整数倍")
    if halo is None:
        halo = receptive_halo(config)
    if halo % s:
        raise DimensionError(f"块外扩宽度 {halo} 必须是 CFA 周期 {s} 的倍数")
    if h % s or w % s:
        raise DimensionError(f"Bayer 输入尺寸 {h}×{w} 不能被 CFA 周期 {s} 整除")

    result = np.empty((3, r * h, r * w), dtype=dtype)
    tiles = 0
    for y0 in range(0, h, tile):
        y1 = min(y0 + tile, h)
        ey0, ey1 = max(0, y0 - halo), min(h, y1 + halo)
        for x0 in range(0, w, tile):
            x1 = min(x0 + tile, w)
            ex0, ex1 = max(0, x0 - halo), min(w, x1 + halo)
            crop = Tensor(plane[None, None, ey0:ey1, ex0:ex1], dtype=dtype)
            out = forward(params, config, crop).data[0]
            oy, ox = r * (y0 - ey0), r * (x0 - ex0)
            result[:, r * y0:r * y1, r * x0:r * x1] = out[:, oy:oy + r * (y1 - y0), ox:ox + r * (x1 - x0)]
            tiles += 1
    logger.debug(f"分块推理完成，图像 {h}×{w}，块数: {tiles}，外扩: {halo}")
    return result
