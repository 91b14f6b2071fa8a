"""成像模型：模糊 B、降采样 D、马赛克 M

I^Bayer = M(D(B(I^HR)))。所有运算都是纯函数，输出裁剪在 [0, 1] 内。
"""
import logging
import math

import cv2
import numpy as np
from scipy.ndimage import correlate1d

from src.errors import DimensionError
from src.imaging.cfa import CfaSpec
from src.imaging.image import Image

logger = logging.getLogger(__name__)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """半径 ⌈3σ⌉ 的归一化一维高斯核"""
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def gaussian_blur(img: Image, sigma: float) -> Image:
    """可分离高斯模糊，边界反射

    Args:
        img: 输入图像
        sigma: 标准差，0 表示恒等

    Raises:
        ValueError: sigma 为负
    """
    if sigma < 0:
        raise ValueError(f"sigma 不能为负，实际: {sigma}")
    if sigma == 0:
        return Image(img.data.copy())
    kernel = gaussian_kernel(sigma)
    data = correlate1d(img.data, kernel, axis=1, mode='reflect')
    data = correlate1d(data, kernel, axis=2, mode='reflect')
    return Image(np.clip(data, 0.0, 1.0))


def downsample(img: Image, factor: int) -> Image:
    """factor×factor 区域平均

    逐偏移按固定顺序累加，裁剪出的对齐子图与整图结果逐位一致。

    Raises:
        DimensionError: 尺寸不能被 factor 整除
    """
    if factor < 1:
        raise ValueError(f"降采样因子必须为正整数，实际: {factor}")
    if img.height % factor or img.width % factor:
        raise DimensionError(f"图像尺寸 {img.height}×{img.width} 不能被降采样因子 {factor} 整除")
    if factor == 1:
        return Image(img.data.copy())
    acc = np.zeros((img.channels, img.height // factor, img.width // factor))
    for dy in range(factor):
        for dx in range(factor):
            acc += img.data[:, dy::factor, dx::factor]
    return Image(np.clip(acc / (factor * factor), 0.0, 1.0))


def resize_to(img: Image, height: int, width: int) -> Image:
    """双线性重采样到指定尺寸（cv2.INTER_LINEAR，半像素中心对齐，边界钳位）

    Raises:
        DimensionError: 目标尺寸不为正
    """
    if height < 1 or width < 1:
        raise DimensionError(f"重采样目标尺寸必须为正，实际: {height}×{width}")
    if (height, width) == (img.height, img.width):
        return Image(img.data.copy())
    # OpenCV 使用 (h, w, c) 布局，单通道时返回二维数组
    hwc = np.ascontiguousarray(img.data.transpose(1, 2, 0))
    resized = cv2.resize(hwc, (width, height), interpolation=cv2.INTER_LINEAR)
    data = resized.reshape(height, width, img.channels).transpose(2, 0, 1)
    return Image(np.clip(data, 0.0, 1.0))


def scaled_size(size: int, scale: float) -> int:
    """round(size·scale)，0.5 向上舍入"""
    return int(math.floor(size * scale + 0.5))


def resize_fractional(img: Image, scale: float) -> Image:
    """按比例缩小，输出尺寸 round(dim·scale)

    Raises:
        ValueError: scale 不在 (0, 1] 内
        DimensionError: 输出尺寸退化为 0
    """
    if not 0.0 < scale <= 1.0:
        raise ValueError(f"缩放比例必须在 (0, 1] 内，实际: {scale}")
    height = scaled_size(img.height, scale)
    width = scaled_size(img.width, scale)
    if height < 1 or width < 1:
        raise DimensionError(f"缩放后尺寸退化: {img.height}×{img.width} × {scale} → {height}×{width}")
    return resize_to(img, height, width)


def mosaic(img: Image, cfa: CfaSpec) -> Image:
    """按 CFA 逐像素采样单一通道

    Raises:
        DimensionError: 输入不是三通道或尺寸不能被 CFA 周期整除
    """
    if img.channels != 3:
        raise DimensionError(f"马赛克输入必须是三通道，实际通道数: {img.channels}")
    s = cfa.period
    if img.height % s or img.width % s:
        raise DimensionError(f"图像尺寸 {img.height}×{img.width} 不能被 CFA 周期 {s} 整除")
    index = cfa.channel_map(img.height, img.width)
    return Image(np.take_along_axis(img.data, index[None], axis=0))


def form_bayer(hr: Image, r: int, cfa: CfaSpec, sigma: float = 0.0) -> Image:
    """成像模型 mosaic(downsample(gaussian_blur(hr, sigma), r), cfa)

    Raises:
        DimensionError: 尺寸不能被 r·period 整除
    """
    unit = r * cfa.period
    if hr.height % unit or hr.width % unit:
        raise DimensionError(f"图像尺寸 {hr.height}×{hr.width} 不能被 r·period={unit} 整除")
    return mosaic(downsample(gaussian_blur(hr, sigma), r), cfa)
