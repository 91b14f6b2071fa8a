"""图像质量指标：PSNR 与 SSIM

两个指标都在 [0, 1] 的取值约定下计算（峰值 L = 1），计算前裁剪输入。
"""
import math
from typing import Union

import numpy as np
from scipy.ndimage import correlate1d

from src.errors import DimensionError
from src.imaging import Image
from src.imaging.formation import gaussian_kernel

ImageLike = Union[Image, np.ndarray]

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _as_data(img: ImageLike) -> np.ndarray:
    data = img.data if isinstance(img, Image) else np.asarray(img, dtype=np.float64)
    if data.ndim == 2:
        data = data[None]
    return np.clip(data.astype(np.float64, copy=False), 0.0, 1.0)


def _pair(a: ImageLike, b: ImageLike):
    x, y = _as_data(a), _as_data(b)
    if x.shape != y.shape:
        raise DimensionError(f"两幅图像的形状不一致: {x.shape} vs {y.shape}")
    return x, y


def psnr(a: ImageLike, b: ImageLike) -> float:
    """峰值信噪比 10·log10(1 / MSE)，MSE 在全部通道上联合计算

    Returns:
        dB 值；两图相同时为 +inf
    """
    x, y = _pair(a, b)
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def ssim_window() -> np.ndarray:
    """11 抽头、σ = 1.5 的归一化一维高斯窗"""
    kernel = gaussian_kernel(SSIM_SIGMA)
    radius = SSIM_WINDOW // 2
    center = len(kernel) // 2
    window = kernel[center - radius:center + radius + 1]
    return window / window.sum()


def _filter_valid(plane: np.ndarray, window: np.ndarray) -> np.ndarray:
    """可分离窗口滤波，只保留窗口完全落在图像内的 valid 区域"""
    radius = len(window) // 2
    filtered = correlate1d(plane, window, axis=0, mode='nearest')
    filtered = correlate1d(filtered, window, axis=1, mode='nearest')
    return filtered[radius:-radius, radius:-radius]


def ssim(a: ImageLike, b: ImageLike) -> float:
    """结构相似度：逐通道计算 SSIM 图并取全部有效窗口位置的均值，再对通道取均值

    Raises:
        DimensionError: 形状不一致或图像小于 11×11 窗口
    """
    x, y = _pair(a, b)
    if x.shape[1] < SSIM_WINDOW or x.shape[2] < SSIM_WINDOW:
        raise DimensionError(f"图像 {x.shape[1]}×{x.shape[2]} 小于 SSIM 窗口 {SSIM_WINDOW}×{SSIM_WINDOW}")
    window = ssim_window()
    c1 = (SSIM_K1 * 1.0) ** 2
    c2 = (SSIM_K2 * 1.0) ** 2

    scores = []
    for pa, pb in zip(x, y):
        mu_a = _filter_valid(pa, window)
        mu_b = _filter_valid(pb, window)
        var_a = _filter_valid(pa * pa, window) - mu_a * mu_a
        var_b = _filter_valid(pb * pb, window) - mu_b * mu_b
        cov = _filter_valid(pa * pb, window) - mu_a * mu_b
        numerator = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
        denominator = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
        scores.append(float(np.mean(numerator / denominator)))
    return float(np.mean(scores))
