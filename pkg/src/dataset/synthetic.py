"""合成语料生成

渐变、环形波带板、类文字边缘与随机平滑场四类图像，用于测试夹具与无真实语料时的演示训练。
"""
import logging
from pathlib import Path
from typing import List, Union

import numpy as np
from scipy.ndimage import gaussian_filter

from src.imaging import Image, save_png

logger = logging.getLogger(__name__)

KINDS = ("gradient", "zoneplate", "text", "smooth")


def _gradient(size: int, rng: np.random.Generator) -> np.ndarray:
    y, x = np.mgrid[0:size, 0:size] / max(size - 1, 1)
    channels = []
    for _ in range(3):
        a, b = rng.uniform(-1.0, 1.0, size=2)
        plane = a * x + b * y
        span = plane.max() - plane.min()
        channels.append((plane - plane.min()) / span if span > 0 else np.full_like(plane, 0.5))
    return np.stack(channels)


def _zoneplate(size: int, rng: np.random.Generator) -> np.ndarray:
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    cy, cx = rng.uniform(0.3, 0.7, size=2) * size
    radius2 = (y - cy) ** 2 + (x - cx) ** 2
    k = rng.uniform(0.5, 1.0) * np.pi / size
    phase = rng.uniform(0.0, 2.0 * np.pi, size=3)
    return np.stack([0.5 + 0.5 * np.cos(k * radius2 + p) for p in phase])


def _text(size: int, rng: np.random.Generator) -> np.ndarray:
    background = rng.uniform(0.6, 1.0, size=3)
    data = np.broadcast_to(background.reshape(3, 1, 1), (3, size, size)).copy()
    stroke = max(size // 64, 1)
    for _ in range(max(size // 8, 4)):
        color = rng.uniform(0.0, 0.4, size=3).reshape(3, 1)
        y, x = rng.integers(0, size, size=2)
        length = int(rng.integers(size // 16 + 1, size // 4 + 2))
        if rng.random() < 0.5:
            data[:, y:y + stroke, x:x + length] = color[:, :, None]
        else:
            data[:, y:y + length, x:x + stroke] = color[:, :, None]
    return data


def _smooth(size: int, rng: np.random.Generator) -> np.ndarray:
    noise = rng.standard_normal((3, size, size))
    field = gaussian_filter(noise, sigma=(0, size / 16, size / 16), mode='wrap')
    low, high = field.min(), field.max()
    return (field - low) / (high - low) if high > low else np.full_like(field, 0.5)


_GENERATORS = {
    "gradient": _gradient,
    "zoneplate": _zoneplate,
    "text": _text,
    "smooth": _smooth,
}


def synthesize_image(kind: str, size: int, seed: int) -> Image:
    """生成 size×size 的三通道合成图像

    Raises:
        ValueError: 未知类型或尺寸不为正
    """
    if kind not in _GENERATORS:
        raise ValueError(f"未知的合成图像类型: {kind}，可选: {', '.join(KINDS)}")
    if size < 1:
        raise ValueError(f"合成图像尺寸必须为正，实际: {size}")
    rng = np.random.default_rng(seed)
    return Image.from_array(_GENERATORS[kind](size, rng))


def write_synthetic_corpus(out_dir: Union[str, Path], count: int, size: int = 512,
                           seed: int = 0) -> List[Path]:
    """写出 count 张 8 位 PNG 合成图像，类型轮流取用

    Returns:
        写出的文件路径列表
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        kind = KINDS[i % len(KINDS)]
        path = out_dir / f"synth_{i:04d}_{kind}.png"
        save_png(synthesize_image(kind, size, seed * 100003 + i), path, bits=8)
        paths.append(path)
    logger.info(f"合成语料已写出: {out_dir}，图像数: {count}，尺寸: {size}×{size}")
    return paths
