"""图像容器与读写

Image 以 (c, h, w) 的 float64 数组保存 [0, 1] 范围的线性值，通道平面存放。
文件读写使用 OpenCV，支持 8/16 位 PNG 与 PGM。
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import cv2
import numpy as np

from src.errors import DimensionError
from src.tensor import Tensor

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_MAX_VALUE = {8: 255, 16: 65535}
_DTYPE = {8: np.uint8, 16: np.uint16}


@dataclass
class Image:
    """图像

    Attributes:
        data: 形状 (c, h, w)，c 为 1 或 3，取值 [0, 1]
    """
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3 or data.shape[0] not in (1, 3):
            raise DimensionError(f"图像数据必须是 (1|3, h, w)，实际形状: {data.shape}")
        if data.shape[1] < 1 or data.shape[2] < 1:
            raise DimensionError(f"图像尺寸必须为正，实际: {data.shape[1]}×{data.shape[2]}")
        if data.size and (data.min() < 0.0 or data.max() > 1.0):
            raise ValueError(f"图像取值必须在 [0, 1] 内，实际范围: [{data.min()}, {data.max()}]")
        self.data = data

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @classmethod
    def constant(cls, height: int, width: int, values) -> "Image":
        """每通道取常量值的图像"""
        values = np.asarray(values, dtype=np.float64).reshape(-1, 1, 1)
        return cls(np.broadcast_to(values, (values.shape[0], height, width)).copy())

    @classmethod
    def from_array(cls, array: np.ndarray, clip: bool = True) -> "Image":
        """从 (h, w) 或 (c, h, w) 数组构建；clip 时先裁剪到 [0, 1]"""
        array = np.asarray(array, dtype=np.float64)
        if array.ndim == 2:
            array = array[None]
        if clip:
            array = np.clip(array, 0.0, 1.0)
        return cls(array)

    def to_tensor(self, dtype=np.float32) -> Tensor:
        """转为 1×c×h×w 张量"""
        return Tensor(self.data[None], dtype=dtype)

    @classmethod
    def from_tensor(cls, tensor: Tensor, index: int = 0) -> "Image":
        """取批次中的第 index 张，裁剪到 [0, 1]"""
        return cls.from_array(tensor.data[index])

    def plane(self) -> np.ndarray:
        """单通道图像的 (h, w) 平面"""
        if self.channels != 1:
            raise DimensionError(f"只有单通道图像才有平面视图，实际通道数: {self.channels}")
        return self.data[0]


def crop(img: Image, y: int, x: int, height: int, width: int) -> Image:
    """裁剪 [y, y+height) × [x, x+width)

    Raises:
        DimensionError: 裁剪窗口越界或为空
    """
    if y < 0 or x < 0 or height < 1 or width < 1 or y + height > img.height or x + width > img.width:
        raise DimensionError(
            f"裁剪窗口 ({y}, {x}, {height}, {width}) 超出图像范围 {img.height}×{img.width}")
    return Image(img.data[:, y:y + height, x:x + width].copy())


def load_image(path: PathLike) -> Image:
    """读取 PNG/PGM/TIFF/JPEG 等图像，线性映射到 [0, 1]

    Raises:
        IOError: 文件无法解码
    """
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise IOError(f"无法读取图像: {path}")
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    elif raw.dtype in (np.float32, np.float64):
        scale = 1.0
    else:
        raise IOError(f"不支持的像素类型 {raw.dtype}: {path}")

    if raw.ndim == 2:
        data = raw[None].astype(np.float64) / scale
    elif raw.shape[2] == 1:
        data = raw.transpose(2, 0, 1).astype(np.float64) / scale
    else:
        code = cv2.COLOR_BGRA2RGB if raw.shape[2] == 4 else cv2.COLOR_BGR2RGB
        rgb = cv2.cvtColor(raw, code)
        data = rgb.transpose(2, 0, 1).astype(np.float64) / scale
    logger.debug(f"读取图像: {path}，尺寸 {data.shape[1]}×{data.shape[2]}，通道数 {data.shape[0]}")
    return Image.from_array(data)


def quantize(img: Image, bits: int) -> np.ndarray:
    """裁剪并四舍五入量化为 (h, w) 或 (h, w, 3) 的无符号整数数组（RGB 顺序）"""
    if bits not in _MAX_VALUE:
        raise ValueError(f"只支持 8 或 16 位，实际: {bits}")
    values = np.rint(np.clip(img.data, 0.0, 1.0) * _MAX_VALUE[bits]).astype(_DTYPE[bits])
    if img.channels == 1:
        return values[0]
    return values.transpose(1, 2, 0)


def _write(path: PathLike, array: np.ndarray) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), array):
        raise IOError(f"无法写入图像: {path}")


def save_png(img: Image, path: PathLike, bits: int = 8) -> None:
    """保存为 8/16 位 PNG"""
    array = quantize(img, bits)
    if img.channels == 3:
        array = cv2.cvtColor(array, cv2.COLOR_RGB2BGR)
    _write(path, array)
    logger.debug(f"已保存 PNG ({bits} 位): {path}")


def save_pgm(img: Image, path: PathLike, bits: int = 16) -> None:
    """保存单通道图像为 8/16 位 PGM

    Raises:
        DimensionError: 图像不是单通道
    """
    if img.channels != 1:
        raise DimensionError(f"PGM 只能保存单通道图像，实际通道数: {img.channels}")
    _write(path, quantize(img, bits))
    logger.debug(f"已保存 PGM ({bits} 位): {path}")
