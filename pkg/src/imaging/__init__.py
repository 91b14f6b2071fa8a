"""成像模块 - CFA 定义、图像容器与成像模型"""

from .cfa import BGGR, GBRG, GRBG, PRESETS, RGGB, XTRANS, CfaSpec
from .formation import (downsample, form_bayer, gaussian_blur, gaussian_kernel,
                        mosaic, resize_fractional, resize_to)
from .image import Image, crop, load_image, quantize, save_pgm, save_png

__all__ = [
    'BGGR',
    'CfaSpec',
    'GBRG',
    'GRBG',
    'Image',
    'PRESETS',
    'RGGB',
    'XTRANS',
    'crop',
    'downsample',
    'form_bayer',
    'gaussian_blur',
    'gaussian_kernel',
    'load_image',
    'mosaic',
    'quantize',
    'resize_fractional',
    'resize_to',
    'save_pgm',
    'save_png',
]
