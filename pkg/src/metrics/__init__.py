"""指标模块 - PSNR、SSIM 与逐图评估报告"""

from .evaluator import ImageScore, MetricReport, evaluate, score_images
from .quality import psnr, ssim, ssim_window

__all__ = [
    'ImageScore',
    'MetricReport',
    'evaluate',
    'psnr',
    'score_images',
    'ssim',
    'ssim_window',
]
