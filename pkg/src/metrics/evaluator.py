"""逐图评估与报告

对清单中的每张存储的 Bayer 图像做整图（分块）推理，与 GT 计算 PSNR/SSIM，
可选地同时评估顺序基线，输出 CSV 报告。
"""
import csv
import io
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from src.baseline import SequentialPipeline, run_sequential
from src.dataset.manifest import DatasetManifest, ManifestEntry
from src.errors import ConfigError, DimensionError
from src.imaging import CfaSpec, Image, load_image
from src.metrics.quality import psnr, ssim
from src.model import ModelConfig, ModelParams, infer_tiled
from src.utils.file_manager import atomic_write_text, thread_count

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass
class ImageScore:
    """单张图像的评估结果"""
    image: str
    psnr_db: float
    ssim: float
    baseline_psnr_db: Optional[float] = None
    baseline_ssim: Optional[float] = None
    seconds: float = 0.0


def _mean(values: List[float]) -> float:
    return float(np.mean(values)) if values else math.nan


@dataclass
class MetricReport:
    """评估报告，均值是逐图结果的算术平均"""
    scores: List[ImageScore] = field(default_factory=list)

    @property
    def mean_psnr(self) -> float:
        return _mean([s.psnr_db for s in self.scores])

    @property
    def mean_ssim(self) -> float:
        return _mean([s.ssim for s in self.scores])

    @property
    def has_baseline(self) -> bool:
        return any(s.baseline_psnr_db is not None for s in self.scores)

    @property
    def mean_baseline_psnr(self) -> float:
        return _mean([s.baseline_psnr_db for s in self.scores if s.baseline_psnr_db is not None])

    @property
    def mean_baseline_ssim(self) -> float:
        return _mean([s.baseline_ssim for s in self.scores if s.baseline_ssim is not None])

    @property
    def mean_seconds(self) -> float:
        return _mean([s.seconds for s in self.scores])

    def to_csv(self) -> str:
        """CSV 文本：每图一行，末尾一行 mean 汇总"""
        out = io.StringIO()
        writer = csv.writer(out, lineterminator='\n')
        header = ['image', 'psnr_db', 'ssim']
        if self.has_baseline:
            header += ['baseline_psnr_db', 'baseline_ssim']
        writer.writerow(header)
        for s in self.scores:
            row = [s.image, f"{s.psnr_db:.6f}", f"{s.ssim:.6f}"]
            if self.has_baseline:
                row += [f"{s.baseline_psnr_db:.6f}", f"{s.baseline_ssim:.6f}"]
            writer.writerow(row)
        mean_row = ['mean', f"{self.mean_psnr:.6f}", f"{self.mean_ssim:.6f}"]
        if self.has_baseline:
            mean_row += [f"{self.mean_baseline_psnr:.6f}", f"{self.mean_baseline_ssim:.6f}"]
        writer.writerow(mean_row)
        return out.getvalue()

    def save(self, path: PathLike) -> Path:
        path = Path(path)
        atomic_write_text(path, self.to_csv())
        logger.info(f"评估报告已写出: {path}")
        return path


def score_images(name: str, output: Image, gt: Image, seconds: float = 0.0,
                 baseline: Optional[Image] = None) -> ImageScore:
    """计算一张图像的得分"""
    score = ImageScore(name, psnr(output, gt), ssim(output, gt), seconds=seconds)
    if baseline is not None:
        score.baseline_psnr_db = psnr(baseline, gt)
        score.baseline_ssim = ssim(baseline, gt)
    return score


def _evaluate_one(entry: ManifestEntry, params: ModelParams, config: ModelConfig, cfa: CfaSpec,
                  tile: Optional[int], pipeline: Optional[SequentialPipeline]) -> ImageScore:
    gt = load_image(entry.gt_path)
    bayer = load_image(entry.bayer_path)
    r = config.upscale
    if bayer.channels != 1 or gt.channels != 3:
        raise DimensionError(f"{entry.name}: Bayer 必须是单通道且 GT 必须是三通道")
    if bayer.height * r != gt.height or bayer.width * r != gt.width:
        raise DimensionError(
            f"{entry.name}: Bayer {bayer.height}×{bayer.width} ×{r} 与 GT {gt.height}×{gt.width} 不一致")

    start = time.perf_counter()
    output = Image.from_array(infer_tiled(params, config, bayer.plane(), tile))
    seconds = time.perf_counter() - start

    baseline = run_sequential(bayer, pipeline) if pipeline is not None else None
    score = score_images(entry.name, output, gt, seconds, baseline)
    logger.info(f"已评估 {entry.name}: PSNR {score.psnr_db:.4f} dB，SSIM {score.ssim:.4f}，耗时 {seconds:.2f} 秒")
    return score


def evaluate(params: ModelParams, config: ModelConfig, manifest: DatasetManifest,
             tile: Optional[int] = None, baseline: Optional[str] = None,
             threads: Optional[int] = None) -> MetricReport:
    """评估清单中的全部图像

    Args:
        params: 网络参数
        config: 模型配置
        manifest: 数据集清单（提供 r 与 CFA）
        tile: 分块边长，None 表示整图推理
        baseline: 基线名称，如 'bilinear-bicubic'；None 表示不评估基线
        threads: 并行线程数，None 时由 DJSR_THREADS 决定

    Raises:
        ConfigError: 清单的 r 或 CFA 周期与模型配置不一致
    """
    cfa = CfaSpec.by_name(manifest.cfa)
    if manifest.r != config.upscale:
        raise ConfigError(f"清单的 r={manifest.r} 与模型 upscale={config.upscale} 不一致")
    if cfa.period != config.cfa_period:
        raise ConfigError(f"清单的 CFA 周期 {cfa.period} 与模型 cfa_period={config.cfa_period} 不一致")
    pipeline = SequentialPipeline.from_name(baseline, config.upscale, cfa) if baseline else None

    workers = threads or thread_count()
    logger.info(f"开始评估: {len(manifest)} 张图像，分块: {tile or '整图'}，线程数 {workers}")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        scores = list(pool.map(lambda e: _evaluate_one(e, params, config, cfa, tile, pipeline),
                               manifest.entries))
    report = MetricReport(scores)
    logger.info(f"评估完成: 平均 PSNR {report.mean_psnr:.4f} dB，平均 SSIM {report.mean_ssim:.4f}，"
                f"平均每图推理耗时 {report.mean_seconds:.3f} 秒")
    if pipeline is not None:
        logger.info(f"基线 {pipeline.name}: 平均 PSNR {report.mean_baseline_psnr:.4f} dB，"
                    f"平均 SSIM {report.mean_baseline_ssim:.4f}")
    return report
