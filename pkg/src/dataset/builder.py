"""数据集构建

高质量原图 → 以 1.25 为步进渐进缩小 → 精确缩放到一半边长得到 GT
→ 成像模型得到 Bayer 输入。逐图输出互相独立，可并行处理。
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from src.errors import ConfigError, DimensionError
from src.imaging import (RGGB, CfaSpec, Image, crop, form_bayer, load_image,
                         resize_fractional, resize_to, save_pgm, save_png)
from src.imaging.formation import scaled_size
from src.dataset.manifest import (HOLDOUT_NAME, MANIFEST_NAME, DatasetManifest,
                                  ManifestEntry, write_manifest)
from src.utils.file_manager import sha256_files, thread_count

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

IMAGE_SUFFIXES = {'.png', '.tif', '.tiff', '.jpg', '.jpeg', '.bmp', '.pgm', '.ppm'}


def minimum_source_size(r: int = 2, patch_size: int = 64) -> int:
    """原图最小边长：补丁在 GT 中覆盖范围的 4 倍"""
    return 4 * r * patch_size


def downsizing_steps(height: int, width: int, step: float = 1.25) -> int:
    """渐进缩放的步数：下一步的取整尺寸仍严格大于原尺寸一半时继续

    步数主要由 step 决定（取整只影响很小的原图）：512 与 4000 在 step=1.25 时都是 3 步
    （1/1.25³ ≈ 0.512 > 1/2），恰为最小尺寸的原图同样先缩放 3 步再做最终精确缩放，
    最终尺寸仍是原图一半，与不分步时一致。
    """
    count = 0
    h, w = height, width
    while True:
        nh, nw = scaled_size(h, 1.0 / step), scaled_size(w, 1.0 / step)
        if nh * 2 <= height or nw * 2 <= width:
            return count
        h, w = nh, nw
        count += 1


def build_ground_truth(src: Image, step: float = 1.25, r: int = 2, cfa: CfaSpec = RGGB,
                       patch_size: int = 64) -> Image:
    """由原图构建 GT

    Args:
        src: 三通道原图
        step: 渐进缩放的步进因子（> 1）
        r: 放大倍数
        cfa: CFA（决定最终裁剪的整除单位 2·r·s）
        patch_size: 训练补丁边长，用于最小尺寸检查

    Returns:
        边长约为原图一半、可被 2·r·s 整除的 GT

    Raises:
        DimensionError: 原图小于最小尺寸或不是三通道
        ValueError: step 不大于 1
    """
    if step <= 1.0:
        raise ValueError(f"缩放步进因子必须大于 1，实际: {step}")
    if src.channels != 3:
        raise DimensionError(f"原图必须是三通道，实际通道数: {src.channels}")
    minimum = minimum_source_size(r, patch_size)
    if src.height < minimum or src.width < minimum:
        raise DimensionError(f"原图 {src.height}×{src.width} 小于最小尺寸 {minimum}×{minimum}")

    steps = downsizing_steps(src.height, src.width, step)
    current = src
    for _ in range(steps):
        current = resize_fractional(current, 1.0 / step)
    current = resize_to(current, src.height // 2, src.width // 2)

    unit = 2 * r * cfa.period
    height = current.height - current.height % unit
    width = current.width - current.width % unit
    logger.debug(f"GT 构建: {src.height}×{src.width} → {steps} 次缩放 → {height}×{width}")
    return crop(current, 0, 0, height, width)


def build_input(gt: Image, r: int = 2, cfa: CfaSpec = RGGB) -> Image:
    """由 GT 生成 Bayer 输入 form_bayer(gt, r, cfa, σ=0)"""
    return form_bayer(gt, r, cfa, 0.0)


def list_images(input_dir: PathLike) -> List[Path]:
    """按文件名排序列出目录中的图像"""
    input_dir = Path(input_dir)
    if not input_dir.is_dir():
        raise IOError(f"输入目录不存在: {input_dir}")
    return sorted(p for p in input_dir.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def _process_one(path: Path, output_dir: Path, step: float, r: int, cfa: CfaSpec,
                 patch_size: int) -> Optional[ManifestEntry]:
    try:
        src = load_image(path)
    except IOError as e:
        logger.warning(f"无法读取输入，已跳过: {path.name}，{e}")
        return None
    if src.channels != 3:
        logger.warning(f"跳过非彩色图像: {path.name}")
        return None
    try:
        gt = build_ground_truth(src, step, r, cfa, patch_size)
    except DimensionError as e:
        logger.warning(f"跳过 {path.name}: {e}")
        return None
    bayer = build_input(gt, r, cfa)

    gt_path = output_dir / "gt" / f"{path.stem}.png"
    bayer_path = output_dir / "bayer" / f"{path.stem}.pgm"
    save_png(gt, gt_path, bits=16)
    save_pgm(bayer, bayer_path, bits=16)
    logger.info(f"已处理: {path.name}，GT {gt.height}×{gt.width}，Bayer {bayer.height}×{bayer.width}")
    return ManifestEntry(gt_path, bayer_path, sha256_files(gt_path, bayer_path))


def build_dataset(input_dir: PathLike, output_dir: PathLike, step: float = 1.25, r: int = 2,
                  cfa: CfaSpec = RGGB, holdout: int = 0, seed: int = 0, patch_size: int = 64,
                  threads: Optional[int] = None) -> Tuple[DatasetManifest, Optional[DatasetManifest]]:
    """构建数据集

    Args:
        input_dir: 原图目录
        output_dir: 输出目录（写入 gt/、bayer/、manifest.tsv 与可选的 holdout.tsv）
        step: 渐进缩放步进因子
        r: 放大倍数
        cfa: CFA
        holdout: 随机留出作为测试集的图像数
        seed: 留出选择的随机种子
        patch_size: 训练补丁边长
        threads: 并行线程数，None 时由 DJSR_THREADS 决定

    Returns:
        (训练清单, 留出清单或 None)

    Raises:
        ConfigError: 可用图像数不足以留出 holdout 张
    """
    output_dir = Path(output_dir)
    sources = list_images(input_dir)
    if not sources:
        raise IOError(f"输入目录中没有图像: {input_dir}")
    workers = threads or thread_count()
    logger.info(f"开始构建数据集: {len(sources)} 张原图，step={step}，r={r}，cfa={cfa.name}，线程数 {workers}")

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda p: _process_one(p, output_dir, step, r, cfa, patch_size), sources))
    entries = [entry for entry in results if entry is not None]
    skipped = [path.name for path, entry in zip(sources, results) if entry is None]
    if skipped:
        logger.warning(f"以下 {len(skipped)} 个输入未能处理: {', '.join(skipped)}")
    if not entries:
        raise IOError(f"全部 {len(sources)} 个输入均未能处理: {input_dir}")

    if holdout < 0 or holdout > len(entries):
        raise ConfigError(f"留出数量 {holdout} 超出可用图像数 {len(entries)}")
    held = set()
    if holdout:
        rng = np.random.default_rng(seed)
        held = set(int(i) for i in rng.choice(len(entries), size=holdout, replace=False))

    train = DatasetManifest([e for i, e in enumerate(entries) if i not in held], step, r, cfa.name)
    write_manifest(train, output_dir / MANIFEST_NAME)
    test = None
    if holdout:
        test = DatasetManifest([e for i, e in enumerate(entries) if i in held], step, r, cfa.name)
        write_manifest(test, output_dir / HOLDOUT_NAME)
    logger.info(f"数据集构建完成: 训练 {len(train)} 对，留出 {holdout} 对，跳过 {len(skipped)} 张")
    return train, test
