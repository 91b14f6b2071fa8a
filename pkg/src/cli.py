"""命令行入口

子命令：
    dataset build   由原图目录构建 GT/Bayer 对与清单
    dataset synth   生成合成语料
    train           训练并写出检查点与 CSV 日志
    eval            逐图评估，输出 CSV 报告
    infer           对单张 Bayer 图像推理
    gui             启动图形界面

配置优先级：默认设置 < --config 配置文件 < 命令行参数。
"""
import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path
from typing import Any, Dict, List, Optional

from src import __version__
from src.dataset import build_dataset, load_manifest, write_synthetic_corpus
from src.dataset.manifest import HOLDOUT_NAME, MANIFEST_NAME
from src.errors import ConfigError, DimensionError, DjsrError
from src.imaging import CfaSpec, Image, load_image, save_png
from src.metrics import evaluate
from src.model import ModelConfig, infer_tiled
from src.training import (TrainConfig, Trainer, corpus_from_manifest,
                          load_checkpoint)
from src.utils.file_manager import FileManager, load_config

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _model_keys() -> List[str]:
    return [f.name for f in fields(ModelConfig)]


def _train_keys() -> List[str]:
    return [f.name for f in fields(TrainConfig)]


def build_parser() -> argparse.ArgumentParser:
    """构建参数解析器"""
    parser = argparse.ArgumentParser(
        prog="bayer2sr",
        description="Bayer 马赛克联合去马赛克与超分辨率",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, default=None,
                        help="配置文件（key = value 行，# 为注释），命令行参数优先")
    parser.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="日志级别（默认 INFO）")
    commands = parser.add_subparsers(dest="command", required=True, metavar="<command>")

    # dataset
    dataset = commands.add_parser("dataset", help="数据集构建与合成语料")
    dataset_commands = dataset.add_subparsers(dest="dataset_command", required=True, metavar="<action>")

    build = dataset_commands.add_parser("build", help="由原图目录构建 GT/Bayer 对与清单")
    build.add_argument("--input-dir", type=Path, required=True, help="原图目录（边长 ≥ 512 的彩色图像）")
    build.add_argument("--output-dir", type=Path, required=True, help="输出目录")
    build.add_argument("--step", type=float, default=1.25, help="渐进缩放步进因子（默认 1.25）")
    build.add_argument("--cfa", default=None, help="CFA：rggb、bggr、grbg、gbrg 或 xtrans（默认 rggb）")
    build.add_argument("--r", type=int, default=2, help="放大倍数（默认 2）")
    build.add_argument("--holdout", type=int, default=0, help="随机留出作为测试集的图像数（写入 holdout.tsv）")
    build.add_argument("--seed", type=int, default=0, help="留出选择的随机种子")
    build.add_argument("--patch-size", type=int, default=64, help="训练补丁边长，决定原图最小尺寸")

    synth = dataset_commands.add_parser("synth", help="生成合成语料（8 位 PNG）")
    synth.add_argument("--output-dir", type=Path, required=True, help="输出目录")
    synth.add_argument("--count", type=int, default=200, help="图像数（默认 200）")
    synth.add_argument("--size", type=int, default=512, help="边长（默认 512）")
    synth.add_argument("--seed", type=int, default=0, help="随机种子")

    # train
    train = commands.add_parser("train", help="训练模型")
    train.add_argument("--manifest", type=Path, required=True, help="训练清单 manifest.tsv")
    train.add_argument("--out", type=Path, required=True, help="检查点与日志输出目录")
    train.add_argument("--preset", choices=["desk", "paper"], default=None, help="模型预设（默认 desk）")
    train.add_argument("--steps", type=int, default=None, help="总训练步数 max_steps")
    train.add_argument("--seed", type=int, default=None, help="随机种子")
    train.add_argument("--batch", type=int, default=None, help="小批量大小（默认 16）")
    train.add_argument("--lr0", type=float, default=None, help="初始学习率（默认 1e-4）")
    train.add_argument("--dtype", choices=["float32", "float64"], default=None, help="元素类型")
    train.add_argument("--val-manifest", type=Path, default=None, help="验证清单（默认用训练清单采样）")
    train.add_argument("--resume", type=Path, default=None, help="从该检查点继续训练")

    # eval
    evaluate = commands.add_parser("eval", help="逐图评估 PSNR/SSIM")
    evaluate.add_argument("--checkpoint", type=Path, required=True, help="检查点文件")
    evaluate.add_argument("--manifest", type=Path, required=True, help="评估清单")
    evaluate.add_argument("--baseline", default=None, help="同时评估顺序基线，如 bilinear-bicubic、malvar-bicubic")
    evaluate.add_argument("--tile", type=int, default=None, help="分块边长（低分辨率像素），0 表示整图推理")
    evaluate.add_argument("--report", type=Path, default=Path("eval_report.csv"), help="CSV 报告路径")

    # infer
    infer = commands.add_parser("infer", help="对单张 Bayer 图像推理")
    infer.add_argument("--checkpoint", type=Path, required=True, help="检查点文件")
    infer.add_argument("--input", type=Path, required=True, help="单通道 Bayer 图像（PGM/PNG）")
    infer.add_argument("--output", type=Path, required=True, help="输出 PNG")
    infer.add_argument("--tile", type=int, default=None, help="分块边长（低分辨率像素），0 表示整图推理")
    infer.add_argument("--bits", type=int, choices=[8, 16], default=8, help="输出位深（默认 8）")

    # gui
    commands.add_parser("gui", help="启动图形界面")
    return parser


def setup_logging(level: str) -> None:
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format=LOG_FORMAT, force=True)


def resolve_settings(args: argparse.Namespace) -> Dict[str, Any]:
    """合并默认设置、配置文件与命令行参数"""
    settings = load_config(args.config, _model_keys() + _train_keys())
    overrides = {
        "log_level": args.log_level,
        "preset": getattr(args, "preset", None),
        "cfa": getattr(args, "cfa", None),
        "tile": getattr(args, "tile", None),
        "max_steps": getattr(args, "steps", None),
        "batch": getattr(args, "batch", None),
        "lr0": getattr(args, "lr0", None),
        "dtype": getattr(args, "dtype", None),
    }
    if args.command == "train" and args.seed is not None:
        overrides["seed"] = args.seed
    settings.update({k: v for k, v in overrides.items() if v is not None})
    return settings


def model_config_from(settings: Dict[str, Any], **fixed: int) -> ModelConfig:
    """预设 + 配置文件中的模型键 + 由数据决定的字段"""
    values = ModelConfig.preset(str(settings["preset"])).to_mapping()
    values.update({k: settings[k] for k in _model_keys() if k in settings})
    values.update(fixed)
    return ModelConfig.from_mapping(values)


def train_config_from(settings: Dict[str, Any]) -> TrainConfig:
    return TrainConfig.from_mapping({k: settings[k] for k in _train_keys() if k in settings})


def _tile(settings: Dict[str, Any]) -> Optional[int]:
    try:
        tile = int(settings.get("tile") or 0)
    except ValueError:
        raise ConfigError(f"tile 必须是整数，实际: {settings.get('tile')!r}")
    return tile or None


def _log_resolved(name: str, values: Dict[str, Any]) -> None:
    text = ", ".join(f"{k}={v}" for k, v in values.items())
    logger.info(f"{name}: {text}")


def cmd_dataset_build(args: argparse.Namespace, settings: Dict[str, Any], files: FileManager) -> None:
    cfa = CfaSpec.by_name(str(settings["cfa"]))
    files.register(args.output_dir)
    files.register(args.output_dir / MANIFEST_NAME)
    if args.holdout:
        files.register(args.output_dir / HOLDOUT_NAME)
    build_dataset(args.input_dir, args.output_dir, step=args.step, r=args.r, cfa=cfa,
                  holdout=args.holdout, seed=args.seed, patch_size=args.patch_size)


def cmd_dataset_synth(args: argparse.Namespace, settings: Dict[str, Any], files: FileManager) -> None:
    files.register(args.output_dir)
    write_synthetic_corpus(args.output_dir, args.count, args.size, args.seed)


def cmd_train(args: argparse.Namespace, settings: Dict[str, Any], files: FileManager) -> None:
    manifest = load_manifest(args.manifest)
    cfa = CfaSpec.by_name(manifest.cfa)
    resume = load_checkpoint(args.resume) if args.resume else None
    if resume is not None:
        model_config = resume.model_config
    else:
        model_config = model_config_from(settings, cfa_period=cfa.period, upscale=manifest.r)
    train_config = train_config_from(settings)
    _log_resolved("模型配置", model_config.to_mapping())
    _log_resolved("训练配置", train_config.to_mapping())

    val_corpus = None
    if args.val_manifest:
        val_manifest = load_manifest(args.val_manifest)
        if val_manifest.cfa != manifest.cfa or val_manifest.r != manifest.r:
            raise ConfigError("验证清单的 CFA 或 r 与训练清单不一致")
        val_corpus = corpus_from_manifest(val_manifest)

    files.register(args.out)
    trainer = Trainer(model_config, train_config, corpus_from_manifest(manifest), args.out, cfa,
                      resume, val_corpus)
    trainer.run()


def cmd_eval(args: argparse.Namespace, settings: Dict[str, Any], files: FileManager) -> None:
    ckpt = load_checkpoint(args.checkpoint)
    manifest = load_manifest(args.manifest)
    tile = _tile(settings)
    _log_resolved("评估配置", {"checkpoint": args.checkpoint, "manifest": args.manifest,
                            "baseline": args.baseline, "tile": tile, **ckpt.model_config.to_mapping()})
    report = evaluate(ckpt.params, ckpt.model_config, manifest, tile=tile, baseline=args.baseline)
    files.register(args.report)
    report.save(args.report)
    sys.stdout.write(report.to_csv())


def cmd_infer(args: argparse.Namespace, settings: Dict[str, Any], files: FileManager) -> None:
    ckpt = load_checkpoint(args.checkpoint)
    config = ckpt.model_config
    tile = _tile(settings)
    _log_resolved("推理配置", {"checkpoint": args.checkpoint, "input": args.input, "output": args.output,
                            "tile": tile, "bits": args.bits, **config.to_mapping()})
    bayer = load_image(args.input)
    if bayer.channels != 1:
        raise DimensionError(f"推理输入必须是单通道 Bayer 图像，实际通道数: {bayer.channels}")
    output = infer_tiled(ckpt.params, config, bayer.plane(), tile)
    files.register(args.output)
    save_png(Image.from_array(output), args.output, bits=args.bits)
    logger.info(f"推理完成: {args.input} → {args.output}（{output.shape[1]}×{output.shape[2]}）")


def cmd_gui(args: argparse.Namespace, settings: Dict[str, Any], files: FileManager) -> int:
    from src.app_controller import AppController

    controller = AppController(settings)
    try:
        return controller.run()
    finally:
        controller.shutdown()


_COMMANDS = {
    ("dataset", "build"): cmd_dataset_build,
    ("dataset", "synth"): cmd_dataset_synth,
    ("train", None): cmd_train,
    ("eval", None): cmd_eval,
    ("infer", None): cmd_infer,
    ("gui", None): cmd_gui,
}


def main(argv: Optional[List[str]] = None) -> int:
    """命令行主函数

    Returns:
        退出码：产物完整生成时为 0，否则为 1（部分产物已删除）
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level or "INFO")

    files = FileManager()
    try:
        settings = resolve_settings(args)
        setup_logging(str(settings["log_level"]))
        _log_resolved("运行配置", {"command": args.command,
                               **{k: v for k, v in vars(args).items() if k != "command"}, **settings})
        handler = _COMMANDS[(args.command, getattr(args, "dataset_command", None))]
        with files:
            result = handler(args, settings, files)
        return int(result or 0)
    except (DjsrError, OSError, ValueError) as e:
        logger.error(f"命令失败: {e}")
        return 1
    except KeyboardInterrupt:
        logger.error("用户中断")
        return 1
