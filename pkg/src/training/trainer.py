"""训练循环

采样批次 → 前向 → MSE → 反向 → ADAM（学习率按 lr_at 调度）。
批次由全局步数确定性地决定，因此从检查点恢复后的轨迹与不中断训练逐位一致。
"""
import csv
import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.dataset import build_input, load_manifest, sample_from_corpus
from src.dataset.manifest import DatasetManifest
from src.errors import ConfigError, NumericError
from src.imaging import RGGB, CfaSpec, Image, load_image
from src.metrics.quality import psnr, ssim
from src.model import ModelConfig, build, forward
from src.tensor import GradTape, Tensor
from src.training.checkpoint import Checkpoint, save_checkpoint
from src.training.config import TrainConfig
from src.training.losses import mse_loss
from src.training.optimizer import OptimState, adam_step, lr_at

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
Corpus = List[Tuple[str, Image, Image]]

LOG_NAME = "train_log.csv"
LOG_COLUMNS = ["step", "lr", "loss", "val_psnr", "val_ssim"]
LATEST_NAME = "latest.djsr"

# 验证补丁流的种子偏移，与训练流区分
_VAL_SEED_OFFSET = 7919


def corpus_from_images(images: Sequence[Tuple[str, Image]], r: int = 2, cfa: CfaSpec = RGGB) -> Corpus:
    """由 GT 图像构建语料，Bayer 由成像模型现场生成"""
    return [(name, gt, build_input(gt, r, cfa)) for name, gt in images]


def corpus_from_manifest(manifest: DatasetManifest) -> Corpus:
    """加载清单中的 GT，Bayer 按清单记录的 r 与 CFA 重新生成"""
    cfa = CfaSpec.by_name(manifest.cfa)
    images = [(entry.name, load_image(entry.gt_path)) for entry in manifest.entries]
    return corpus_from_images(images, manifest.r, cfa)


class Trainer:
    """训练器

    唯一持有参数与优化器状态；验证在参数快照上执行。
    """

    def __init__(self, model_config: ModelConfig, train_config: TrainConfig, corpus: Corpus,
                 out_dir: Optional[PathLike] = None, cfa: CfaSpec = RGGB,
                 resume: Optional[Checkpoint] = None, val_corpus: Optional[Corpus] = None):
        """初始化训练器

        Args:
            model_config: 模型配置
            train_config: 训练配置
            corpus: (来源标识, GT, Bayer) 列表
            out_dir: 检查点与日志目录，None 表示不写文件
            cfa: 与语料一致的 CFA
            resume: 从该检查点继续训练
            val_corpus: 验证语料，None 时使用训练语料
        """
        self.logger = logging.getLogger(__name__)
        if not corpus:
            raise ConfigError("训练语料为空")
        if cfa.period != model_config.cfa_period:
            raise ConfigError(f"CFA 周期 {cfa.period} 与模型 cfa_period={model_config.cfa_period} 不一致")

        self.model_config = model_config
        self.train_config = train_config
        self.corpus = corpus
        self.val_corpus = val_corpus or corpus
        self.cfa = cfa
        self.out_dir = Path(out_dir) if out_dir is not None else None
        dtype = train_config.np_dtype

        if resume is not None:
            if resume.model_config != model_config:
                raise ConfigError("检查点的模型配置与当前配置不一致")
            resume.params.check_against(model_config)
            self.params = resume.params.astype(dtype)
            self.state = OptimState(
                {k: v.astype(dtype) for k, v in resume.state.m.items()},
                {k: v.astype(dtype) for k, v in resume.state.v.items()},
                resume.state.t,
            )
            self.step = resume.step
            self.logger.info(f"从检查点恢复训练，step={self.step}")
        else:
            self.params = build(model_config, train_config.seed, dtype)
            self.state = OptimState.zeros_like(self.params)
            self.step = 0
        self._val_set: Optional[Tuple[Tensor, List[Image]]] = None

    def _patch(self, corpus: Corpus, index: int, seed: int):
        cfg = self.train_config
        return sample_from_corpus(corpus, index, seed, cfg.patch_size, self.model_config.upscale, self.cfa)

    def batch_at(self, step: int) -> Tuple[Tensor, Tensor]:
        """全局步 step 的批次：补丁索引 step·batch … step·batch + batch − 1"""
        cfg = self.train_config
        pairs = [self._patch(self.corpus, step * cfg.batch + j, cfg.seed) for j in range(cfg.batch)]
        bayer = np.stack([p.bayer.data for p in pairs])
        target = np.stack([p.target.data for p in pairs])
        return Tensor(bayer, dtype=cfg.np_dtype), Tensor(target, dtype=cfg.np_dtype)

    def train_step(self) -> float:
        """执行一步更新，返回本步 loss"""
        bayer, target = self.batch_at(self.step)
        params = self.params.with_grad()
        with GradTape() as tape:
            tape.watch(params.values())
            pred = forward(params, self.model_config, bayer)
            loss = mse_loss(pred, target)
        grads = tape.backward(loss, list(params.values()))
        named = {name: grads[tensor.id] for name, tensor in params.items()}
        lr = lr_at(self.step, self.train_config)
        new_params, self.state = adam_step(params, named, self.state, lr, self.train_config)
        self.params = new_params.with_grad(False)
        self.step += 1
        return loss.item()

    def _validation_set(self) -> Tuple[Tensor, List[Image]]:
        if self._val_set is None:
            cfg = self.train_config
            pairs = [self._patch(self.val_corpus, i, cfg.seed + _VAL_SEED_OFFSET)
                     for i in range(cfg.val_patches)]
            bayer = Tensor(np.stack([p.bayer.data for p in pairs]), dtype=cfg.np_dtype)
            self._val_set = (bayer, [p.target for p in pairs])
        return self._val_set

    def validate(self) -> Tuple[float, float]:
        """在固定验证补丁上计算平均 PSNR/SSIM"""
        if self.train_config.val_patches == 0:
            return math.nan, math.nan
        bayer, targets = self._validation_set()
        output = forward(self.params, self.model_config, bayer)
        outputs = [Image.from_tensor(output, i) for i in range(len(targets))]
        psnr_values = [psnr(o, t) for o, t in zip(outputs, targets)]
        ssim_values = [ssim(o, t) for o, t in zip(outputs, targets)]
        return float(np.mean(psnr_values)), float(np.mean(ssim_values))

    def checkpoint(self) -> Checkpoint:
        return Checkpoint(self.model_config, self.train_config, self.step, self.params, self.state)

    def _save(self, name: str) -> None:
        if self.out_dir is not None:
            save_checkpoint(self.out_dir / name, self.checkpoint())

    def _log_row(self, row: List[str]) -> None:
        if self.out_dir is None:
            return
        path = self.out_dir / LOG_NAME
        is_new = not path.exists()
        with open(path, 'a', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, lineterminator='\n')
            if is_new:
                writer.writerow(LOG_COLUMNS)
            writer.writerow(row)

    def run(self, max_steps: Optional[int] = None) -> Checkpoint:
        """训练到 max_steps（默认 train_config.max_steps）

        Returns:
            结束时的检查点（out_dir 非空时同时写出 latest.djsr）

        Raises:
            NumericError: loss 或梯度出现 NaN/Inf，step 字段为出错步
        """
        cfg = self.train_config
        total = cfg.max_steps if max_steps is None else max_steps
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        self.logger.info(f"开始训练: step {self.step} → {total}，batch={cfg.batch}，lr0={cfg.lr0}")

        while self.step < total:
            lr = lr_at(self.step, cfg)
            try:
                loss = self.train_step()
            except NumericError as e:
                self.logger.error(f"训练在第 {self.step} 步出现数值错误: {e}")
                raise NumericError(f"训练在第 {self.step} 步出现非有限值: {e}", step=self.step) from e

            val_psnr = val_ssim = ""
            if cfg.val_every and self.step % cfg.val_every == 0:
                p, s = self.validate()
                val_psnr, val_ssim = f"{p:.6f}", f"{s:.6f}"
                self.logger.info(f"验证 step={self.step}: PSNR {p:.4f} dB，SSIM {s:.4f}")
            if self.step % cfg.log_every == 0 or val_psnr:
                self.logger.info(f"step={self.step} lr={lr:.3e} loss={loss:.6e}")
                self._log_row([str(self.step), repr(lr), repr(loss), val_psnr, val_ssim])
            if cfg.checkpoint_every and self.step % cfg.checkpoint_every == 0:
                self._save(f"step_{self.step:07d}.djsr")

        self._save(LATEST_NAME)
        self.logger.info(f"训练结束: step={self.step}")
        return self.checkpoint()


def train(model_config: ModelConfig, train_config: TrainConfig,
          dataset: Union[Corpus, DatasetManifest, PathLike], out_dir: Optional[PathLike] = None,
          cfa: Optional[CfaSpec] = None, resume: Optional[Checkpoint] = None,
          val_dataset: Optional[Union[Corpus, DatasetManifest, PathLike]] = None) -> Checkpoint:
    """训练便捷入口

    Args:
        dataset: 语料列表、清单对象或清单路径
        cfa: 语料为列表时使用的 CFA；清单时取清单记录的 CFA
    """
    def resolve(data) -> Tuple[Corpus, Optional[CfaSpec]]:
        if isinstance(data, (str, Path)):
            data = load_manifest(data)
        if isinstance(data, DatasetManifest):
            if data.r != model_config.upscale:
                raise ConfigError(f"清单的 r={data.r} 与模型 upscale={model_config.upscale} 不一致")
            return corpus_from_manifest(data), CfaSpec.by_name(data.cfa)
        return list(data), None

    corpus, manifest_cfa = resolve(dataset)
    val_corpus = resolve(val_dataset)[0] if val_dataset is not None else None
    trainer = Trainer(model_config, train_config, corpus, out_dir, cfa or manifest_cfa or RGGB,
                      resume, val_corpus)
    return trainer.run()
