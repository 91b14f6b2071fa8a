"""数据集清单

UTF-8 文本，每行 `gt_path<TAB>bayer_path<TAB>sha256`，路径相对于清单所在目录；
开头的 `# key=value` 注释行记录构建参数。
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Union

from src.errors import ManifestError
from src.utils.file_manager import atomic_write_text, sha256_files

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MANIFEST_NAME = "manifest.tsv"
HOLDOUT_NAME = "holdout.tsv"


@dataclass
class ManifestEntry:
    """清单中的一对图像（绝对路径）"""
    gt_path: Path
    bayer_path: Path
    sha256: str

    @property
    def name(self) -> str:
        return self.gt_path.stem


@dataclass
class DatasetManifest:
    """数据集清单

    Attributes:
        entries: 图像对列表
        step: 渐进缩放的步进因子
        r: 放大倍数
        cfa: CFA 名称
    """
    entries: List[ManifestEntry] = field(default_factory=list)
    step: float = 1.25
    r: int = 2
    cfa: str = "RGGB"

    def __len__(self) -> int:
        return len(self.entries)

    def header(self) -> Dict[str, str]:
        return {"step": repr(self.step), "r": str(self.r), "cfa": self.cfa}


def write_manifest(manifest: DatasetManifest, path: PathLike) -> Path:
    """写出清单（原子替换）"""
    path = Path(path)
    root = path.parent.resolve()
    lines = [f"# {key}={value}" for key, value in manifest.header().items()]
    for entry in manifest.entries:
        gt = Path(entry.gt_path).resolve().relative_to(root).as_posix()
        bayer = Path(entry.bayer_path).resolve().relative_to(root).as_posix()
        lines.append(f"{gt}\t{bayer}\t{entry.sha256}")
    atomic_write_text(path, "\n".join(lines) + "\n")
    logger.info(f"清单已写出: {path}，图像对数: {len(manifest)}")
    return path


def load_manifest(path: PathLike, verify: bool = True) -> DatasetManifest:
    """读取并校验清单

    Args:
        path: 清单文件路径
        verify: 是否校验每对文件的 SHA-256

    Raises:
        ManifestError: 清单不存在、格式错误、文件缺失或哈希不匹配
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"清单文件不存在: {path}")
    root = path.parent
    header: Dict[str, str] = {}
    entries: List[ManifestEntry] = []
    for number, line in enumerate(path.read_text(encoding='utf-8').splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith('#'):
            key, sep, value = line[1:].strip().partition('=')
            if sep:
                header[key.strip()] = value.strip()
            continue
        parts = line.split('\t')
        if len(parts) != 3:
            raise ManifestError(f"{path}:{number} 应有 3 列，实际 {len(parts)} 列")
        gt, bayer = root / parts[0], root / parts[1]
        for file_path in (gt, bayer):
            if not file_path.is_file():
                raise ManifestError(f"{path}:{number} 引用的文件不存在: {file_path}")
        if verify and sha256_files(gt, bayer) != parts[2]:
            raise ManifestError(f"{path}:{number} 哈希不匹配: {gt.name}")
        entries.append(ManifestEntry(gt, bayer, parts[2]))

    try:
        manifest = DatasetManifest(
            entries=entries,
            step=float(header.get("step", 1.25)),
            r=int(header.get("r", 2)),
            cfa=header.get("cfa", "RGGB"),
        )
    except ValueError as e:
        raise ManifestError(f"{path} 头部参数格式错误: {e}")
    logger.info(f"已加载清单: {path}，图像对数: {len(manifest)}")
    return manifest
