"""数据集模块 - GT/Bayer 对构建、清单与补丁采样"""

from .builder import (build_dataset, build_ground_truth, build_input,
                      downsizing_steps, list_images, minimum_source_size)
from .manifest import (DatasetManifest, ManifestEntry, load_manifest,
                       write_manifest)
from .patches import PatchPair, sample_from_corpus, sample_patch, sample_patches
from .synthetic import KINDS, synthesize_image, write_synthetic_corpus

__all__ = [
    'DatasetManifest',
    'KINDS',
    'ManifestEntry',
    'PatchPair',
    'build_dataset',
    'build_ground_truth',
    'build_input',
    'downsizing_steps',
    'list_images',
    'load_manifest',
    'minimum_source_size',
    'sample_from_corpus',
    'sample_patch',
    'sample_patches',
    'synthesize_image',
    'write_manifest',
    'write_synthetic_corpus',
]
