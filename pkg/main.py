#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Bayer 联合去马赛克与超分辨率工具 - 主程序入口

使用方法:
    python main.py dataset build --input-dir raw/ --output-dir data/ --holdout 10
    python main.py train --manifest data/manifest.tsv --out runs/desk
    python main.py eval --checkpoint runs/desk/latest.djsr --manifest data/holdout.tsv --baseline malvar-bicubic
    python main.py infer --checkpoint runs/desk/latest.djsr --input shot.pgm --output shot.png
    python main.py gui
"""

import sys
import traceback
from pathlib import Path

# 添加项目根目录到Python路径
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

try:
    from src.cli import main
except ImportError as e:
    print(f"错误: 无法导入应用程序模块: {e}")
    print("请确保所有依赖包已正确安装（uv sync 或 pip install -e .）")
    sys.exit(1)


if __name__ == "__main__":
    # 设置异常处理
    sys.excepthook = lambda exc_type, exc_value, exc_traceback: traceback.print_exception(
        exc_type, exc_value, exc_traceback)

    sys.exit(main())
