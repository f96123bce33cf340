import os
import platform
from typing import Any

import numpy as np
import psutil

MEBIBYTE: int = 1 << 20


def resident_memory_mb() -> float:
    return psutil.Process(os.getpid()).memory_info().rss / MEBIBYTE


def host_info() -> dict[str, Any]:
    memory = psutil.virtual_memory()
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "platform": platform.platform(),
        "cpu_count": psutil.cpu_count(logical=True),
        "memory_total_mb": round(memory.total / MEBIBYTE, 1),
    }
