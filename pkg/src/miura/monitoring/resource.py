import os
from typing import Any, Dict

import psutil


class ResourceMonitor:
    """Process snapshot recorded in run manifests (skipped in reproducible runs)."""

    def __init__(self) -> None:
        self.proc = psutil.Process(os.getpid())

    def snapshot(self) -> Dict[str, Any]:
        mem = self.proc.memory_info().rss / (1024**2)
        times = self.proc.cpu_times()
        return {"memory_mb": round(mem, 3), "cpu_user_sec": round(times.user, 3),
                "cpu_count": psutil.cpu_count(logical=True)}
