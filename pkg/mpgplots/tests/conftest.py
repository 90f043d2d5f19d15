import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from trace_helpers import band_files, seed_files, sweep_files  # noqa: F401
