"""
Landmark CSV input and Procrustes solution output.

CSV columns: sample_id, ga_days, landmark_id, x_mm, y_mm, z_mm, present.
A landmark without a row for a sample counts as absent.
"""

import csv
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from ..utils.config import save_json
from ..utils.exceptions import ConfigError
from ..utils.logger import get_logger
from .procrustes import LandmarkConfig, ProcrustesSolution

logger = get_logger(__name__)

LANDMARK_COLUMNS = ("sample_id", "ga_days", "landmark_id", "x_mm", "y_mm", "z_mm", "present")

_TRUE = {"1", "true", "yes", "y", "t"}
_FALSE = {"0", "false", "no", "n", "f", ""}


def _parse_present(value: str, where: str) -> bool:
    key = value.strip().lower()
    if key in _TRUE:
        return True
    if key in _FALSE:
        return False
    raise ConfigError(f"{where}: present must be 0/1 or true/false, got {value!r}")


def read_landmark_csv(path: Union[str, Path]) -> Tuple[List[LandmarkConfig], List[str]]:
    """
    Read landmark configurations.

    Args:
        path: CSV file with a header row

    Returns:
        (configs in order of first appearance, landmark ids in order of first appearance)
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"No such file: {path}")
    rows: Dict[str, Dict[str, Tuple[np.ndarray, bool]]] = {}
    ga: Dict[str, float] = {}
    landmark_ids: List[str] = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        missing = [c for c in LANDMARK_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ConfigError(f"{path}: missing columns {missing}")
        for line, row in enumerate(reader, start=2):
            where = f"{path}:{line}"
            sid, lid = row["sample_id"].strip(), row["landmark_id"].strip()
            present = _parse_present(row["present"], where)
            try:
                ga_days = float(row["ga_days"])
                point = np.array([float(row[c]) if present else 0.0 for c in ("x_mm", "y_mm", "z_mm")])
            except ValueError as e:
                raise ConfigError(f"{where}: {e}") from e
            if sid in ga and ga[sid] != ga_days:
                raise ConfigError(f"{where}: sample {sid!r} has two gestational ages")
            ga[sid] = ga_days
            per_sample = rows.setdefault(sid, {})
            if lid in per_sample:
                raise ConfigError(f"{where}: landmark {lid!r} listed twice for sample {sid!r}")
            per_sample[lid] = (point, present)
            if lid not in landmark_ids:
                landmark_ids.append(lid)

    configs = []
    for sid, per_sample in rows.items():
        points = np.zeros((len(landmark_ids), 3))
        present = np.zeros(len(landmark_ids), dtype=bool)
        for k, lid in enumerate(landmark_ids):
            if lid in per_sample:
                points[k], present[k] = per_sample[lid]
        configs.append(LandmarkConfig(sid, ga[sid], points, present))
    logger.info(f"Read {len(configs)} samples x {len(landmark_ids)} landmarks from {path}")
    return configs, landmark_ids


def write_solution_json(solution: ProcrustesSolution, path: Union[str, Path], landmark_ids=None):
    """Write transforms and consensus as JSON."""
    save_json(solution.to_json(landmark_ids), path)
