"""
Trajectory recording and CSV export (one row per simulated day).
"""
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd

from app.simulation.engine import high_risk_count, mean_loneliness
from app.simulation.models import PolicyParams, World


TRAJECTORY_COLUMNS = [
    "day",
    "mean_loneliness",
    "theta_s",
    "theta_t",
    "theta_p",
    "visits_today",
    "high_risk_count",
]


class TrajectoryRecorder:
    """Collects the per-day series a run reports and plots from"""

    def __init__(self):
        self.rows: List[Dict[str, Optional[float]]] = []

    def record(self, world: World, policy: Optional[PolicyParams]) -> None:
        self.rows.append({
            "day": world.day,
            "mean_loneliness": mean_loneliness(world),
            "theta_s": policy.theta_s if policy else None,
            "theta_t": policy.theta_t if policy else None,
            "theta_p": policy.theta_p if policy else None,
            "visits_today": world.visits_today,
            "high_risk_count": high_risk_count(world),
        })

    def column(self, name: str) -> list:
        return [row[name] for row in self.rows]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=TRAJECTORY_COLUMNS)


def write_trajectory_csv(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, columns=TRAJECTORY_COLUMNS, lineterminator="\n")
    return path
