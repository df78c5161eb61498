"""
Experiment Suite
Cartesian product of conditions x seeds, optional process pool, and the
results/summary/pairwise files.
"""
import json
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd
from pydantic import BaseModel, Field
from tqdm import tqdm

from app.control.models import ControlConfig
from app.core.exceptions import InsufficientSampleError, InvalidConfigurationError, RunAbortedError
from app.diagnosis.models import BackendConfig
from app.experiments.conditions import Condition, seed_split
from app.experiments.runner import RunResult, run_condition
from app.experiments.stats import GroupSummary, PairwiseComparison, pairwise_table, summary_table
from app.simulation.config import DynamicsConfig

logger = logging.getLogger(__name__)


RESULTS_FILE = "results.csv"
SUMMARY_FILE = "summary.json"
PAIRWISE_FILE = "pairwise.json"
AUDIT_SUBDIR = "audit"

RESULTS_COLUMNS = ["condition", "seed", "split", "final_mean_loneliness", "visit_count", "llm_call_count"]


class AbortedRun(BaseModel):
    condition: Condition
    seed: int
    reason: str
    audit_path: Optional[str] = None


class SuiteResult(BaseModel):
    results: List[RunResult] = Field(default_factory=list)
    aborted: List[AbortedRun] = Field(default_factory=list)
    summary: Dict[str, GroupSummary] = Field(default_factory=dict)
    pairwise: List[PairwiseComparison] = Field(default_factory=list)

    def finals(self) -> Dict[Condition, List[float]]:
        return finals_by_condition(self.results)


def finals_by_condition(results: Sequence[RunResult]) -> Dict[Condition, List[float]]:
    finals: Dict[Condition, List[float]] = {}
    for result in results:
        finals.setdefault(result.condition, []).append(result.final_mean_loneliness)
    return finals


def _run_one(job: Tuple[Condition, int, dict]) -> Tuple[Condition, int, Optional[RunResult], Optional[AbortedRun]]:
    condition, seed, kwargs = job
    try:
        return condition, seed, run_condition(condition, seed, **kwargs), None
    except RunAbortedError as e:
        audit_path = str(e.audit_path) if e.audit_path else None
        return condition, seed, None, AbortedRun(condition=condition, seed=seed, reason=str(e), audit_path=audit_path)


def run_suite(
    conditions: Sequence[Condition],
    seeds: Sequence[int],
    dynamics: Optional[DynamicsConfig] = None,
    control: Optional[ControlConfig] = None,
    backend: Optional[BackendConfig] = None,
    n_agents: Optional[int] = None,
    n_days: Optional[int] = None,
    output_dir: Optional[Path] = None,
    workers: int = 1,
    equal_var: bool = True,
    progress: bool = False,
) -> SuiteResult:
    """
    Run every (condition, seed) pair. Results come back ordered by condition
    then seed regardless of completion order; aborted runs are listed
    separately and left out of the statistics.
    """
    if not seeds:
        raise InvalidConfigurationError("run_suite needs at least one seed")
    if not conditions:
        raise InvalidConfigurationError("run_suite needs at least one condition")

    audit_dir = Path(output_dir) / AUDIT_SUBDIR if output_dir is not None else None
    kwargs = dict(
        dynamics=dynamics,
        control=control,
        backend=backend,
        n_agents=n_agents,
        n_days=n_days,
        audit_dir=audit_dir,
    )
    jobs = [(condition, seed, kwargs) for condition in conditions for seed in seeds]
    outcomes = {}

    with tqdm(total=len(jobs), desc="runs", disable=not progress) as bar:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_run_one, job) for job in jobs]
                for future in as_completed(futures):
                    condition, seed, result, aborted = future.result()
                    outcomes[(condition, seed)] = (result, aborted)
                    bar.update(1)
        else:
            for job in jobs:
                condition, seed, result, aborted = _run_one(job)
                outcomes[(condition, seed)] = (result, aborted)
                bar.update(1)

    suite = SuiteResult()
    for condition, seed, _ in jobs:
        result, aborted = outcomes[(condition, seed)]
        if result is not None:
            suite.results.append(result)
        else:
            logger.warning(f"[Suite] Excluded {condition.value} seed={seed}: {aborted.reason}")
            suite.aborted.append(aborted)

    finals = suite.finals()
    suite.summary = summary_table(finals)
    suite.pairwise = pairwise_table(finals, equal_var=equal_var)
    logger.info(
        f"[Suite] {len(suite.results)} run(s) complete, {len(suite.aborted)} aborted"
    )

    if output_dir is not None:
        write_suite_outputs(suite, Path(output_dir), seeds)
    return suite


def results_frame(results: Sequence[RunResult]) -> pd.DataFrame:
    rows = [
        {
            "condition": r.condition.value,
            "seed": r.seed,
            "split": r.split,
            "final_mean_loneliness": r.final_mean_loneliness,
            "visit_count": r.visit_count,
            "llm_call_count": r.llm_call_count,
        }
        for r in results
    ]
    return pd.DataFrame(rows, columns=RESULTS_COLUMNS)


def _write_json(path: Path, payload) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return path


def write_stats_outputs(
    summary: Dict[str, GroupSummary],
    pairwise: List[PairwiseComparison],
    output_dir: Path,
    seeds: Sequence[int],
    aborted: Sequence[AbortedRun] = (),
) -> Tuple[Path, Path]:
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    summary_payload = {
        "seeds": [{"seed": s, "split": seed_split(s)} for s in seeds],
        "conditions": {
            key: {"label": Condition(key).label, **group.model_dump()}
            for key, group in summary.items()
        },
        "excluded_runs": [a.model_dump(mode="json") for a in aborted],
    }
    pairwise_payload = [
        {**row.model_dump(), "significance": row.significance} for row in pairwise
    ]
    return (
        _write_json(output_dir / SUMMARY_FILE, summary_payload),
        _write_json(output_dir / PAIRWISE_FILE, pairwise_payload),
    )


def write_suite_outputs(suite: SuiteResult, output_dir: Path, seeds: Sequence[int]) -> Path:
    output_dir.mkdir(parents=True, exist_ok=True)
    results_path = output_dir / RESULTS_FILE
    results_frame(suite.results).to_csv(results_path, index=False, lineterminator="\n")
    write_stats_outputs(suite.summary, suite.pairwise, output_dir, seeds, suite.aborted)
    logger.info(f"[Suite] Wrote {results_path}")
    return results_path


def load_results_csv(path: Path) -> Tuple[Dict[Condition, List[float]], List[int]]:
    """Final means per condition and the seeds seen, from a results.csv"""
    path = Path(path)
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InvalidConfigurationError(f"cannot read {path}: {e}") from e

    missing = {"condition", "seed", "final_mean_loneliness"} - set(frame.columns)
    if missing:
        raise InvalidConfigurationError(f"{path} lacks column(s) {sorted(missing)}")

    finals: Dict[Condition, List[float]] = {}
    seeds: List[int] = []
    for row in frame.itertuples(index=False):
        try:
            condition = Condition(row.condition)
        except ValueError as e:
            raise InvalidConfigurationError(f"{path}: unknown condition {row.condition!r}") from e
        finals.setdefault(condition, []).append(float(row.final_mean_loneliness))
        if int(row.seed) not in seeds:
            seeds.append(int(row.seed))
    return finals, seeds


def recompute_stats(results_csv: Path, output_dir: Path, equal_var: bool = True) -> Tuple[Dict[str, GroupSummary], List[PairwiseComparison]]:
    finals, seeds = load_results_csv(results_csv)
    if not finals:
        raise InsufficientSampleError(f"{results_csv} has no runs")
    summary = summary_table(finals)
    pairwise = pairwise_table(finals, equal_var=equal_var)
    write_stats_outputs(summary, pairwise, output_dir, seeds)
    return summary, pairwise
