"""
Report files written by the benchmark: CSV tables and JSON-lines records.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Iterable

from pydantic import BaseModel

from scenarios.beta.benchmark import ResultRow

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ["method", "param1", "param2", "mean_mse", "std_mse", "hyper_r2"]


def write_table_csv(rows: Iterable[ResultRow], path: str | Path) -> Path:
    """One CSV row per grid setting, columns in TABLE_COLUMNS order"""
    path = Path(path)
    rows = list(rows)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=TABLE_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(row.model_dump() for row in rows)
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path


def read_table_csv(path: str | Path) -> list[ResultRow]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return [ResultRow.model_validate(record) for record in csv.DictReader(f)]


def write_jsonl(records: Iterable[BaseModel], path: str | Path) -> Path:
    path = Path(path)
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record.model_dump(mode="json"), sort_keys=True) + "\n")
            count += 1
    logger.info(f"Wrote {count} records to {path}")
    return path


def write_json(record: BaseModel, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(record.model_dump(mode="json"), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path
