"""
Result Repository

Experiment records as JSON lines, plot series as CSV and cube sets as text.
"""

import csv
import io
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

from config.logging_config import get_logger
from lab.cubes import CubeSet, CubeTree
from repositories.file_repository import FileRepository, json_default

logger = get_logger(__name__)

TIMESTAMP_FIELD = 'timestamp'


def _stamp(record: Dict[str, Any], timestamp: Optional[str]) -> Dict[str, Any]:
    out = dict(record)
    out[TIMESTAMP_FIELD] = timestamp or datetime.now(timezone.utc).isoformat()
    return out


def records_equal(left: Sequence[Dict[str, Any]], right: Sequence[Dict[str, Any]]) -> bool:
    """Compare record lists ignoring the timestamp field."""
    if len(left) != len(right):
        return False
    strip = lambda r: {k: v for k, v in r.items() if k != TIMESTAMP_FIELD}
    return all(strip(a) == strip(b) for a, b in zip(left, right))


class ResultRepository(FileRepository):
    """Repository for experiment artifacts"""

    def write_jsonl(self, file_path: Union[str, Path], records: Iterable[Dict[str, Any]],
                    timestamp: Optional[str] = None) -> bool:
        """
        Write one JSON object per line with sorted keys and a timestamp field.

        Returns:
            True if successful, False otherwise
        """
        try:
            lines = [json.dumps(_stamp(r, timestamp), sort_keys=True, default=json_default)
                     for r in records]
            ok = self.write_text(file_path, ''.join(line + '\n' for line in lines))
            if ok:
                logger.info(f"Wrote {len(lines)} records to {file_path}")
            return ok
        except (TypeError, ValueError) as e:
            logger.error(f"Error encoding records for {file_path}: {e}")
            return False

    def read_jsonl(self, file_path: Union[str, Path]) -> Optional[List[Dict[str, Any]]]:
        """Read a JSON-lines file, or None if missing or malformed."""
        content = self.read_text(file_path)
        if content is None:
            return None
        try:
            return [json.loads(line) for line in content.splitlines() if line.strip()]
        except json.JSONDecodeError as e:
            logger.error(f"Invalid JSON line in {file_path}: {e}")
            return None

    def write_csv(self, file_path: Union[str, Path], rows: Sequence[Dict[str, Any]],
                  columns: Optional[Sequence[str]] = None) -> bool:
        """Write plot rows; columns default to the sorted union of row keys."""
        columns = list(columns) if columns else sorted({k for row in rows for k in row})
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=columns, extrasaction='ignore', lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, '') for k in columns})
        return self.write_text(file_path, buffer.getvalue())

    def read_csv(self, file_path: Union[str, Path]) -> Optional[List[Dict[str, str]]]:
        content = self.read_text(file_path)
        if content is None:
            return None
        return list(csv.DictReader(io.StringIO(content)))

    def write_cubeset(self, file_path: Union[str, Path], cubes: CubeSet) -> bool:
        return self.write_text(file_path, cubes.to_text())

    def read_cubeset(self, file_path: Union[str, Path], tree: CubeTree) -> Optional[CubeSet]:
        """Parse a cube set file against ``tree`` (errors in content propagate)."""
        content = self.read_text(file_path)
        if content is None:
            return None
        return CubeSet.from_text(tree, content)
