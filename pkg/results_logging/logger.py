import csv
import io
import json
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from chains.errors import UsageError

FORMATS = ("csv", "jsonl")


class ResultLogger:
    """Buffered writer for experiment rows (CSV tables or JSON-lines records)."""

    def __init__(
        self,
        output_path: Optional[str] = None,
        kind: str = "csv",
        columns: Optional[Sequence[str]] = None,
    ):
        """
        Initialize result logger.

        Args:
            output_path: File to write. If None, rows go to standard output.
            kind: "csv" or "jsonl"
            columns: CSV header (required for csv)
        """
        if kind not in FORMATS:
            raise UsageError(f"unknown result format '{kind}', expected one of {', '.join(FORMATS)}")
        if kind == "csv" and not columns:
            raise UsageError("csv results need a column list")
        self.kind = kind
        self.columns = list(columns) if columns else None
        self.rows: List[dict] = []
        self.finalized = False
        self.output_path = Path(output_path) if output_path is not None else None

    def log_row(self, row: dict) -> None:
        """Buffer one row."""
        if self.finalized:
            return
        self.rows.append(row)

    def log_rows(self, rows) -> None:
        for row in rows:
            self.log_row(row)

    def render(self) -> str:
        if self.kind == "jsonl":
            return "".join(json.dumps(row, sort_keys=True) + "\n" for row in self.rows)
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=self.columns, lineterminator="\n", extrasaction='raise')
        writer.writeheader()
        writer.writerows(self.rows)
        return buffer.getvalue()

    def finalize(self) -> None:
        """Write all buffered rows; raises OSError when the path is unwritable."""
        if self.finalized:
            return

        self.finalized = True
        text = self.render()
        if self.output_path is None:
            sys.stdout.write(text)
            sys.stdout.flush()
            return
        with open(self.output_path, 'w', newline='') as f:
            f.write(text)

    def get_output_path(self) -> str:
        """Get the path where results will be/were saved ("-" for standard output)."""
        return str(self.output_path) if self.output_path is not None else "-"


def load_results(path: str) -> List[dict]:
    """Load a CSV or JSON-lines result file as a list of dicts."""
    with open(path, 'r', newline='') as f:
        text = f.read()
    stripped = text.lstrip()
    if not stripped:
        return []
    if stripped.startswith("{"):
        return [json.loads(line) for line in text.splitlines() if line.strip()]
    return list(csv.DictReader(io.StringIO(text)))
