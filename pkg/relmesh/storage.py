"""SQLite run ledger for relmesh."""

import sqlite3
from contextlib import contextmanager
from pathlib import Path
from typing import List, Optional

from .exceptions import StorageError
from .models import RunRecord


class Storage:
    """SQLite-based ledger of runs.

    One row per run records the case, configuration hash, timing and
    outcome, so adaptive and uniform runs can be compared after the fact.
    """

    def __init__(self, db_path: str = ".relmesh/runs.sqlite"):
        """Initialize storage with SQLite database.

        Args:
            db_path: Path to SQLite database file
        """
        self.db_path = Path(db_path).expanduser()
        try:
            self.db_path.parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise StorageError(f"Cannot create ledger directory {self.db_path.parent}", e) from e
        self._init_db()

    @contextmanager
    def _get_connection(self):
        """Context manager for database connections.

        Yields:
            sqlite3.Connection: Database connection
        """
        try:
            conn = sqlite3.connect(str(self.db_path))
        except sqlite3.Error as e:
            raise StorageError(f"Cannot open ledger {self.db_path}", e) from e
        conn.row_factory = sqlite3.Row
        try:
            yield conn
            conn.commit()
        except sqlite3.Error as e:
            conn.rollback()
            raise StorageError("Ledger operation failed", e) from e
        except Exception:
            conn.rollback()
            raise
        finally:
            conn.close()

    def _init_db(self) -> None:
        """Initialize database schema if it doesn't exist."""
        with self._get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute("""
                CREATE TABLE IF NOT EXISTS runs (
                    run_id TEXT PRIMARY KEY,
                    case_name TEXT NOT NULL,
                    config_hash TEXT NOT NULL,
                    started_at INTEGER NOT NULL,
                    wall_time REAL NOT NULL,
                    steps INTEGER NOT NULL,
                    final_time REAL NOT NULL,
                    final_dt REAL NOT NULL,
                    status TEXT NOT NULL,
                    output_dir TEXT
                )
            """)
            cursor.execute("""
                CREATE INDEX IF NOT EXISTS idx_runs_case
                ON runs(case_name, started_at DESC)
            """)

    def save_run(self, record: RunRecord) -> None:
        """Insert a run or update it if the run id already exists.

        Args:
            record: Run to persist
        """
        with self._get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute(
                """
                INSERT INTO runs (run_id, case_name, config_hash, started_at, wall_time,
                                  steps, final_time, final_dt, status, output_dir)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
                ON CONFLICT(run_id) DO UPDATE SET
                    wall_time = excluded.wall_time,
                    steps = excluded.steps,
                    final_time = excluded.final_time,
                    final_dt = excluded.final_dt,
                    status = excluded.status,
                    output_dir = excluded.output_dir
                """,
                (
                    record.run_id,
                    record.case_name,
                    record.config_hash,
                    record.started_at,
                    record.wall_time,
                    record.steps,
                    record.final_time,
                    record.final_dt,
                    record.status,
                    record.output_dir,
                ),
            )

    @staticmethod
    def _row_to_record(row: sqlite3.Row) -> RunRecord:
        return RunRecord(
            run_id=row["run_id"],
            case_name=row["case_name"],
            config_hash=row["config_hash"],
            started_at=row["started_at"],
            wall_time=row["wall_time"],
            steps=row["steps"],
            final_time=row["final_time"],
            final_dt=row["final_dt"],
            status=row["status"],
            output_dir=row["output_dir"],
        )

    def get_run(self, run_id: str) -> Optional[RunRecord]:
        """Retrieve a run by id.

        Returns:
            RunRecord if found, None otherwise
        """
        with self._get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute("SELECT * FROM runs WHERE run_id = ?", (run_id,))
            row = cursor.fetchone()
            return self._row_to_record(row) if row else None

    def get_history(self, case_name: Optional[str] = None, limit: int = 20) -> List[RunRecord]:
        """List runs, newest first.

        Args:
            case_name: Restrict to one case
            limit: Maximum number of runs to return
        """
        with self._get_connection() as conn:
            cursor = conn.cursor()
            if case_name is None:
                cursor.execute(
                    "SELECT * FROM runs ORDER BY started_at DESC LIMIT ?", (limit,)
                )
            else:
                cursor.execute(
                    """
                    SELECT * FROM runs
                    WHERE case_name = ?
                    ORDER BY started_at DESC
                    LIMIT ?
                    """,
                    (case_name, limit),
                )
            return [self._row_to_record(row) for row in cursor.fetchall()]

    def get_all_cases(self) -> List[str]:
        """Distinct case names that have at least one run."""
        with self._get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute("SELECT DISTINCT case_name FROM runs ORDER BY case_name")
            return [row["case_name"] for row in cursor.fetchall()]
