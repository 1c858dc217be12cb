"""
SQLite ledger for dataset generation.

One `samples.db` lives inside every dataset directory and records each
attempted design, so an interrupted `gen-data` resumes where it stopped and
the manifest can list per-sample status.

Tables
------
runs      one record per generate_dataset invocation
attempts  one record per attempted design, in attempt order
"""
from __future__ import annotations

import sqlite3
from datetime import datetime
from pathlib import Path

import config

DB_NAME = "samples.db"


# ---------------------------------------------------------------------------
# Connection
# ---------------------------------------------------------------------------

def db_path(dataset_dir: str | Path) -> Path:
    return Path(dataset_dir) / DB_NAME


def _connect(path: str | Path) -> sqlite3.Connection:
    conn = sqlite3.connect(str(path))
    conn.row_factory = sqlite3.Row
    conn.execute("PRAGMA foreign_keys = ON")
    conn.execute("PRAGMA journal_mode = WAL")   # safe concurrent reads
    return conn


# ---------------------------------------------------------------------------
# Schema initialisation
# ---------------------------------------------------------------------------

_THETA_COLUMNS = ",\n                ".join(f"{c:<14} REAL NOT NULL" for c in config.DESIGN_COLUMNS)


def init_db(path: str | Path) -> None:
    """Create all tables if they don't exist. Safe to call on every resume."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with _connect(path) as conn:
        conn.executescript(f"""
            CREATE TABLE IF NOT EXISTS runs (
                id             INTEGER PRIMARY KEY,
                started_at     TEXT NOT NULL,
                seed           INTEGER NOT NULL,
                workers        INTEGER NOT NULL,
                n_target       INTEGER NOT NULL,
                grid           INTEGER NOT NULL,
                first_attempt  INTEGER NOT NULL
            );

            CREATE TABLE IF NOT EXISTS attempts (
                idx            INTEGER PRIMARY KEY,   -- attempt number, also the seed spawn key
                run_id         INTEGER REFERENCES runs(id),
                {_THETA_COLUMNS},
                status         TEXT NOT NULL,         -- feasible | rejected
                reason         TEXT,
                steps          INTEGER,
                final_energy   REAL,
                record         INTEGER,               -- row in chi.bin, NULL when rejected
                created_at     TEXT NOT NULL
            );

            CREATE INDEX IF NOT EXISTS idx_attempts_status
                ON attempts(status);
        """)


# ---------------------------------------------------------------------------
# Writes
# ---------------------------------------------------------------------------

def save_run(path: str | Path, seed: int, workers: int, n_target: int, grid: int, first_attempt: int) -> int:
    """Insert a run record and return its row ID."""
    with _connect(path) as conn:
        cur = conn.execute(
            """INSERT INTO runs (started_at, seed, workers, n_target, grid, first_attempt)
               VALUES (?, ?, ?, ?, ?, ?)""",
            (datetime.utcnow().isoformat(), seed, workers, n_target, grid, first_attempt),
        )
        return cur.lastrowid


def record_attempt(
    path: str | Path,
    run_id: int,
    idx: int,
    theta: list[float],
    status: str,
    reason: str = "",
    steps: int | None = None,
    final_energy: float | None = None,
    record: int | None = None,
) -> None:
    cols = ", ".join(config.DESIGN_COLUMNS)
    marks = ", ".join("?" for _ in config.DESIGN_COLUMNS)
    with _connect(path) as conn:
        conn.execute(
            f"""INSERT OR REPLACE INTO attempts
                (idx, run_id, {cols}, status, reason, steps, final_energy, record, created_at)
                VALUES (?, ?, {marks}, ?, ?, ?, ?, ?, ?)""",
            (idx, run_id, *theta, status, reason, steps, final_energy, record,
             datetime.utcnow().isoformat()),
        )


# ---------------------------------------------------------------------------
# Reads
# ---------------------------------------------------------------------------

def get_attempts(path: str | Path) -> list[dict]:
    """Every attempt in attempt order. Empty when the ledger does not exist yet."""
    if not Path(path).exists():
        return []
    with _connect(path) as conn:
        rows = conn.execute("SELECT * FROM attempts ORDER BY idx").fetchall()
    return [dict(r) for r in rows]


def get_feasible_thetas(path: str | Path) -> list[list[float]]:
    """Θ rows of the feasible attempts, ordered by their record offset."""
    cols = ", ".join(config.DESIGN_COLUMNS)
    with _connect(path) as conn:
        rows = conn.execute(
            f"SELECT {cols} FROM attempts WHERE status = 'feasible' ORDER BY record"
        ).fetchall()
    return [list(r) for r in rows]
