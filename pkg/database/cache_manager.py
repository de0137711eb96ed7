#!/usr/bin/env python3
"""
Cache Manager for FFTracer
Persistent per-gate control-matrix cache in a SQLite database
"""

import io
import logging
from datetime import datetime
from pathlib import Path
from typing import Optional

from sqlalchemy import create_engine, text

from models.control_matrix import ControlMatrix
from utils.result_writer import load_control_matrix, save_control_matrix


class ControlMatrixCache:
    """Stores control matrices keyed by gate content hash; usable as a GateCache backend"""

    def __init__(self, path: str = 'cache/control_matrices.sqlite'):
        self.logger = logging.getLogger(__name__)
        self.path = path
        if path != ':memory:':
            Path(path).parent.mkdir(parents=True, exist_ok=True)
        self.engine = create_engine(f"sqlite:///{path}")
        self._initialize_schema()

    def _initialize_schema(self):
        schema_sql = """
        CREATE TABLE IF NOT EXISTS control_matrices (
            cache_key TEXT PRIMARY KEY,
            label TEXT,
            channels TEXT NOT NULL,
            n_frequencies INTEGER NOT NULL,
            payload BLOB NOT NULL,
            created_at TEXT NOT NULL
        )
        """
        with self.engine.begin() as conn:
            conn.execute(text(schema_sql))
        self.logger.info(f"Control-matrix cache ready at {self.path}")

    def check_connection(self) -> bool:
        """Check if the cache database answers"""
        try:
            with self.engine.connect() as conn:
                conn.execute(text("SELECT 1"))
            return True
        except Exception as e:
            self.logger.warning(f"Cache database not available: {e}")
            return False

    def load(self, key: str) -> Optional[ControlMatrix]:
        with self.engine.connect() as conn:
            row = conn.execute(text("SELECT payload FROM control_matrices WHERE cache_key = :key"),
                               {'key': key}).fetchone()
        if row is None:
            return None
        return load_control_matrix(io.BytesIO(row[0]))

    def store(self, key: str, control_matrix: ControlMatrix):
        buffer = io.BytesIO()
        save_control_matrix(control_matrix, buffer)
        with self.engine.begin() as conn:
            conn.execute(text("""
                INSERT OR REPLACE INTO control_matrices
                    (cache_key, label, channels, n_frequencies, payload, created_at)
                VALUES (:key, :label, :channels, :n_frequencies, :payload, :created_at)
            """), {
                'key': key,
                'label': control_matrix.label,
                'channels': ','.join(control_matrix.channels),
                'n_frequencies': len(control_matrix.grid),
                'payload': buffer.getvalue(),
                'created_at': datetime.now().isoformat(),
            })

    def count(self) -> int:
        with self.engine.connect() as conn:
            return int(conn.execute(text("SELECT COUNT(*) FROM control_matrices")).scalar())

    def clear(self):
        with self.engine.begin() as conn:
            conn.execute(text("DELETE FROM control_matrices"))
        self.logger.info("Control-matrix cache cleared")
