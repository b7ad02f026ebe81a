import logging
import sqlite3
from contextlib import closing
from typing import Any, Dict, Iterable, List

from simulation.mc_harness import SimSummary

logger = logging.getLogger(__name__)


class DatabaseManager:
    """Manages SQLite storage of Monte Carlo runs and their summary rows"""

    def __init__(self, db_path: str = 'simulations.db'):
        self.db_path = db_path
        self.init_database()

    def init_database(self):
        """Initialize SQLite database and create tables"""
        with closing(sqlite3.connect(self.db_path)) as conn:
            cursor = conn.cursor()

            # One row per simulate invocation
            cursor.execute('''
                CREATE TABLE IF NOT EXISTS simulation_sessions (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    dgp TEXT NOT NULL,
                    master_seed INTEGER NOT NULL,
                    nsim INTEGER NOT NULL,
                    estimators TEXT NOT NULL,
                    created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
                )
            ''')

            cursor.execute('''
                CREATE TABLE IF NOT EXISTS simulation_summaries (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    session_id INTEGER NOT NULL REFERENCES simulation_sessions(id),
                    estimator TEXT NOT NULL,
                    dgp TEXT NOT NULL,
                    param REAL NOT NULL,
                    n INTEGER NOT NULL,
                    nsim INTEGER NOT NULL,
                    failures INTEGER NOT NULL,
                    mean_bias REAL,
                    mean_abs_dev REAL,
                    rmse REAL
                )
            ''')

            conn.commit()

    def save_simulation_session(self, dgp: str, master_seed: int, nsim: int,
                                estimators: Iterable[str], summaries: List[SimSummary]) -> int:
        """
        Save one simulate run and its summary rows.

        Args:
            dgp (str): Design name
            master_seed (int): Seed of the study
            nsim (int): Replications per cell
            estimators (Iterable[str]): Estimator tags requested
            summaries (List[SimSummary]): Rows produced by the run

        Returns:
            int: The new session id, or -1 when the write failed
        """
        try:
            with closing(sqlite3.connect(self.db_path)) as conn:
                cursor = conn.cursor()

                cursor.execute('''
                    INSERT INTO simulation_sessions (dgp, master_seed, nsim, estimators)
                    VALUES (?, ?, ?, ?)
                ''', (dgp, int(master_seed), int(nsim), ','.join(estimators)))
                session_id = cursor.lastrowid

                cursor.executemany('''
                    INSERT INTO simulation_summaries
                        (session_id, estimator, dgp, param, n, nsim, failures, mean_bias, mean_abs_dev, rmse)
                    VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
                ''', [
                    (session_id, s.estimator, s.dgp, s.param, s.n, s.nsim, s.failures,
                     s.mean_bias, s.mean_abs_dev, s.rmse)
                    for s in summaries
                ])

                conn.commit()
                return session_id
        except sqlite3.Error as e:
            logger.error("Error saving simulation session: %s", e)
            return -1

    def get_simulation_sessions(self, limit: int = 10) -> List[Dict[str, Any]]:
        """Get recent simulation sessions, newest first"""
        try:
            with closing(sqlite3.connect(self.db_path)) as conn:
                cursor = conn.cursor()

                cursor.execute('''
                    SELECT s.id, s.dgp, s.master_seed, s.nsim, s.estimators, s.created_at,
                           COUNT(r.id)
                    FROM simulation_sessions s
                    LEFT JOIN simulation_summaries r ON r.session_id = s.id
                    GROUP BY s.id
                    ORDER BY s.id DESC
                    LIMIT ?
                ''', (limit,))

                sessions = []
                for row in cursor.fetchall():
                    sessions.append({
                        'id': row[0],
                        'dgp': row[1],
                        'master_seed': row[2],
                        'nsim': row[3],
                        'estimators': row[4],
                        'created_at': row[5],
                        'rows': row[6]
                    })

                return sessions
        except sqlite3.Error as e:
            logger.error("Error retrieving simulation sessions: %s", e)
            return []

    def get_session_summaries(self, session_id: int) -> List[Dict[str, Any]]:
        """Get the summary rows stored for one session, in insertion order"""
        try:
            with closing(sqlite3.connect(self.db_path)) as conn:
                cursor = conn.cursor()

                cursor.execute('''
                    SELECT estimator, dgp, param, n, nsim, failures, mean_bias, mean_abs_dev, rmse
                    FROM simulation_summaries
                    WHERE session_id = ?
                    ORDER BY id
                ''', (session_id,))

                columns = ['estimator', 'dgp', 'param', 'n', 'nsim', 'failures',
                           'mean_bias', 'mean_abs_dev', 'rmse']
                return [dict(zip(columns, row)) for row in cursor.fetchall()]
        except sqlite3.Error as e:
            logger.error("Error retrieving session summaries: %s", e)
            return []

    def get_database_stats(self) -> Dict[str, Any]:
        """Get database statistics"""
        try:
            with closing(sqlite3.connect(self.db_path)) as conn:
                cursor = conn.cursor()

                cursor.execute('SELECT COUNT(*) FROM simulation_sessions')
                total_sessions = cursor.fetchone()[0]

                cursor.execute('''
                    SELECT estimator, COUNT(*)
                    FROM simulation_summaries
                    GROUP BY estimator
                ''')
                estimator_stats = dict(cursor.fetchall())

                return {
                    'total_sessions': total_sessions,
                    'estimator_stats': estimator_stats
                }
        except sqlite3.Error as e:
            logger.error("Error getting database stats: %s", e)
            return {}
