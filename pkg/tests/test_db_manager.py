import math
import sqlite3

import pytest

from database.db_manager import DatabaseManager
from simulation.mc_harness import SimSummary


def _summary(estimator: str, param: float, rmse: float = 0.1) -> SimSummary:
    return SimSummary(
        estimator=estimator,
        dgp="table1",
        param=param,
        n=500,
        nsim=10,
        nsim_completed=9,
        failures=1,
        mean_bias=0.01,
        mean_abs_dev=0.08,
        rmse=rmse,
    )


@pytest.fixture
def manager(tmp_path):
    return DatabaseManager(str(tmp_path / "runs.db"))


def test_empty_database(manager):
    assert manager.get_simulation_sessions() == []
    assert manager.get_database_stats() == {"total_sessions": 0, "estimator_stats": {}}


def test_save_and_list_sessions(manager):
    first = manager.save_simulation_session("table1", 3, 10, ["svm", "logit"],
                                            [_summary("svm", 0.0), _summary("logit", 0.0)])
    second = manager.save_simulation_session("table1", 4, 10, ["svm"], [_summary("svm", 1.0)])
    assert second > first > 0

    sessions = manager.get_simulation_sessions()
    assert [session["id"] for session in sessions] == [second, first]
    assert sessions[1]["estimators"] == "svm,logit"
    assert sessions[1]["rows"] == 2
    assert sessions[1]["master_seed"] == 3
    assert len(manager.get_simulation_sessions(limit=1)) == 1


def test_summaries_keep_order_and_values(manager):
    session_id = manager.save_simulation_session(
        "table1", 0, 10, ["svm", "wsvm"], [_summary("svm", 3.0, rmse=6.5), _summary("wsvm", 3.0)]
    )
    rows = manager.get_session_summaries(session_id)
    assert [row["estimator"] for row in rows] == ["svm", "wsvm"]
    assert rows[0]["rmse"] == 6.5
    assert rows[0]["failures"] == 1 and rows[0]["n"] == 500


def test_nan_moments_are_stored_as_null(manager):
    session_id = manager.save_simulation_session("table1", 0, 10, ["logit"], [_summary("logit", 0.0, rmse=math.nan)])
    assert manager.get_session_summaries(session_id)[0]["rmse"] is None


def test_stats(manager):
    manager.save_simulation_session("table1", 0, 10, ["svm", "logit"], [_summary("svm", 0.0), _summary("logit", 0.0)])
    manager.save_simulation_session("table1", 1, 10, ["svm"], [_summary("svm", 0.0)])
    assert manager.get_database_stats() == {"total_sessions": 2, "estimator_stats": {"svm": 2, "logit": 1}}


def test_unwritable_path_is_reported(tmp_path):
    manager = DatabaseManager(str(tmp_path / "runs.db"))
    manager.db_path = str(tmp_path / "missing" / "runs.db")
    assert manager.save_simulation_session("table1", 0, 1, ["svm"], []) == -1
    assert manager.get_simulation_sessions() == []


class _BrokenConnection:
    """Connection whose first query fails, recording whether it was closed"""

    def __init__(self):
        self.closed = False

    def cursor(self):
        raise sqlite3.OperationalError("disk I/O error")

    def close(self):
        self.closed = True


@pytest.mark.parametrize("call, fallback", [
    (lambda m: m.save_simulation_session("table1", 0, 1, ["svm"], []), -1),
    (lambda m: m.get_simulation_sessions(), []),
    (lambda m: m.get_session_summaries(1), []),
    (lambda m: m.get_database_stats(), {}),
])
def test_failed_query_closes_connection(manager, monkeypatch, call, fallback):
    broken = _BrokenConnection()
    monkeypatch.setattr(sqlite3, "connect", lambda path: broken)
    assert call(manager) == fallback
    assert broken.closed
