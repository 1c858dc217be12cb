import pytest

from src import database


@pytest.fixture
def ledger(tmp_path):
    path = database.db_path(tmp_path)
    database.init_db(path)
    return path


def test_missing_ledger_reads_empty(tmp_path):
    path = database.db_path(tmp_path / "nowhere")
    assert database.get_attempts(path) == []


def test_attempts_are_ordered_and_counted(ledger):
    run_id = database.save_run(ledger, seed=1, workers=2, n_target=2, grid=16, first_attempt=0)
    database.record_attempt(ledger, run_id, 1, [1.0] * 6 + [-0.5], "feasible", steps=40, final_energy=2.0, record=1)
    database.record_attempt(ledger, run_id, 0, [0.0] * 6 + [-0.4], "feasible", steps=30, final_energy=1.0, record=0)
    database.record_attempt(ledger, run_id, 2, [2.0] * 6 + [-0.3], "rejected", reason="not converged")

    attempts = database.get_attempts(ledger)
    assert [a["idx"] for a in attempts] == [0, 1, 2]
    assert attempts[2]["status"] == "rejected"
    assert attempts[2]["record"] is None
    assert attempts[2]["reason"] == "not converged"
    assert sum(a["status"] == "feasible" for a in attempts) == 2

    thetas = database.get_feasible_thetas(ledger)
    assert thetas[0][-1] == pytest.approx(-0.4)
    assert thetas[1][0] == pytest.approx(1.0)


def test_init_is_idempotent_and_replace_overwrites(ledger):
    database.init_db(ledger)
    run_id = database.save_run(ledger, seed=0, workers=1, n_target=1, grid=8, first_attempt=0)
    database.record_attempt(ledger, run_id, 0, [0.0] * 7, "rejected", reason="diverged")
    database.record_attempt(ledger, run_id, 0, [0.0] * 7, "feasible", record=0)
    attempts = database.get_attempts(ledger)
    assert len(attempts) == 1
    assert attempts[0]["status"] == "feasible"
