from app.database import list_runs, record_run
from app.models import RunRecord


def _record(dataset, f1):
    return RunRecord(dataset=dataset, m=10, k=2, delta_cap=5, easy_ratio=0.3, f1=f1)


def test_record_and_list_runs(tmp_path):
    catalog = tmp_path / "runs" / "catalog.db"
    first = record_run(catalog, _record("DS", 0.9))
    record_run(catalog, _record("AB", 0.4))
    record_run(catalog, _record("DS", 0.8))

    assert first.id == 1
    runs = list_runs(catalog)
    assert [r.dataset for r in runs] == ["DS", "AB", "DS"]
    assert [r.f1 for r in list_runs(catalog, "DS")] == [0.9, 0.8]
    assert list_runs(catalog, "SG") == []
