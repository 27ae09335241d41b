from app.core.config import Settings


def test_settings_read_the_environment(monkeypatch):
    monkeypatch.setenv("GRID_MIN_POINTS", "128")
    monkeypatch.setenv("VNI_THREADS", "3")
    fresh = Settings()
    assert fresh.GRID_MIN_POINTS == 128
    assert fresh.VNI_THREADS == 3


def test_settings_names_are_case_sensitive(monkeypatch):
    monkeypatch.delenv("GRID_MIN_POINTS", raising=False)
    monkeypatch.setenv("grid_min_points", "8")
    assert Settings.model_config["case_sensitive"] is True
    assert Settings().GRID_MIN_POINTS == 64
