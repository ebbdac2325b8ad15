import pytest

from gpbound.helper.sys_check_utils import THREADS_ENV_VAR, available_cores, resolve_thread_count


@pytest.fixture(autouse=True)
def _no_thread_env(monkeypatch):
    monkeypatch.delenv(THREADS_ENV_VAR, raising=False)


class TestResolveThreadCount:
    def test_environment_wins(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV_VAR, "3")
        assert resolve_thread_count(5) == 3

    def test_requested_value(self):
        assert resolve_thread_count(2) == 2

    def test_defaults_to_available_cores(self):
        assert resolve_thread_count(None) == available_cores() >= 1

    @pytest.mark.parametrize("env", ["0", "-1", "abc"])
    def test_invalid_environment(self, monkeypatch, env):
        monkeypatch.setenv(THREADS_ENV_VAR, env)
        with pytest.raises(ValueError, match=THREADS_ENV_VAR):
            resolve_thread_count(None)

    def test_invalid_request(self):
        with pytest.raises(ValueError, match="--threads"):
            resolve_thread_count(0)
