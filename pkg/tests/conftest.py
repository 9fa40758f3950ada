import os

from hypothesis import HealthCheck, settings

os.environ.setdefault("LEVLAB_THREADS", "2")

settings.register_profile(
    "levlab", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("levlab")

# criterion number -> (passed, detail); filled by the acceptance suite
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(
            f"criterion {key:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
