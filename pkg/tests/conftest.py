import os

from hypothesis import HealthCheck, settings

import acceptance_log

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def pytest_terminal_summary(terminalreporter):
    ran = [c for c in acceptance_log.CRITERIA if c in acceptance_log.RESULTS]
    if not ran and not any("test_acceptance" in str(a) for a in terminalreporter.config.args):
        return
    terminalreporter.section("acceptance criteria")
    for c in acceptance_log.CRITERIA:
        terminalreporter.write_line(acceptance_log.format_line(c))
