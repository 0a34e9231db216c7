import pytest
from hypothesis import HealthCheck, settings

from spoofcert import kernels

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_BACKENDS = [("numpy", kernels.numpy_backend)]
if kernels.numba_backend() is not None:
    _BACKENDS.append(("numba", kernels.numba_backend()))


@pytest.fixture(params=_BACKENDS, ids=[name for name, _ in _BACKENDS])
def backend(request):
    return request.param[1]


GOLDEN_RULESETS = {
    # name: (iptables-save text, expected verdict for eth0)
    "guard": ("""*filter
:FORWARD ACCEPT [0:0]
-A FORWARD -i eth0 ! -s 192.168.0.0/24 -j DROP
COMMIT
""", True),
    "guard_with_foo": ("""*filter
:FORWARD ACCEPT [0:0]
-A FORWARD -i eth0 ! -s 192.168.0.0/24 --foo -j DROP
COMMIT
""", False),
    "foo_accept_first": ("""*filter
:FORWARD ACCEPT [0:0]
-A FORWARD --foo -j ACCEPT
-A FORWARD -i eth0 ! -s 192.168.0.0/24 -j DROP
COMMIT
""", False),
    "foo_drop_bar_accept": ("""*filter
:FORWARD DROP [0:0]
-A FORWARD --foo -j DROP
-A FORWARD -i eth0 ! -s 192.168.0.0/24 -j DROP
-A FORWARD --bar -j ACCEPT
COMMIT
""", True),
    "tcp_not_tcp": ("""*filter
:FORWARD ACCEPT [0:0]
-A FORWARD -i eth0 ! -s 192.168.0.0/24 -p tcp -j DROP
-A FORWARD -i eth0 ! -s 192.168.0.0/24 ! -p tcp -j DROP
COMMIT
""", False),
}

GOLDEN_IPASSMT = "eth0 = 192.168.0.0/24\n"


_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Record one PASS/FAIL line per acceptance criterion; printed at the end of the run."""
    def report(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}"
        if detail:
            line += f" ({detail})"
        _ACCEPTANCE.append(line)
        print(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
