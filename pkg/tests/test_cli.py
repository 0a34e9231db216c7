import subprocess
import sys

import pytest

from conftest import GOLDEN_IPASSMT, GOLDEN_RULESETS
from spoofcert.cli import main

SSH = """*filter
:FORWARD DROP [0:0]
:INPUT ACCEPT [0:0]
-A FORWARD -m conntrack --ctstate ESTABLISHED -j ACCEPT
-A FORWARD -p tcp --dport 22 -j ACCEPT
-A FORWARD --foo -j DROP
COMMIT
"""

NESTED = """*filter
:FORWARD ACCEPT [0:0]
:check - [0:0]
-A FORWARD -j LOG --log-prefix "fw "
-A FORWARD -i eth0 -j check
-A check ! -s 192.168.0.0/24 -j DROP
COMMIT
"""


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_certify_guard_example(files, capsys):
    rs = files("rs", GOLDEN_RULESETS["guard"][0])
    ip = files("ip", GOLDEN_IPASSMT)
    code, out, _ = run(capsys, "certify", "--ruleset", rs, "--ipassmt", ip)
    assert code == 0
    assert out.strip() == "eth0: CERTIFIED"


def test_certify_failure_names_rule_and_sources(files, capsys):
    rs = files("rs", GOLDEN_RULESETS["guard_with_foo"][0])
    ip = files("ip", GOLDEN_IPASSMT)
    code, out, _ = run(capsys, "certify", "--ruleset", rs, "--ipassmt", ip)
    assert code == 1
    assert out.startswith("eth0: FAIL at FORWARD:2")
    assert "0.0.0.0/1" in out and "(+" in out


def test_certify_multiple_interfaces_and_verbose(files, capsys):
    rs = files("rs", NESTED)
    ip = files("ip", GOLDEN_IPASSMT + "eth1 = 10.0.0.0/8\n")
    code, out, err = run(capsys, "certify", "--ruleset", rs, "--ipassmt", ip, "-v", "--dump-flat")
    assert code == 1
    lines = out.splitlines()
    assert "eth0: CERTIFIED" in lines
    assert any(l.startswith("eth1: FAIL at FORWARD:2") for l in lines)
    assert "info:" in err


@pytest.mark.parametrize("name", sorted(GOLDEN_RULESETS))
def test_certify_golden_rulesets(name, files, capsys):
    text, expect = GOLDEN_RULESETS[name]
    code, out, _ = run(capsys, "certify", "--ruleset", files("rs", text),
                       "--ipassmt", files("ip", GOLDEN_IPASSMT))
    assert code == (0 if expect else 1)


def test_missing_or_malformed_inputs(files, capsys, tmp_path):
    rs = files("rs", GOLDEN_RULESETS["guard"][0])
    code, _, err = run(capsys, "certify", "--ruleset", rs, "--ipassmt", str(tmp_path / "nope"))
    assert code == 2 and err.startswith("error:")
    code, _, err = run(capsys, "certify", "--ruleset", rs, "--ipassmt", files("ip", "# nothing\n"))
    assert code == 2
    code, _, err = run(capsys, "certify", "--ruleset", rs, "--ipassmt", files("ip2", "eth0 = 1.2.3.4/99\n"))
    assert code == 2 and "error:1:" in err
    bad = files("bad", "*filter\n:FORWARD ACCEPT [0:0]\n-A FORWARD -s -j DROP\nCOMMIT\n")
    code, _, err = run(capsys, "certify", "--ruleset", bad, "--ipassmt", files("ip3", GOLDEN_IPASSMT))
    assert code == 2 and "error:3:" in err
    code, _, _ = run(capsys, "certify", "--ruleset", rs, "--ipassmt", files("ip4", GOLDEN_IPASSMT),
                     "--chain", "INPUT")
    assert code == 2


def test_certify_access(files, capsys):
    rs = files("rs", SSH)
    code, out, _ = run(capsys, "certify-access", "--ruleset", rs, "--in-iface", "wan",
                       "--src", "8.8.8.8", "--proto", "tcp", "--dport", "22")
    assert (code, out.strip()) == (0, "DEFINITELY ACCEPTED")
    code, out, _ = run(capsys, "certify-access", "--ruleset", rs, "--in-iface", "wan",
                       "--src", "8.8.8.8", "--proto", "udp", "--dport", "22")
    assert (code, out.strip()) == (1, "NOT CERTIFIABLE")
    code, _, _ = run(capsys, "certify-access", "--ruleset", rs, "--in-iface", "wan",
                     "--src", "8.8.8.8", "--state", "established")
    assert code == 0
    accept_all = files("all", "*filter\n:FORWARD ACCEPT [0:0]\nCOMMIT\n")
    code, _, _ = run(capsys, "certify-access", "--ruleset", accept_all, "--in-iface", "x", "--src", "1.2.3.4")
    assert code == 0
    guarded = files("g", "*filter\n:FORWARD ACCEPT [0:0]\n-A FORWARD --foo -j DROP\nCOMMIT\n")
    code, _, _ = run(capsys, "certify-access", "--ruleset", guarded, "--in-iface", "x", "--src", "1.2.3.4")
    assert code == 1
    code, _, err = run(capsys, "certify-access", "--ruleset", rs, "--in-iface", "x", "--src", "1.2.3")
    assert code == 2 and "bad packet" in err


def test_dump_flat(files, capsys):
    code, out, _ = run(capsys, "dump-flat", "--ruleset", files("rs", NESTED))
    assert code == 0
    assert out.splitlines() == ["-i eth0 ! -s 192.168.0.0/24 -j DROP", "-j ACCEPT"]
    code, out, _ = run(capsys, "dump-flat", "--ruleset", files("ssh", SSH))
    assert "ESTABLISHED" in out
    code, out, _ = run(capsys, "dump-flat", "--ruleset", files("ssh", SSH), "--assume-new")
    assert "ESTABLISHED" not in out
    assert out.splitlines()[-1] == "-j DROP"


def test_module_entry_point(files):
    rs = files("rs", GOLDEN_RULESETS["guard"][0])
    ip = files("ip", GOLDEN_IPASSMT)
    proc = subprocess.run([sys.executable, "-m", "spoofcert", "certify", "--ruleset", rs, "--ipassmt", ip],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "eth0: CERTIFIED"
    proc = subprocess.run([sys.executable, "-m", "spoofcert"], capture_output=True, text=True)
    assert proc.returncode == 2
