"""CLI lifecycle, exit codes, golden outputs, bench report."""

import hashlib
import subprocess
import sys

import pytest

from cpad.cli import main

# frozen TLV digests for seeded setup/keygen on the f512 profile
GOLDEN = {
    "pp": "0484a4c950df045fe6063bd1f854a1abf315ce4d8f0f07fcf5b22f4fad7761b0",
    "msk": "dbd7b7b91303135042b19ece4aeaf9a0ffa27aae81b260ad867e0b8692398047",
    "usk": "9caf12a63507b270be992fa4e31eab3218888ee3b3e2aba287c2713d8e2cf839",
}


def _sha(path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture()
def world(tmp_path):
    """setup + two keys + one encrypted file; returns paths and fname."""
    aa = tmp_path / "aa"
    run = lambda *argv: main([str(a) for a in argv])
    assert run("setup", "--universe", "dummy,temp,humid", "--out", aa,
               "--profile", "f512", "--seed", "42") == 0
    assert run("keygen", "--attrs", "dummy,temp", "--msk", aa / "msk.tlv",
               "--pp", aa / "pp.tlv", "--out", tmp_path / "alice.tlv",
               "--seed", "43") == 0
    assert run("keygen", "--attrs", "dummy,humid", "--msk", aa / "msk.tlv",
               "--pp", aa / "pp.tlv", "--out", tmp_path / "bob.tlv",
               "--seed", "44") == 0
    data = tmp_path / "data.bin"
    data.write_bytes(bytes(range(256)) * 4)  # 1 KiB
    return tmp_path


def _encrypt(world, capsys) -> str:
    code = main([
        "encrypt", "--policy", "dummy AND temp",
        "--in", str(world / "data.bin"),
        "--fog", str(world / "fog"), "--cloud", str(world / "cloud"),
        "--pp", str(world / "aa" / "pp.tlv"),
        "--state", str(world / "state"), "--seed", "45",
    ])
    assert code == 0
    return capsys.readouterr().out.strip().splitlines()[-1]


def test_golden_files(world):
    assert _sha(world / "aa" / "pp.tlv") == GOLDEN["pp"]
    assert _sha(world / "aa" / "msk.tlv") == GOLDEN["msk"]
    assert _sha(world / "alice.tlv") == GOLDEN["usk"]


def test_roundtrip_1kib(world, capsys):
    fname = _encrypt(world, capsys)
    assert len(fname) == 64
    out = world / "out.bin"
    code = main(["decrypt", "--fname", fname, "--key", str(world / "alice.tlv"),
                 "--fog", str(world / "fog"), "--cloud", str(world / "cloud"),
                 "--out", str(out)])
    assert code == 0
    assert out.read_bytes() == (world / "data.bin").read_bytes()


def test_unauthorized_decrypt_exits_1(world, capsys):
    fname = _encrypt(world, capsys)
    code = main(["decrypt", "--fname", fname, "--key", str(world / "bob.tlv"),
                 "--fog", str(world / "fog"), "--cloud", str(world / "cloud"),
                 "--out", str(world / "never.bin")])
    assert code == 1
    assert "not" in capsys.readouterr().err.lower()


def test_delete_then_verify_and_gone(world, capsys):
    fname = _encrypt(world, capsys)
    run = lambda *argv: main([str(a) for a in argv])
    assert run("delete", "--fname", fname, "--ssk", world / "state" / "object_ssk.tlv",
               "--fog", world / "fog", "--cloud", world / "cloud",
               "--state", world / "state", "--seed", "46") == 0
    # verification uses the owner's satisfying key
    assert run("verify", "--fname", fname, "--key", world / "alice.tlv",
               "--pp", world / "aa" / "pp.tlv", "--fog", world / "fog",
               "--state", world / "state") == 0
    # payload is gone from the cloud store
    assert run("decrypt", "--fname", fname, "--key", world / "alice.tlv",
               "--fog", world / "fog", "--cloud", world / "cloud",
               "--out", world / "gone.bin") == 1


def test_delete_twice_refused(world, capsys):
    fname = _encrypt(world, capsys)
    run = lambda *argv: main([str(a) for a in argv])
    assert run("delete", "--fname", fname, "--ssk", world / "state" / "object_ssk.tlv",
               "--fog", world / "fog", "--cloud", world / "cloud",
               "--state", world / "state", "--seed", "46") == 0
    assert run("delete", "--fname", fname, "--ssk", world / "state" / "object_ssk.tlv",
               "--fog", world / "fog", "--cloud", world / "cloud",
               "--state", world / "state", "--seed", "47") == 1


def test_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as err:
        main(["encrypt", "--policy", "dummy AND a"])  # missing required flags
    assert err.value.code == 2


def test_malformed_file_exit_3(tmp_path, capsys):
    bad = tmp_path / "bad.tlv"
    bad.write_bytes(b"not a tlv stream")
    code = main(["keygen", "--attrs", "dummy", "--msk", str(bad),
                 "--pp", str(bad), "--out", str(tmp_path / "x.tlv")])
    assert code == 3


def test_bad_policy_exit_2(world, capsys):
    code = main([
        "encrypt", "--policy", "dummy AND (",
        "--in", str(world / "data.bin"),
        "--fog", str(world / "fog"), "--cloud", str(world / "cloud"),
        "--pp", str(world / "aa" / "pp.tlv"),
        "--state", str(world / "state"),
    ])
    assert code == 2


def test_bench_report(world, tmp_path, capsys):
    out = tmp_path / "report.tsv"
    code = main(["bench", "--mode", "encrypt", "--sizes", "2,4,6",
                 "--trials", "1", "--profile", "f512", "--seed", "46",
                 "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].lstrip("#").split("\t") == [
        "size", "median_ns", "exp_G", "mul_G", "exp_GT", "mul_GT", "pairings"
    ]
    for line in lines[1:]:
        size, _ns, exp_g, mul_g, _egt, _mgt, pairings = line.split("\t")
        assert int(exp_g) == 3 * int(size) + 1
        assert int(mul_g) == int(size)
        assert int(pairings) == 1


def test_cli_survives_process_restart(world, capsys):
    """Encrypt in one process, decrypt in another: stores reload bit-exactly."""
    fname = _encrypt(world, capsys)
    cmd = [
        sys.executable, "-m", "cpad", "decrypt", "--fname", fname,
        "--key", str(world / "alice.tlv"),
        "--fog", str(world / "fog"), "--cloud", str(world / "cloud"),
        "--out", str(world / "out2.bin"),
    ]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (world / "out2.bin").read_bytes() == (world / "data.bin").read_bytes()
