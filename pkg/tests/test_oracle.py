"""External prediction-oracle protocol: loopback, stubs, failure modes."""

import sys

import numpy as np
import pytest

from rulebox import (
    ForestConfig,
    HandshakeFailure,
    OracleFailure,
    SpawnFailure,
    connect_oracle,
    load_dataset,
    split,
    train_forest,
)
from tests.conftest import ROOT

PY = sys.executable


def stub_script(tmp_path, body, name="stub.py"):
    """A small oracle script that handshakes and then runs ``body``."""
    path = tmp_path / name
    path.write_text(
        "import sys\n"
        "hello = sys.stdin.readline()\n"
        "sys.stdout.write('READY\\n'); sys.stdout.flush()\n" + body,
        encoding="utf-8",
    )
    return path


CONSTANT_BODY = """
while True:
    line = sys.stdin.readline()
    if not line:
        break
    n = int(line.split()[1])
    for _ in range(n):
        sys.stdin.readline()
        sys.stdout.write('1\\n')
    sys.stdout.flush()
"""


class TestLoopback:
    def test_forest_served_over_protocol_matches_in_process(self):
        # the same forest reached directly and through the wire protocol
        # must label every test row identically
        data_path = ROOT / "data" / "iris.csv"
        ds = load_dataset(data_path, label_column="label")
        train, test = split(ds, 0.7, seed=0)
        local = train_forest(train, ForestConfig(num_trees=50, seed=0))
        command = [
            PY, "-m", "rulebox.forest_server",
            "--data", str(data_path), "--label-column", "label",
            "--trees", "50", "--seed", "0",
        ]
        with connect_oracle(command, local.num_categories, local.input_dim) as oracle:
            remote_labels = oracle.predict(test.rows)
        np.testing.assert_array_equal(remote_labels, local.predict(test.rows))

    def test_forest_server_rebuild_is_deterministic(self):
        data_path = ROOT / "data" / "iris.csv"
        command = [
            PY, "-m", "rulebox.forest_server",
            "--data", str(data_path), "--label-column", "label",
            "--trees", "20", "--seed", "3",
        ]
        rows = load_dataset(data_path, label_column="label").rows[:10]
        with connect_oracle(command, 3, 4) as first:
            a = first.predict(rows)
        with connect_oracle(command, 3, 4) as second:
            b = second.predict(rows)
        np.testing.assert_array_equal(a, b)


class TestStubOracles:
    def test_constant_oracle(self, tmp_path):
        script = stub_script(tmp_path, CONSTANT_BODY)
        with connect_oracle([PY, str(script)], 3, 2) as oracle:
            labels = oracle.predict(np.zeros((5, 2)))
        np.testing.assert_array_equal(labels, [1, 1, 1, 1, 1])

    def test_empty_batch_short_circuits(self, tmp_path):
        script = stub_script(tmp_path, CONSTANT_BODY)
        with connect_oracle([PY, str(script)], 3, 2) as oracle:
            assert oracle.predict(np.empty((0, 2))).size == 0

    def test_string_command_accepted(self, tmp_path):
        script = stub_script(tmp_path, CONSTANT_BODY)
        with connect_oracle(f"{PY} {script}", 3, 2) as oracle:
            assert oracle.predict(np.zeros((1, 2)))[0] == 1


class TestFailures:
    def test_spawn_failure(self):
        with pytest.raises(SpawnFailure):
            connect_oracle(["/no/such/binary"], 2, 2)

    def test_handshake_garbage(self, tmp_path):
        path = tmp_path / "bad.py"
        path.write_text("print('NOPE')\n", encoding="utf-8")
        with pytest.raises(HandshakeFailure):
            connect_oracle([PY, str(path)], 2, 2)

    def test_handshake_immediate_exit(self, tmp_path):
        path = tmp_path / "dead.py"
        path.write_text("import sys; sys.exit(3)\n", encoding="utf-8")
        with pytest.raises(HandshakeFailure):
            connect_oracle([PY, str(path)], 2, 2)

    def test_malformed_reply(self, tmp_path):
        body = """
line = sys.stdin.readline()
n = int(line.split()[1])
for _ in range(n):
    sys.stdin.readline()
sys.stdout.write('banana\\n')
sys.stdout.flush()
"""
        script = stub_script(tmp_path, body)
        with connect_oracle([PY, str(script)], 2, 2) as oracle:
            with pytest.raises(OracleFailure, match="malformed"):
                oracle.predict(np.zeros((1, 2)))

    def test_label_out_of_range(self, tmp_path):
        body = """
line = sys.stdin.readline()
n = int(line.split()[1])
for _ in range(n):
    sys.stdin.readline()
    sys.stdout.write('9\\n')
sys.stdout.flush()
"""
        script = stub_script(tmp_path, body)
        with connect_oracle([PY, str(script)], 2, 2) as oracle:
            with pytest.raises(OracleFailure, match="outside"):
                oracle.predict(np.zeros((1, 2)))

    def test_truncated_replies(self, tmp_path):
        body = """
line = sys.stdin.readline()
sys.stdout.write('1\\n')
sys.stdout.flush()
"""
        script = stub_script(tmp_path, body)
        with connect_oracle([PY, str(script)], 2, 2) as oracle:
            with pytest.raises(OracleFailure):
                oracle.predict(np.zeros((3, 2)))

    def test_predict_after_close(self, tmp_path):
        script = stub_script(tmp_path, CONSTANT_BODY)
        oracle = connect_oracle([PY, str(script)], 2, 2)
        oracle.close()
        with pytest.raises(OracleFailure, match="closed"):
            oracle.predict(np.zeros((1, 2)))
