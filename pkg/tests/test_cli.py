"""End-to-end CLI runs over the bundled scenarios."""

import json
import os

import pytest

from treeswarm.cli import main
from treeswarm.controller import GainDesign
from treeswarm.potential import PotentialParams
from treeswarm.scenario import load_scenario
from treeswarm.verifier import check_design

SCENARIOS = os.path.join(os.path.dirname(__file__), "..", "scenarios")


def scen(name):
    return os.path.join(SCENARIOS, name + ".json")


class TestDesign:
    def test_default_scenario_feasible(self, capsys):
        assert main(["design", "--scenario", scen("path3_default")]) == 0
        out = capsys.readouterr().out
        assert "ALL CHECKS PASSED" in out
        assert "psi_max" in out

    def test_infeasible_epsilon_exit_3(self, capsys):
        assert main(["design", "--scenario", scen("infeasible_epsilon")]) == 3
        assert "design infeasible" in capsys.readouterr().err

    def test_report_round_trip(self, tmp_path, capsys):
        assert main(["design", "--scenario", scen("path3_default"), "--out", str(tmp_path)]) == 0
        with open(tmp_path / "design.json") as fh:
            payload = json.load(fh)
        design = GainDesign.from_dict(payload["design"])
        params = PotentialParams(
            P=payload["params"]["P"],
            Q=payload["params"]["Q"],
            r=payload["params"]["r"],
            epsilon=payload["params"]["epsilon"],
        )
        scenario = load_scenario(scen("path3_default"))
        report = check_design(scenario, design, params)
        assert report.to_dict()["passed"] == payload["conditions"]["passed"] is True


class TestSimulateVerify:
    def test_zero_force_trace_decays_and_verifies(self, tmp_path, capsys):
        assert main(
            ["simulate", "--scenario", scen("sync_path4"), "--out", str(tmp_path)]
        ) == 0
        assert (tmp_path / "trace.csv").exists()
        assert (tmp_path / "meta.json").exists()
        assert main(["verify", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "certificate.json").exists()
        cert = json.loads((tmp_path / "certificate.json").read_text())
        assert cert["passed"]

    def test_seeded_rerun_reproducible(self, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        args = ["simulate", "--scenario", scen("path3_default"), "--seed", "77",
                "--duration", "2.0"]
        assert main(args + ["--out", str(out_a)]) == 0
        assert main(args + ["--out", str(out_b)]) == 0
        assert (out_a / "trace.csv").read_bytes() == (out_b / "trace.csv").read_bytes()

    def test_invalid_scenario_schema_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"schema": 1, "name": "nope", "mystery_key": 1}))
        assert main(["simulate", "--scenario", str(bad), "--out", str(tmp_path / "o")]) == 2
        assert "scenario" in capsys.readouterr().err

    def test_negative_control_verify_exit_4(self, tmp_path, capsys):
        assert main(
            ["simulate", "--scenario", scen("negative_overdrive"), "--out", str(tmp_path),
             "--duration", "15.0"]
        ) == 0
        assert main(["verify", "--out", str(tmp_path)]) == 4
        out = capsys.readouterr().out
        assert "VERIFICATION FAILED" in out

    def test_dt_override_changes_grid(self, tmp_path):
        assert main(
            ["simulate", "--scenario", scen("path3_default"), "--out", str(tmp_path),
             "--dt", "0.002", "--duration", "1.0"]
        ) == 0
        meta = json.loads((tmp_path / "meta.json").read_text())
        assert meta["n_samples"] == 501


class TestUsage:
    def test_missing_subcommand_exit_2(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_bad_bind_rejected(self, capsys):
        assert main(["serve", "--scenario", scen("live_path3"), "--bind", "nonsense"]) == 2


class TestServeEndToEnd:
    def test_serve_streams_frames_over_tcp(self):
        import socket
        import subprocess
        import sys
        import time
        import urllib.request

        with socket.socket() as s:
            s.bind(("127.0.0.1", 0))
            port = s.getsockname()[1]
        proc = subprocess.Popen(
            [sys.executable, "-m", "treeswarm.cli", "serve",
             "--scenario", scen("live_path3"), "--bind", f"127.0.0.1:{port}"],
            stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
        )
        try:
            deadline = time.monotonic() + 20.0
            summary = None
            while time.monotonic() < deadline:
                try:
                    with urllib.request.urlopen(
                        f"http://127.0.0.1:{port}/scenario", timeout=1.0
                    ) as resp:
                        summary = json.loads(resp.read())
                    break
                except OSError:
                    time.sleep(0.25)
            assert summary is not None, "service did not come up"
            assert summary["n_robots"] == 3
            assert summary["rate_hz"] == 30.0

            import asyncio

            async def roundtrip():
                import websockets

                async with websockets.connect(f"ws://127.0.0.1:{port}/ws") as ws:
                    hello = json.loads(await ws.recv())
                    assert hello["type"] == "hello"
                    f_bar = hello["scenario"]["f_bar"]
                    await ws.send(json.dumps(
                        {"type": "force", "fx": 3 * f_bar, "fy": 0.0, "seq": 1}
                    ))
                    saw_ack = saw_frame = False
                    for _ in range(40):
                        msg = json.loads(await asyncio.wait_for(ws.recv(), 3.0))
                        if msg["type"] == "force_ack":
                            assert abs(msg["fx"] - f_bar) < 1e-9
                            saw_ack = True
                        if msg["type"] == "frame" and abs(msg["f"][0] - f_bar) < 1e-9:
                            saw_frame = True
                        if saw_ack and saw_frame:
                            break
                    assert saw_ack and saw_frame

            asyncio.run(roundtrip())
        finally:
            proc.terminate()
            proc.wait(timeout=10)
