"""CLI runs end to end: local runs, gen/run, sweep/summary, and process-mode parties."""

import json
import socket
import threading

from fastlloyd.cli.main import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_PROTOCOL, main
from fastlloyd.eval.report import load_report

SYNTH = "k=2,d=2,n=400,outliers=0,seed=4"


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


class TestRunCommand:
    def test_local_run_writes_report(self, tmp_path):
        out = tmp_path / "report.json"
        argv = ["run", "--local", "--synth", SYNTH, "--eps", "1.0", "--seed", "7", "-o", str(out)]
        code = main(argv)
        assert code == EXIT_OK
        report = load_report(out)
        assert report.algo == "fast"
        assert report.bytes_per_iter == 192
        assert report.config["resolved"]["params"]["seed"] == 7

    def test_report_to_stdout(self, capsys):
        assert main(["run", "--local", "--synth", SYNTH, "--algo", "lloyd"]) == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["algo"] == "lloyd"
        assert payload["epsilon"] == float("inf")

    def test_zero_epsilon_rejected(self):
        assert main(["run", "--local", "--synth", SYNTH, "--eps", "0"]) == EXIT_CONFIG

    def test_central_mode(self, tmp_path):
        out = tmp_path / "central.json"
        assert main(["run", "--synth", SYNTH, "--mode", "central", "-o", str(out)]) == EXIT_OK
        assert load_report(out).transport == "central"

    def test_trace_flag(self, tmp_path):
        trace = tmp_path / "trace.csv"
        report = tmp_path / "r.json"
        args = ["run", "--local", "--synth", SYNTH, "--trace", str(trace), "-o", str(report)]
        assert main(args) == EXIT_OK
        assert trace.read_text().startswith("iteration,cluster,x0,x1")

    def test_gen_then_run(self, tmp_path):
        data = tmp_path / "data.csv"
        assert main(["gen", "--synth", SYNTH, "--labels", "-o", str(data)]) == EXIT_OK
        assert data.read_text().splitlines()[0] == "x0,x1,label"
        out = tmp_path / "report.json"
        assert main(["run", "--local", "--data", str(data), "--k", "2", "-o", str(out)]) == EXIT_OK
        assert load_report(out).nicv is not None

    def test_missing_data_file(self, tmp_path):
        code = main(["run", "--local", "--data", str(tmp_path / "nope.csv")])
        assert code == EXIT_IO


class TestSweepCommands:
    def test_sweep_then_summary(self, tmp_path):
        rows = tmp_path / "sweep.csv"
        code = main(
            [
                "sweep",
                "--synth",
                SYNTH,
                "--algos",
                "lloyd,fast",
                "--eps-grid",
                "0.5,1.0",
                "--runs",
                "2",
                "-o",
                str(rows),
            ]
        )
        assert code == EXIT_OK
        assert len(rows.read_text().splitlines()) == 1 + 2 * 2 * 2

        summary = tmp_path / "summary.csv"
        assert main(["summary", str(rows), "-o", str(summary)]) == EXIT_OK
        lines = summary.read_text().splitlines()
        assert lines[0].startswith("algo,eps,runs,nicv_mean")
        # Two eps rows plus one AUC row per algorithm.
        assert len(lines) == 1 + 2 * 3

    def test_bench_small_grid(self, capsys):
        assert main(["bench", "--grid", "small", "--iterations", "2"]) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].startswith("algo,n,k,d")
        assert len(lines) == 1 + 4


class TestProcessMode:
    def test_parties_match_local_run(self, tmp_path):
        port = _free_port()
        common = ["--synth", SYNTH, "--seed", "5", "--clients", "2"]
        endpoint = f"127.0.0.1:{port}"
        codes: dict[str, int] = {}

        def launch(name, argv):
            codes[name] = main(argv)

        server_argv = ["run", "--role", "server", "--listen", endpoint, "--noise-seed", "11"]
        threads = [threading.Thread(target=launch, args=("server", [*server_argv, *common]))]
        for party in range(2):
            out = tmp_path / f"client{party}.json"
            argv = ["run", "--role", "client", "--connect", endpoint, "--party-index", str(party)]
            argv += ["-o", str(out), *common]
            threads.append(threading.Thread(target=launch, args=(f"client{party}", argv)))
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join(60)
        assert codes == {"server": 0, "client0": 0, "client1": 0}

        local = tmp_path / "local.json"
        argv = ["run", "--local", "--noise-seed", "11", "-o", str(local), *common]
        assert main(argv) == EXIT_OK

        clients = [load_report(tmp_path / f"client{p}.json") for p in range(2)]
        expected = load_report(local)
        assert clients[0].centroids == clients[1].centroids == expected.centroids
        assert clients[0].deterministic_view() == expected.deterministic_view()

    def _run_parties(self, tmp_path, server_argv, client_common):
        port = _free_port()
        endpoint = f"127.0.0.1:{port}"
        codes: dict[str, int] = {}

        def launch(name, argv):
            codes[name] = main(argv)

        threads = [
            threading.Thread(
                target=launch, args=("server", ["run", "--listen", endpoint, *server_argv])
            )
        ]
        for party in range(2):
            argv = ["run", "--role", "client", "--connect", endpoint, "--party-index", str(party)]
            argv += ["-o", str(tmp_path / f"client{party}.json"), *client_common]
            threads.append(threading.Thread(target=launch, args=(f"client{party}", argv)))
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join(60)
        return codes

    def test_server_sized_by_count(self, tmp_path):
        common = ["--synth", SYNTH, "--seed", "5", "--clients", "2"]
        server = ["--role", "server", "--n-total", "400", "--k", "2", "--d", "2"]
        server += ["--seed", "5", "--clients", "2", "--noise-seed", "11"]
        codes = self._run_parties(tmp_path, server, common)
        assert codes == {"server": 0, "client0": 0, "client1": 0}

        local = tmp_path / "local.json"
        assert main(["run", "--local", "--noise-seed", "11", "-o", str(local), *common]) == 0
        assert load_report(tmp_path / "client0.json").centroids == load_report(local).centroids

    def test_server_rejects_clients_of_another_dimension(self, tmp_path):
        wide = ["--synth", "k=2,d=5,n=400,outliers=0,seed=4", "--seed", "5", "--clients", "2"]
        server = ["--role", "server", "--n-total", "400", "--k", "2", "--d", "2"]
        server += ["--seed", "5", "--clients", "2", "--noise-seed", "11"]
        codes = self._run_parties(tmp_path, server, wide)
        assert codes["server"] == EXIT_PROTOCOL
        assert codes["client0"] != EXIT_OK and codes["client1"] != EXIT_OK
