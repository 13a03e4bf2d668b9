import socket
import subprocess
import sys
import time
from pathlib import Path

import pytest
import requests

REPO_ROOT = Path(__file__).resolve().parents[2]
FIXTURES = REPO_ROOT / "fixtures"


def free_port() -> int:
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    return port


class ServerProcess:
    """`citysim serve` in a subprocess; the SDK talks to it over TCP only."""

    def __init__(self, map_path: Path, extra_args: tuple[str, ...] = ()):
        self.port = free_port()
        self.base = f"http://127.0.0.1:{self.port}"
        self.proc = subprocess.Popen(
            [
                sys.executable,
                "-m",
                "citysim.cli",
                "serve",
                str(map_path),
                "--port",
                str(self.port),
                *extra_args,
            ],
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
        )
        deadline = time.time() + 20
        while time.time() < deadline:
            try:
                requests.get(self.base + "/clock", timeout=0.3)
                return
            except requests.RequestException:
                if self.proc.poll() is not None:
                    raise RuntimeError(
                        f"server died: {self.proc.stderr.read().decode()[-2000:]}"
                    )
                time.sleep(0.05)
        raise RuntimeError("server did not come up")

    def stop(self):
        self.proc.terminate()
        try:
            self.proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            self.proc.kill()


@pytest.fixture()
def paper_server():
    server = ServerProcess(FIXTURES / "paper_city.json")
    yield server
    server.stop()


@pytest.fixture()
def server_factory():
    servers = []

    def factory(map_path, *extra_args):
        server = ServerProcess(Path(map_path), tuple(extra_args))
        servers.append(server)
        return server

    yield factory
    for server in servers:
        server.stop()
