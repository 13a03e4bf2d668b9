import socket
import threading
import time

import pytest
import requests
import uvicorn

from citysim.fixtures import grid_city, kg_town, paper_city
from citysim.kernel import Engine, EngineConfig
from citysim.kg import build_kg
from citysim.server import create_app


@pytest.fixture(scope="session")
def paper_bundle():
    return paper_city()


@pytest.fixture(scope="session")
def grid_bundle():
    return grid_city(5, 5, name="grid4x4")


@pytest.fixture(scope="session")
def kg_bundle():
    return kg_town()


def make_engine(bundle, **overrides) -> Engine:
    defaults = dict(interest_rate=0.0, tax_rate=0.0, wage_period=0)
    defaults.update(overrides)
    return Engine(bundle, EngineConfig(**defaults))


class LiveServer:
    def __init__(self, engine, kg=None):
        self.engine = engine
        sock = socket.socket()
        sock.bind(("127.0.0.1", 0))
        self.port = sock.getsockname()[1]
        sock.close()
        self.base = f"http://127.0.0.1:{self.port}"
        config = uvicorn.Config(
            create_app(engine, kg), host="127.0.0.1", port=self.port, log_level="error"
        )
        self._server = uvicorn.Server(config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)
        self._thread.start()
        deadline = time.time() + 10
        while time.time() < deadline:
            try:
                requests.get(self.base + "/clock", timeout=0.25)
                return
            except requests.RequestException:
                time.sleep(0.02)
        raise RuntimeError("server did not come up")

    def stop(self):
        self._server.should_exit = True
        self._thread.join(timeout=5)


@pytest.fixture
def live_server_factory():
    servers = []

    def factory(bundle, with_kg=False, **overrides):
        engine = make_engine(bundle, **overrides)
        server = LiveServer(engine, build_kg(bundle) if with_kg else None)
        servers.append(server)
        return server

    yield factory
    for server in servers:
        server.stop()
