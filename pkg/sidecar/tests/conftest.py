import os
import socket
import threading
import time

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")
os.environ.setdefault("HF_HUB_DISABLE_PROGRESS_BARS", "1")
os.environ.setdefault("TRANSFORMERS_VERBOSITY", "error")

import pytest
import requests
import uvicorn

from embed_sidecar.fixture import build_tiny_encoder
from embed_sidecar.server import SidecarConfig, create_app


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    if report.when == "call":
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            capman = item.config.pluginmanager.getplugin("capturemanager")
            line = f"{'PASS' if report.passed else 'FAIL'}: {marker.args[0]}"
            if capman is not None:
                with capman.global_and_fixture_disabled():
                    print(line)
            else:
                print(line)
    return report


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("tiny_encoder")
    build_tiny_encoder(path)
    return path


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="session")
def sidecar_config(model_dir):
    return SidecarConfig(model=str(model_dir), port=_free_port(), max_batch=64)


@pytest.fixture(scope="session")
def sidecar_url(sidecar_config):
    """A live sidecar process serving the tiny encoder."""
    app = create_app(sidecar_config)
    server = uvicorn.Server(
        uvicorn.Config(
            app, host=sidecar_config.host, port=sidecar_config.port, log_level="warning"
        )
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    url = f"http://{sidecar_config.host}:{sidecar_config.port}"
    deadline = time.time() + 30
    while time.time() < deadline:
        try:
            if requests.get(url + "/health", timeout=1).status_code == 200:
                break
        except requests.RequestException:
            time.sleep(0.05)
    else:
        raise RuntimeError("sidecar did not come up")
    yield url
    server.should_exit = True
    thread.join(timeout=10)
