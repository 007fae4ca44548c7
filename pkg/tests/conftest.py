import httpx
import pytest

from maskit.api import build_app
from maskit.system import System

from scenario import boot_demo


@pytest.fixture
def system():
    return System("test")


@pytest.fixture
def client(system):
    transport = httpx.WSGITransport(app=build_app(system))
    with httpx.Client(transport=transport, base_url="http://mas") as c:
        yield c


@pytest.fixture
def demo(tmp_path):
    """The ping-pong demo system booted from a real project file, plus a
    client. Scheduler not started; tests drive cycles explicitly or start it."""
    sys_ = boot_demo(tmp_path)
    transport = httpx.WSGITransport(app=build_app(sys_))
    with httpx.Client(transport=transport, base_url="http://mas") as c:
        yield sys_, c
    sys_.scheduler.stop()
