from __future__ import annotations

import httpx
import pytest

from entity_rag.errors import TransportError
from entity_rag.http import RateLimiter, ResponseCache, RetryPolicy, make_client, request_json


class FakeClock:
    def __init__(self):
        self.now = 0.0
        self.slept = []

    def __call__(self):
        return self.now

    def sleep(self, seconds):
        self.slept.append(seconds)
        self.now += seconds


def test_rate_limiter_spaces_calls():
    clock = FakeClock()
    limiter = RateLimiter(2.0, clock=clock, sleep=clock.sleep)
    for _ in range(3):
        limiter.wait()
    assert clock.slept == [0.5, 0.5]
    clock.now += 10
    limiter.wait()
    assert len(clock.slept) == 2


def test_cache_round_trip(tmp_path):
    cache = ResponseCache(tmp_path / "c")
    assert cache.get(("Smith", "it")) is None
    cache.put(("Smith", "it"), [{"qid": "Q9381"}])
    assert ResponseCache(tmp_path / "c").get(("Smith", "it")) == [{"qid": "Q9381"}]
    assert cache.get(("Smith", "en")) is None
    assert not list((tmp_path / "c").glob("*.tmp"))


def test_backoff_schedule():
    assert [RetryPolicy(3, 0.5).delay(i) for i in range(3)] == [0.5, 1.0, 2.0]


def test_request_json_retries_then_fails():
    statuses = iter([429, 502, 200])
    client = make_client(transport=httpx.MockTransport(
        lambda r: httpx.Response(next(statuses), json={"ok": True})))
    delays = []
    assert request_json(client, "GET", "http://x", retry=RetryPolicy(2, 1.0), sleep=delays.append) == {"ok": True}
    assert delays == [1.0, 2.0]
    failing = make_client(transport=httpx.MockTransport(lambda r: httpx.Response(404)))
    with pytest.raises(TransportError, match="HTTP 404"):
        request_json(failing, "GET", "http://x", retry=RetryPolicy(0, 0.0))
