"""In-process relay + client-daemon harness for integration tests.

Everything runs on one asyncio loop over real loopback TCP, so tests can
inspect daemon and relay state directly while the wire traffic is real.
"""

from __future__ import annotations

import asyncio
import socket
import tempfile
import os

from darkpool.client import ClientConfig, ClientDaemon
from darkpool.relay import PriceFeed, Relay, RelayServer, Store


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class Stack:
    """One relay and any number of client daemons."""

    def __init__(self, price_sources=None, bit_width=8, session_timeout=60.0,
                 data_path=None):
        self.price_sources = price_sources or {"BTC/USD": "static:100"}
        self.bit_width = bit_width
        self.session_timeout = session_timeout
        self.tmp = tempfile.mkdtemp(prefix="darkpool-test-")
        self.data_path = data_path or os.path.join(self.tmp, "relay.db")
        self.relay_port = free_port()
        self.relay: Relay | None = None
        self.server: RelayServer | None = None
        self.daemons: list[ClientDaemon] = []

    async def start_relay(self):
        store = Store(self.data_path)
        feed = PriceFeed(self.price_sources)
        self.relay = Relay(store, feed, bit_width=self.bit_width,
                           session_timeout=self.session_timeout)
        self.server = RelayServer(self.relay, "127.0.0.1", self.relay_port)
        await self.server.start()

    async def stop_relay(self):
        if self.server:
            await self.server.stop()
        self.server = None
        self.relay = None

    async def start_daemon(self, name: str, price_source="static:100",
                           **overrides) -> ClientDaemon:
        config = ClientConfig(
            relay_host="127.0.0.1", relay_port=self.relay_port,
            keyfile=os.path.join(self.tmp, f"{name}.key"),
            price_source=price_source,
            http_port=free_port(),
            display_name=name,
            **overrides)
        daemon = ClientDaemon(config)
        await daemon.start()
        self.daemons.append(daemon)
        return daemon

    async def stop(self):
        for daemon in self.daemons:
            await daemon.stop()
        self.daemons.clear()
        await self.stop_relay()


async def wait_for(predicate, timeout=20.0, interval=0.05, what="condition"):
    loop = asyncio.get_running_loop()
    deadline = loop.time() + timeout
    while loop.time() < deadline:
        if predicate():
            return
        await asyncio.sleep(interval)
    raise AssertionError(f"timed out waiting for {what}")


def run(coro, timeout=120.0):
    return asyncio.run(asyncio.wait_for(coro, timeout))
