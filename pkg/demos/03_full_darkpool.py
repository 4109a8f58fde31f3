"""
A complete dark pool session
============================

One relay ("Eve"), two trader daemons, real TCP on loopback. Alice wants
5 BTC, Bob sells 3. Eve matches their sizeless orders at the market price,
relays and verifies the comparison, and learns exactly one number: Bob's 3,
revealed only after the protocol proved it is the smaller side. Alice's
residual 2 goes straight back into the book.
"""

import asyncio
import tempfile
import os

from darkpool.client import ClientConfig, ClientDaemon
from darkpool.relay import PriceFeed, Relay, RelayServer, Store


async def wait_until(predicate, timeout=30.0):
    loop = asyncio.get_running_loop()
    deadline = loop.time() + timeout
    while not predicate():
        if loop.time() > deadline:
            raise TimeoutError
        await asyncio.sleep(0.05)


async def main():
    workdir = tempfile.mkdtemp(prefix="darkpool-demo-")

    # Eve: static BTC/USD price of 100, 16-bit order sizes.
    store = Store(os.path.join(workdir, "relay.db"))
    relay = Relay(store, PriceFeed({"BTC/USD": "static:100"}), bit_width=16)
    server = RelayServer(relay, "127.0.0.1", 0)
    await server.start()
    port = server._server.sockets[0].getsockname()[1]

    async def trader(name, http_port):
        daemon = ClientDaemon(ClientConfig(
            relay_port=port,
            keyfile=os.path.join(workdir, f"{name}.key"),
            price_source="static:100",   # independent reference to check Eve
            http_port=http_port,
            display_name=name))
        await daemon.start()
        await daemon.register()
        return daemon

    alice = await trader("alice", 7801)
    bob = await trader("bob", 7802)

    order_a = await alice.place_order("BTC", "USD", size=5)
    order_b = await bob.place_order("USD", "BTC", size=3)
    print("orders are sizeless on the wire; sizes live only in the daemons")

    # Eve matches and both humans confirm (here: scripted).
    await wait_until(lambda: alice.decisions and bob.decisions)
    session_id = next(iter(alice.decisions))
    print("match ticket price check:",
          alice.decisions[session_id].price_check["verdict"])
    alice.decide(session_id, True)
    bob.decide(session_id, True)

    await wait_until(lambda: alice.fills and bob.fills)
    fill = alice.fills[0]
    print(f"fill: {fill['size']} @ {fill['price']}")

    oa = alice.orders[order_a["order_id"]]
    print("alice residual:", oa.residual, "- order status:", oa.status)
    print("eve's book for alice's order:",
          relay.store.get_order(order_a["order_id"])["state"])
    print("eve's only size knowledge: the revealed",
          fill["size"], "(bob's, fully filled)")

    await alice.stop()
    await bob.stop()
    await server.stop()


if __name__ == "__main__":
    asyncio.run(main())
