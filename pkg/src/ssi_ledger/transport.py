"""Stream transport for peers in separate processes.

Addresses are ``HOST:PORT`` (TCP), ``unix:PATH`` or a bare filesystem path
(Unix socket). After connecting, each side writes its 32-byte public key;
everything after that is wire frames, exactly as the protocol encodes them.
The handshake only names the peer for routing. Authentication comes from
the signed blocks inside the protocol, not from the connection.

:class:`Endpoint` multiplexes every connection of one :class:`Peer` with
``selectors``: inbound frames go to ``Peer.handle`` and the replies are
routed back by public key, dialing the address book when no connection to
that key is open.
"""

from __future__ import annotations

import os
import selectors
import socket
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .errors import TransportError
from .identity import PUBLIC_KEY_BYTES
from .protocol import Peer
from .protocol.messages import MAX_FRAME

Clock = Callable[[], int]


def parse_address(text: str):
    """Return ``(family, sockaddr)`` for an address string."""
    if text.startswith("unix:"):
        return socket.AF_UNIX, text[5:]
    if text.startswith("tcp:"):
        text = text[4:]
    host, sep, port = text.rpartition(":")
    if sep and port.isdigit() and "/" not in text:
        return socket.AF_INET, (host or "127.0.0.1", int(port))
    return socket.AF_UNIX, text


def listen(address: str) -> socket.socket:
    family, addr = parse_address(address)
    sock = socket.socket(family, socket.SOCK_STREAM)
    if family == socket.AF_UNIX:
        if os.path.exists(addr):
            os.unlink(addr)
    else:
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind(addr)
    except OSError as exc:
        sock.close()
        raise TransportError(f"cannot listen on {address}: {exc}") from None
    sock.listen(8)
    return sock


def wall_clock() -> int:
    return time.time_ns() // 1_000_000


@dataclass(eq=False)
class _Conn:
    sock: socket.socket
    inbound: bool
    remote: Optional[bytes] = None
    buf: bytearray = field(default_factory=bytearray)


class Endpoint:
    def __init__(self, peer: Peer, book: dict[bytes, str] | None = None, clock: Clock = wall_clock,
                 timeout: float = 10.0):
        self.peer = peer
        self.book = dict(book or {})
        self.clock = clock
        self.timeout = timeout
        self.sel = selectors.DefaultSelector()
        self.by_key: dict[bytes, _Conn] = {}
        self.listener: Optional[socket.socket] = None
        self.closed_inbound = 0

    # -- connections ---------------------------------------------------------
    def serve(self, address: str) -> None:
        self.listener = listen(address)
        self.listener.setblocking(False)
        self.sel.register(self.listener, selectors.EVENT_READ, None)

    def connect(self, address: str) -> bytes:
        """Dial ``address``, exchange keys and return the remote public key."""
        family, addr = parse_address(address)
        sock = socket.socket(family, socket.SOCK_STREAM)
        sock.settimeout(self.timeout)
        try:
            sock.connect(addr)
            sock.sendall(self.peer.pk)
            remote = _recv_exact(sock, PUBLIC_KEY_BYTES)
        except OSError as exc:
            sock.close()
            raise TransportError(f"cannot connect to {address}: {exc}") from None
        conn = _Conn(sock, False, remote)
        self._register(conn)
        self.book.setdefault(remote, address)
        return remote

    def _register(self, conn: _Conn) -> None:
        conn.sock.setblocking(False)
        self.sel.register(conn.sock, selectors.EVENT_READ, conn)
        if conn.remote is not None:
            self.by_key[conn.remote] = conn

    def _close(self, conn: _Conn) -> None:
        try:
            self.sel.unregister(conn.sock)
        except (KeyError, ValueError):
            pass
        conn.sock.close()
        if conn.remote is not None and self.by_key.get(conn.remote) is conn:
            del self.by_key[conn.remote]
        if conn.inbound:
            self.closed_inbound += 1

    def close(self) -> None:
        for key in list(self.sel.get_map().values()):
            if key.data is not None:
                self._close(key.data)
        if self.listener is not None:
            self.sel.unregister(self.listener)
            self.listener.close()
            self.listener = None

    # -- routing -------------------------------------------------------------
    def route(self, outgoing) -> None:
        pending = list(outgoing)
        while pending:
            dst, frame = pending.pop(0)
            conn = self.by_key.get(dst)
            if conn is None and dst in self.book:
                try:
                    self.connect(self.book[dst])
                    conn = self.by_key.get(dst)
                except TransportError:
                    conn = None
            if conn is not None:
                try:
                    conn.sock.setblocking(True)
                    conn.sock.sendall(frame)
                    conn.sock.setblocking(False)
                    continue
                except OSError:
                    self._close(conn)
            pending += self.peer.unreachable(dst, frame, self.clock())

    def _accept(self) -> None:
        sock, _ = self.listener.accept()
        try:
            sock.sendall(self.peer.pk)
        except OSError:
            sock.close()
            return
        self._register(_Conn(sock, True))

    def _readable(self, conn: _Conn) -> None:
        try:
            data = conn.sock.recv(65536)
        except BlockingIOError:
            return
        except OSError:
            data = b""
        if not data:
            self._close(conn)
            return
        conn.buf += data
        if conn.remote is None:
            if len(conn.buf) < PUBLIC_KEY_BYTES:
                return
            conn.remote = bytes(conn.buf[:PUBLIC_KEY_BYTES])
            del conn.buf[:PUBLIC_KEY_BYTES]
            self.by_key[conn.remote] = conn
        while len(conn.buf) >= 5:
            n = int.from_bytes(conn.buf[:4], "big")
            if n > MAX_FRAME:
                self._close(conn)
                return
            if len(conn.buf) < 5 + n:
                break
            frame = bytes(conn.buf[:5 + n])
            del conn.buf[:5 + n]
            self.route(self.peer.handle(conn.remote, frame, self.clock()))

    def poll(self, timeout: float) -> bool:
        """Process whatever is ready within ``timeout`` seconds. False if nothing was."""
        events = self.sel.select(timeout)
        for key, _ in events:
            if key.data is None:
                self._accept()
            else:
                self._readable(key.data)
        return bool(events)

    def run_until(self, done: Callable[[], bool], timeout: Optional[float] = None) -> bool:
        deadline = time.monotonic() + (self.timeout if timeout is None else timeout)
        while not done():
            left = deadline - time.monotonic()
            if left <= 0:
                return False
            self.poll(min(left, 0.2))
        return True


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    out = bytearray()
    while len(out) < n:
        chunk = sock.recv(n - len(out))
        if not chunk:
            raise OSError("connection closed during handshake")
        out += chunk
    return bytes(out)
