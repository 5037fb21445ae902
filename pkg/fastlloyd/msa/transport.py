"""Byte transports for the aggregation protocol: in-process loopback and TCP sockets.

Both transports share the same u32 length-prefix framing, so a loopback run moves
exactly the bytes a TCP run would.
"""

from __future__ import annotations

import logging
import socket
import threading
import time
from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass

from fastlloyd.core.exceptions import RoundTimeoutError, TransportError
from fastlloyd.msa.wire import PREFIX_LEN, frame, frame_length

logger = logging.getLogger(__name__)


@dataclass
class ChannelStats:
    sends: int = 0
    frames_sent: int = 0
    frames_received: int = 0
    wire_bytes_sent: int = 0
    wire_bytes_received: int = 0


class Channel(ABC):
    """One end of a bidirectional framed connection."""

    def __init__(self, latency_ms: float = 0.0, name: str = ""):
        self.latency_s = max(0.0, latency_ms) / 1000.0
        self.name = name
        self.stats = ChannelStats()

    def send_frames(self, bodies: Sequence[bytes]) -> None:
        """Frame every body and write them all in a single send operation."""
        data = b"".join(frame(body) for body in bodies)
        if self.latency_s:
            time.sleep(self.latency_s)
        self._send(data)
        self.stats.sends += 1
        self.stats.frames_sent += len(bodies)
        self.stats.wire_bytes_sent += len(data)

    def recv_frame(self, timeout: float | None = None) -> bytes:
        deadline = None if timeout is None else time.monotonic() + timeout
        length = frame_length(self._recv_exact(PREFIX_LEN, deadline))
        body = self._recv_exact(length, deadline) if length else b""
        self.stats.frames_received += 1
        self.stats.wire_bytes_received += PREFIX_LEN + length
        return body

    @abstractmethod
    def _send(self, data: bytes) -> None: ...

    @abstractmethod
    def _recv_exact(self, size: int, deadline: float | None) -> bytes: ...

    @abstractmethod
    def close(self) -> None: ...


def _remaining(deadline: float | None) -> float | None:
    if deadline is None:
        return None
    return deadline - time.monotonic()


class _Pipe:
    """One direction of a loopback connection."""

    def __init__(self) -> None:
        self.buffer = bytearray()
        self.closed = False
        self.cond = threading.Condition()

    def write(self, data: bytes) -> None:
        with self.cond:
            if self.closed:
                raise TransportError("loopback peer closed")
            self.buffer.extend(data)
            self.cond.notify_all()

    def read_exact(self, size: int, deadline: float | None) -> bytes:
        with self.cond:
            while len(self.buffer) < size:
                if self.closed:
                    raise TransportError("loopback peer closed mid-frame")
                remaining = _remaining(deadline)
                if remaining is not None and remaining <= 0:
                    raise RoundTimeoutError(f"timed out waiting for {size} bytes")
                self.cond.wait(remaining)
            data = bytes(self.buffer[:size])
            del self.buffer[:size]
            return data

    def close(self) -> None:
        with self.cond:
            self.closed = True
            self.cond.notify_all()


class LoopbackChannel(Channel):
    def __init__(self, inbound: _Pipe, outbound: _Pipe, latency_ms: float = 0.0, name: str = ""):
        super().__init__(latency_ms, name)
        self._inbound = inbound
        self._outbound = outbound

    def _send(self, data: bytes) -> None:
        self._outbound.write(data)

    def _recv_exact(self, size: int, deadline: float | None) -> bytes:
        return self._inbound.read_exact(size, deadline)

    def close(self) -> None:
        self._outbound.close()
        self._inbound.close()


def loopback_pair(
    latency_ms: float = 0.0, name: str = ""
) -> tuple[LoopbackChannel, LoopbackChannel]:
    """(server end, client end) of one in-process connection."""
    up, down = _Pipe(), _Pipe()
    server_end = LoopbackChannel(inbound=up, outbound=down, latency_ms=latency_ms, name=name)
    client_end = LoopbackChannel(inbound=down, outbound=up, latency_ms=latency_ms, name=name)
    return server_end, client_end


class SocketChannel(Channel):
    def __init__(self, sock: socket.socket, latency_ms: float = 0.0, name: str = ""):
        super().__init__(latency_ms, name)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._sock = sock

    def _send(self, data: bytes) -> None:
        try:
            self._sock.settimeout(None)
            self._sock.sendall(data)
        except OSError as exc:
            raise TransportError(f"send to {self.name or 'peer'} failed: {exc}") from exc

    def _recv_exact(self, size: int, deadline: float | None) -> bytes:
        chunks = bytearray()
        while len(chunks) < size:
            remaining = _remaining(deadline)
            if remaining is not None and remaining <= 0:
                raise RoundTimeoutError(f"timed out waiting for {size} bytes from {self.name}")
            self._sock.settimeout(remaining)
            try:
                chunk = self._sock.recv(size - len(chunks))
            except socket.timeout as exc:
                raise RoundTimeoutError(f"timed out waiting for {self.name or 'peer'}") from exc
            except OSError as exc:
                raise TransportError(f"recv from {self.name or 'peer'} failed: {exc}") from exc
            if not chunk:
                raise TransportError(f"{self.name or 'peer'} closed the connection")
            chunks.extend(chunk)
        return bytes(chunks)

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


def parse_endpoint(value: str) -> tuple[str, int]:
    host, sep, port = value.rpartition(":")
    if not sep or not port.isdigit():
        raise TransportError(f"endpoint must look like host:port, got {value!r}")
    return host or "127.0.0.1", int(port)


class Listener:
    """Server-side TCP listener that accepts exactly M client connections."""

    def __init__(self, host: str, port: int, backlog: int = 64):
        try:
            self._sock = socket.create_server((host, port), backlog=backlog)
        except OSError as exc:
            raise TransportError(f"cannot listen on {host}:{port}: {exc}") from exc
        self.host, self.port = self._sock.getsockname()[:2]
        logger.info("Listening on %s:%d", self.host, self.port)

    def accept(self, clients: int, timeout: float, latency_ms: float = 0.0) -> list[SocketChannel]:
        channels: list[SocketChannel] = []
        deadline = time.monotonic() + timeout
        try:
            while len(channels) < clients:
                self._sock.settimeout(max(0.0, deadline - time.monotonic()))
                try:
                    conn, addr = self._sock.accept()
                except socket.timeout as exc:
                    raise RoundTimeoutError(
                        f"only {len(channels)} of {clients} clients connected"
                    ) from exc
                logger.info("Client connected from %s:%d", addr[0], addr[1])
                channels.append(SocketChannel(conn, latency_ms, name=f"{addr[0]}:{addr[1]}"))
        except Exception:
            for channel in channels:
                channel.close()
            raise
        return channels

    def close(self) -> None:
        self._sock.close()


def connect(
    host: str,
    port: int,
    timeout: float = 10.0,
    latency_ms: float = 0.0,
    retry_interval: float = 0.1,
) -> SocketChannel:
    """Connect to the server, retrying until ``timeout`` elapses."""
    deadline = time.monotonic() + timeout
    while True:
        try:
            sock = socket.create_connection((host, port), timeout=max(0.1, timeout))
            return SocketChannel(sock, latency_ms, name=f"{host}:{port}")
        except OSError as exc:
            if time.monotonic() >= deadline:
                raise TransportError(f"cannot connect to {host}:{port}: {exc}") from exc
            time.sleep(retry_interval)


class Transport(ABC):
    """Wires a server to M clients; returns (server channels, client channels)."""

    @abstractmethod
    def connect(self, clients: int) -> tuple[list[Channel], list[Channel]]: ...


class LoopbackTransport(Transport):
    def __init__(self, latency_ms: float = 0.0):
        self.latency_ms = latency_ms

    def connect(self, clients: int) -> tuple[list[Channel], list[Channel]]:
        pairs = [loopback_pair(self.latency_ms, name=f"party-{i}") for i in range(clients)]
        return [p[0] for p in pairs], [p[1] for p in pairs]


class TcpTransport(Transport):
    """All parties in one process over real sockets on ``host`` (port 0 picks a free port)."""

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        latency_ms: float = 0.0,
        connect_timeout_s: float = 10.0,
    ):
        self.host = host
        self.port = port
        self.latency_ms = latency_ms
        self.connect_timeout_s = connect_timeout_s

    def connect(self, clients: int) -> tuple[list[Channel], list[Channel]]:
        listener = Listener(self.host, self.port)
        try:
            client_ends: list[Channel] = [
                connect(listener.host, listener.port, self.connect_timeout_s, self.latency_ms)
                for _ in range(clients)
            ]
            server_ends: list[Channel] = list(
                listener.accept(clients, self.connect_timeout_s, self.latency_ms)
            )
        finally:
            listener.close()
        return server_ends, client_ends
