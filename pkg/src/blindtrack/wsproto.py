"""Minimal WebSocket framing (RFC 6455 subset: text, close, ping/pong).

Enough protocol for the interposer service and its test clients: HTTP
upgrade handshake, masked client-to-server frames, unmasked server frames.
Fragmentation is not supported; every message is a single text frame.
"""

from __future__ import annotations

import base64
import hashlib
import os
import socket
import struct
from typing import Optional

_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_TEXT = 0x1
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


class WsError(Exception):
    pass


def accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + _GUID).encode()).digest()
    return base64.b64encode(digest).decode()


def _read_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise WsError("connection closed mid-frame")
        buf += chunk
    return buf


def read_frame(sock: socket.socket) -> tuple[int, bytes]:
    """Returns (opcode, payload); handles extended lengths and masking."""
    head = _read_exact(sock, 2)
    fin = head[0] & 0x80
    opcode = head[0] & 0x0F
    if not fin:
        raise WsError("fragmented frames not supported")
    masked = head[1] & 0x80
    length = head[1] & 0x7F
    if length == 126:
        length = struct.unpack(">H", _read_exact(sock, 2))[0]
    elif length == 127:
        length = struct.unpack(">Q", _read_exact(sock, 8))[0]
    mask = _read_exact(sock, 4) if masked else None
    payload = _read_exact(sock, length) if length else b""
    if mask:
        payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return opcode, payload


def write_frame(sock: socket.socket, opcode: int, payload: bytes,
                mask: bool = False) -> None:
    head = bytes([0x80 | opcode])
    length = len(payload)
    mask_bit = 0x80 if mask else 0
    if length < 126:
        head += bytes([mask_bit | length])
    elif length < 1 << 16:
        head += bytes([mask_bit | 126]) + struct.pack(">H", length)
    else:
        head += bytes([mask_bit | 127]) + struct.pack(">Q", length)
    if mask:
        key = os.urandom(4)
        head += key
        payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    sock.sendall(head + payload)


def server_handshake(sock: socket.socket) -> None:
    """Read the HTTP upgrade request and complete the handshake."""
    data = b""
    while b"\r\n\r\n" not in data:
        chunk = sock.recv(4096)
        if not chunk:
            raise WsError("client closed during handshake")
        data += chunk
        if len(data) > 65536:
            raise WsError("oversized handshake")
    headers = {}
    lines = data.split(b"\r\n")
    for line in lines[1:]:
        if b":" in line:
            key, _, value = line.partition(b":")
            headers[key.strip().lower().decode()] = value.strip().decode()
    key = headers.get("sec-websocket-key")
    if headers.get("upgrade", "").lower() != "websocket" or not key:
        sock.sendall(b"HTTP/1.1 400 Bad Request\r\n\r\n")
        raise WsError("not a websocket upgrade")
    response = (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {accept_key(key)}\r\n\r\n")
    sock.sendall(response.encode())


class ServerConnection:
    def __init__(self, sock: socket.socket):
        self.sock = sock
        server_handshake(sock)

    def recv_text(self) -> Optional[str]:
        """Next text message, or None once the peer closes."""
        while True:
            try:
                opcode, payload = read_frame(self.sock)
            except (WsError, OSError):
                return None
            if opcode == OP_TEXT:
                return payload.decode("utf-8")
            if opcode == OP_PING:
                write_frame(self.sock, OP_PONG, payload)
                continue
            if opcode == OP_CLOSE:
                try:
                    write_frame(self.sock, OP_CLOSE, b"")
                except OSError:
                    pass
                return None
            # other opcodes ignored

    def send_text(self, text: str) -> None:
        write_frame(self.sock, OP_TEXT, text.encode("utf-8"))

    def close(self) -> None:
        try:
            write_frame(self.sock, OP_CLOSE, b"")
        except OSError:
            pass
        self.sock.close()


class ClientConnection:
    """Tiny client counterpart, used by the test suite."""

    def __init__(self, host: str, port: int, resource: str = "/"):
        self.sock = socket.create_connection((host, port), timeout=30)
        key = base64.b64encode(os.urandom(16)).decode()
        request = (
            f"GET {resource} HTTP/1.1\r\n"
            f"Host: {host}:{port}\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\n"
            "Sec-WebSocket-Version: 13\r\n\r\n")
        self.sock.sendall(request.encode())
        data = b""
        while b"\r\n\r\n" not in data:
            chunk = self.sock.recv(4096)
            if not chunk:
                raise WsError("server closed during handshake")
            data += chunk
        status = data.split(b"\r\n", 1)[0]
        if b"101" not in status:
            raise WsError(f"handshake rejected: {status!r}")
        expected = accept_key(key).encode()
        if expected not in data:
            raise WsError("bad Sec-WebSocket-Accept")

    def send_text(self, text: str) -> None:
        write_frame(self.sock, OP_TEXT, text.encode("utf-8"), mask=True)

    def recv_text(self) -> Optional[str]:
        while True:
            try:
                opcode, payload = read_frame(self.sock)
            except (WsError, OSError):
                return None
            if opcode == OP_TEXT:
                return payload.decode("utf-8")
            if opcode == OP_PING:
                write_frame(self.sock, OP_PONG, payload, mask=True)
                continue
            if opcode == OP_CLOSE:
                return None

    def close(self) -> None:
        try:
            write_frame(self.sock, OP_CLOSE, b"", mask=True)
        except OSError:
            pass
        self.sock.close()
