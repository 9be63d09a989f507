"""Blocking UDP client loop: one actuator datagram per sensor datagram."""

import socket
from dataclasses import dataclass

from lanerl.scr import protocol
from lanerl.scr.protocol import ControlLiterals

_RECV_SIZE = 8192
_SOCKET_ERRORS = (TimeoutError, ConnectionRefusedError, ConnectionResetError)


class ScrConnectionError(ConnectionError):
    pass


@dataclass
class SessionSummary:
    steps: int = 0
    restarts: int = 0
    timeouts: int = 0


def _clean(data):
    return data.decode("ascii", "replace").rstrip("\x00").strip()


def _handshake(sock, addr, init, retries, literals):
    """Send init until the server acknowledges.

    Returns None on a plain ack, or the raw datagram if the server skipped
    the ack and went straight to sensor frames (some builds do).
    """
    for _ in range(retries):
        sock.sendto(init, addr)
        try:
            data, _ = sock.recvfrom(_RECV_SIZE)
        except _SOCKET_ERRORS:
            continue
        if _clean(data) == literals.identified:
            return None
        return data
    raise ScrConnectionError(
        f"no response from {addr[0]}:{addr[1]} after {retries} attempts"
    )


def run_client(
    host,
    port,
    agent,
    timeout_ms=1000.0,
    *,
    client_id="SCR",
    angles=None,
    retries=5,
    max_steps=None,
    literals=None,
    on_restart=None,
):
    """Drive `agent` (SensorFrame -> ActuatorFrame) against an SCR server.

    The loop is strictly alternating: every actuator datagram answers
    exactly one sensor datagram. Handshake failure after `retries`
    attempts raises ScrConnectionError. Mid-session timeouts are counted
    in the summary; `retries` consecutive misses end the session. A
    restart literal re-runs the handshake and calls `on_restart` so the
    agent can reset per-episode state.
    """
    literals = literals or ControlLiterals()
    summary = SessionSummary()
    init = protocol.format_init(client_id, angles).encode("ascii")
    addr = (host, port)
    sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    sock.settimeout(timeout_ms / 1000.0)
    try:
        pending = _handshake(sock, addr, init, retries, literals)
        misses = 0
        while True:
            if pending is not None:
                data, pending = pending, None
            else:
                try:
                    data, _ = sock.recvfrom(_RECV_SIZE)
                except _SOCKET_ERRORS:
                    summary.timeouts += 1
                    misses += 1
                    if misses >= retries:
                        break
                    continue
            misses = 0
            text = _clean(data)
            if text == literals.shutdown:
                break
            if text == literals.restart:
                summary.restarts += 1
                if on_restart is not None:
                    on_restart()
                pending = _handshake(sock, addr, init, retries, literals)
                continue
            frame = protocol.parse_sensors(text)
            reply = protocol.format_actuators(agent(frame))
            sock.sendto(reply.encode("ascii"), addr)
            summary.steps += 1
            if max_steps is not None and summary.steps >= max_steps:
                break
    finally:
        sock.close()
    return summary
