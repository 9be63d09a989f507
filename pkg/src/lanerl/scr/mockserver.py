"""Loopback SCR server speaking just enough protocol for tests and demos."""

import socket
import threading

from lanerl.scr import protocol
from lanerl.scr.protocol import ControlLiterals

_RECV_SIZE = 8192


class MockScrServer:
    """Feeds scripted sensor frames and records every client datagram.

    Runs on its own thread and shares nothing with the client but the
    socket. `restart_at=k` injects a restart literal before frame k;
    `silent_after=k` stops transmitting after k frames so the client's
    timeout path can be exercised; `ignore_handshake=True` swallows init
    datagrams without acknowledging, to count retry attempts.
    """

    def __init__(
        self,
        frames,
        *,
        restart_at=None,
        silent_after=None,
        ignore_handshake=False,
        literals=None,
        timeout=5.0,
    ):
        self.frames = list(frames)
        self.restart_at = restart_at
        self.silent_after = silent_after
        self.ignore_handshake = ignore_handshake
        self.literals = literals or ControlLiterals()
        self.actuators = []
        self.raw_actuators = []  # exact datagram bytes, for canonical-form checks
        self.inits = []
        self.alternation_ok = True
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self.sock.bind(("127.0.0.1", 0))
        self.sock.settimeout(timeout)
        self.port = self.sock.getsockname()[1]
        self._timeout = timeout
        self._thread = None

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.join()

    def start(self):
        self._thread = threading.Thread(target=self._serve, daemon=True)
        self._thread.start()

    def join(self, timeout=10.0):
        if self._thread is not None:
            self._thread.join(timeout)
        self.sock.close()

    def _serve(self):
        try:
            self._run()
        except (TimeoutError, OSError):
            pass  # client went away; the test inspects what was recorded

    def _send(self, text, peer):
        self.sock.sendto(text.encode("ascii"), peer)

    def _await_init(self):
        while True:
            data, peer = self.sock.recvfrom(_RECV_SIZE)
            text = data.decode("ascii", "replace")
            if "(init" in text:
                self.inits.append(text)
                return peer

    def _check_no_extra_datagram(self):
        # strict alternation: nothing may arrive before the next sensor frame
        self.sock.settimeout(0.0)
        try:
            self.sock.recvfrom(_RECV_SIZE)
            self.alternation_ok = False
        except (BlockingIOError, TimeoutError):
            pass
        finally:
            self.sock.settimeout(self._timeout)

    def _run(self):
        peer = self._await_init()
        if self.ignore_handshake:
            while True:  # keep counting attempts until the client gives up
                self._await_init()
        self._send(self.literals.identified, peer)
        for k, frame in enumerate(self.frames):
            if self.restart_at == k:
                self._send(self.literals.restart, peer)
                peer = self._await_init()
                self._send(self.literals.identified, peer)
            if self.silent_after is not None and k >= self.silent_after:
                return
            self._send(protocol.format_sensors(frame), peer)
            data, _ = self.sock.recvfrom(_RECV_SIZE)
            self.raw_actuators.append(data)
            self.actuators.append(protocol.parse_actuators(data))
            self._check_no_extra_datagram()
        self._send(self.literals.shutdown, peer)
