"""Loopback HTTP view service for the interactive display simulator.

GET /view?ax=<f>&ay=<f>&mode=<composite|falsecolor|panels> -> PNG frame
GET /meta -> JSON {grid shape, panel layout, modes, blend}

Requests are stateless; poses outside [-0.5, 0.5] are clamped and flagged
with the X-Pose-Clamped response header.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .pipeline import RenderState

MODES = ("composite", "falsecolor", "panels")


def _make_handler(state: RenderState):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):
            pass

        def _send(self, code, body, content_type, headers=()):
            self.send_response(code)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            for k, v in headers:
                self.send_header(k, v)
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            url = urlparse(self.path)
            try:
                if url.path == "/meta":
                    v_y, v_x = state.grid_shape
                    meta = {
                        "grid": {"V_x": v_x, "V_y": v_y},
                        "layout": state.layout.to_dict(),
                        "modes": list(MODES),
                        "blend": state.blend.value,
                        "calibrated": state.calibration is not None,
                    }
                    self._send(200, json.dumps(meta).encode(), "application/json")
                elif url.path == "/view":
                    q = parse_qs(url.query)
                    ax = float(q.get("ax", ["0"])[0])
                    ay = float(q.get("ay", ["0"])[0])
                    mode = q.get("mode", ["composite"])[0]
                    if mode not in MODES:
                        raise ValueError(f"unknown mode {mode!r}")
                    png, clamped = state.render_png(ax, ay, mode)
                    self._send(200, png, "image/png",
                               headers=[("X-Pose-Clamped", "1" if clamped else "0")])
                else:
                    self._send(404, b"not found", "text/plain")
            except (ValueError, KeyError) as e:
                self._send(400, str(e).encode(), "text/plain")

    return Handler


class ViewService:
    """Threaded HTTP server wrapper; `port=0` picks a free port."""

    def __init__(self, state: RenderState, host="127.0.0.1", port=8377):
        self.server = ThreadingHTTPServer((host, port), _make_handler(state))
        self._thread = None

    @property
    def port(self):
        return self.server.server_address[1]

    def start(self):
        self._thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self.server.shutdown()
        self.server.server_close()
        if self._thread:
            self._thread.join(timeout=5)

    def serve_forever(self):
        try:
            self.server.serve_forever()
        finally:
            self.server.server_close()
