"""JSON-lines wire protocol around the bi-level environment.

One request per line, one response per line::

    {"cmd": "reset", "instance": {...} | "instance_path": "...", "config": {"problem": "hcp", "K": 8, "seed": 0}}
    {"cmd": "observe"}
    {"cmd": "legal", "a1": 3}        # a1 optional
    {"cmd": "step", "a1": 3, "a2": 7}
    {"cmd": "shutdown"}

Responses are ``{"ok": {...}}`` or ``{"err": {"code": ..., "message": ...}}``.
Error codes: ``parse``, ``bad_request``, ``state``, ``illegal_action``,
``episode_done``, plus ``internal`` for anything unexpected. Non-integer
numbers travel as exact decimal strings.
"""

from __future__ import annotations

import json
import socketserver
import sys
from decimal import Decimal
from typing import IO

from . import env as env_mod
from .errors import BiHybError, ParseError
from .formats import format_number, load_instance, parse_document

CONFIG_KEYS = ("problem", "K", "heuristic", "seed")


class RequestError(Exception):
    def __init__(self, code: str, message: str, **extra):
        super().__init__(message)
        self.code = code
        self.message = message
        self.extra = extra


def _encode(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=True)


def _int_field(req: dict, key: str, required: bool = True):
    if key not in req:
        if required:
            raise RequestError("bad_request", f"missing integer field {key!r}")
        return None
    v = req[key]
    if not isinstance(v, int) or isinstance(v, bool):
        raise RequestError("bad_request", f"field {key!r} must be an integer")
    return v


class Session:
    """Protocol state for one client: at most one live episode."""

    def __init__(self):
        self.state: env_mod.EnvState | None = None
        self.closed = False

    def handle_line(self, line: bytes | str) -> str:
        """Answer one request line with exactly one response line (no trailing newline)."""
        try:
            payload = self._dispatch(self._decode(line))
            return _encode({"ok": payload})
        except RequestError as err:
            return _encode({"err": {"code": err.code, "message": err.message, **err.extra}})
        except Exception as err:  # a server must answer every line, whatever went wrong
            return _encode({"err": {"code": "internal", "message": f"{type(err).__name__}: {err}"}})

    @staticmethod
    def _decode(line) -> dict:
        if isinstance(line, bytes):
            try:
                line = line.decode("utf-8")
            except UnicodeDecodeError as err:
                raise RequestError("parse", f"request is not UTF-8: {err}") from None
        try:
            req = json.loads(line, parse_float=Decimal)
        except (json.JSONDecodeError, RecursionError) as err:
            raise RequestError("parse", f"invalid JSON: {err}") from None
        if not isinstance(req, dict):
            raise RequestError("bad_request", "request must be a JSON object")
        return req

    def _dispatch(self, req: dict) -> dict:
        cmd = req.get("cmd")
        if cmd == "reset":
            return self._reset(req)
        if cmd == "shutdown":
            self.closed = True
            return {}
        if cmd not in ("observe", "legal", "step"):
            raise RequestError("bad_request", f"unknown command {cmd!r}")
        if self.state is None:
            raise RequestError("state", f"{cmd!r} before reset")
        if cmd == "observe":
            return {"obs": env_mod.observe(self.state)}
        if cmd == "legal":
            return self._legal(req)
        return self._step(req)

    def _reset(self, req: dict) -> dict:
        cfg_doc = req.get("config")
        if not isinstance(cfg_doc, dict):
            raise RequestError("bad_request", "reset needs a 'config' object")
        unknown = sorted(set(cfg_doc) - set(CONFIG_KEYS))
        if unknown:
            raise RequestError("bad_request", f"unknown config keys {unknown}")
        for key in ("K", "seed"):
            if key in cfg_doc:
                _int_field(cfg_doc, key)
        try:
            cfg = env_mod.EnvConfig(**cfg_doc)
            if "instance" in req:
                instance = parse_document(req["instance"], cfg.problem)
            elif "instance_path" in req:
                path = req["instance_path"]
                if not isinstance(path, str):
                    raise RequestError("bad_request", "'instance_path' must be a string")
                instance = load_instance(path, "fhcp" if path.endswith(".hcp") else None)
            else:
                raise RequestError("bad_request", "reset needs 'instance' or 'instance_path'")
            state = env_mod.reset(instance, cfg)
        except RequestError:
            raise
        except ParseError as err:
            raise RequestError("bad_request", f"instance {err}") from None
        except (BiHybError, TypeError) as err:
            raise RequestError("bad_request", str(err)) from None
        except OSError as err:
            raise RequestError("bad_request", f"cannot read instance: {err}") from None
        self.state = state
        return {"obs": env_mod.observe(state), "objective": format_number(state.last_objective)}

    def _legal(self, req: dict) -> dict:
        a1 = _int_field(req, "a1", required=False)
        if self.state.done:
            raise RequestError("episode_done", "episode is done")
        return {"nodes": env_mod.legal_actions(self.state, a1)}

    def _step(self, req: dict) -> dict:
        a1, a2 = _int_field(req, "a1"), _int_field(req, "a2")
        s = self.state
        if s.done:
            raise RequestError("episode_done", f"episode finished after {s.k} steps")
        if not env_mod.is_legal(s, (a1, a2)):
            firsts = env_mod.legal_actions(s)
            seconds = env_mod.legal_seconds(s, a1) if a1 in firsts else []
            raise RequestError("illegal_action", f"action ({a1}, {a2}) is not legal at step {s.k}",
                               legal_first_count=len(firsts), legal_second_count=len(seconds))
        out = env_mod.step(s, (a1, a2))
        self.state = out.new_state
        return {"reward": format_number(out.reward), "objective": format_number(out.new_state.last_objective),
                "done": out.done, "obs": env_mod.observe(out.new_state)}


def serve_stream(inp: IO[bytes], out: IO[bytes]) -> None:
    """Serve one session over binary streams until shutdown or EOF."""
    session = Session()
    for line in inp:
        out.write(session.handle_line(line.rstrip(b"\r\n")).encode("ascii") + b"\n")
        out.flush()
        if session.closed:
            break


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        serve_stream(self.rfile, self.wfile)


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


def make_tcp_server(host: str, port: int) -> socketserver.ThreadingTCPServer:
    """A server handling one independent session per connection; call ``serve_forever``."""
    return _Server((host, port), _Handler)


def serve(transport: str = "stdio") -> None:
    """Run the protocol on ``stdio`` or ``tcp:PORT`` (``tcp:HOST:PORT`` also accepted)."""
    if transport == "stdio":
        serve_stream(sys.stdin.buffer, sys.stdout.buffer)
        return
    parts = transport.split(":")
    if parts[0] != "tcp" or len(parts) not in (2, 3) or not parts[-1].isdigit():
        raise ValueError(f"transport must be 'stdio' or 'tcp:PORT', got {transport!r}")
    host = parts[1] if len(parts) == 3 else "127.0.0.1"
    with make_tcp_server(host, int(parts[-1])) as server:
        server.serve_forever()
