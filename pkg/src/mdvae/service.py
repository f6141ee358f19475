"""HTTP inference endpoints for the interactive designer.

Four JSON endpoints over a loaded checkpoint: GET /api/model, POST
/api/seed, POST /api/decode, POST /api/traverse. Handlers are plain
methods returning (status, payload) so they can be tested without a
socket; a thin stdlib HTTP wrapper serves them with CORS enabled.
"""
from __future__ import annotations

import json
import threading
from collections import OrderedDict
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import torch

from .chem import emit_smiles
from .data import BUILTIN_PROPERTIES, compute_property
from .evaluation import exported_heads, shift_to_target
from .nn.decoder import decode_sample
from .nn.heads import predict as head_predict
from .training import Checkpoint

DEFAULT_MAX_SESSIONS = 1024


@dataclass(frozen=True)
class SessionSeed:
    session_id: str
    z: torch.Tensor          # N x L base latents, never mutated
    n: int
    seed: int


class ModelService:
    """Session store plus the four endpoint handlers over one checkpoint."""

    def __init__(self, ck: Checkpoint | None = None,
                 max_sessions: int = DEFAULT_MAX_SESSIONS):
        self._lock = threading.Lock()
        self._sessions: OrderedDict[str, SessionSeed] = OrderedDict()
        self._counter = 0
        self._max_sessions = max_sessions
        self._ck = None
        self._heads = None
        if ck is not None:
            self.load(ck)

    def load(self, ck: Checkpoint):
        """Swap in a model atomically; existing sessions stay usable only if
        the latent dimension matches, so they are cleared."""
        heads = exported_heads(ck)   # explorer endpoints need per-property heads
        with self._lock:
            self._ck = ck
            self._heads = heads
            self._sessions.clear()

    @property
    def session_count(self) -> int:
        return len(self._sessions)

    def _error(self, status: int, message: str):
        return status, {"code": status, "message": message}

    def _require_model(self):
        if self._ck is None:
            return self._error(503, "no model loaded")
        return None

    # --- GET /api/model ---

    def handle_model_info(self):
        err = self._require_model()
        if err:
            return err
        ck = self._ck
        targeted = []
        for j, spec in enumerate(ck.specs):
            head = self._heads[j]
            coeffs = [float(c) for c in head.coefficients]
            targeted.append({
                "dim": j,
                "property": spec.name,
                "coefficients": coeffs,
                "coefficients_hex": [c.hex() for c in map(float, coeffs)],
                "noise_sigma": head.noise_sigma,
                "noise_sigma_hex": float(head.noise_sigma).hex(),
                "mean": spec.mean,
                "std": spec.std,
                "source": spec.source,
            })
        return 200, {
            "latent_dim": ck.config.latent_dim,
            "targeted": targeted,
            "atom_alphabet": list(ck.registry.symbols),
            "bond_alphabet": [1, 2, 3],
            "size_limits": {"min_atoms": 1, "max_atoms": ck.config.n_max},
        }

    # --- POST /api/seed ---

    def handle_seed(self, payload: dict):
        err = self._require_model()
        if err:
            return err
        ck = self._ck
        seed = int(payload.get("seed", np.random.SeedSequence().entropy % (2 ** 31)))
        rng = np.random.default_rng(seed)
        n = payload.get("n_atoms")
        if n is None:
            sizes = sorted(ck.size_histogram)
            weights = np.array([ck.size_histogram[s] for s in sizes], dtype=float)
            n = int(rng.choice(sizes, p=weights / weights.sum()))
        n = int(n)
        if not 1 <= n <= ck.config.n_max:
            return self._error(400, f"n_atoms must be in [1, {ck.config.n_max}]")
        z = torch.from_numpy(rng.standard_normal((n, ck.config.latent_dim)))
        with self._lock:
            self._counter += 1
            session_id = f"s{self._counter:08d}"
            self._sessions[session_id] = SessionSeed(session_id, z, n, seed)
            while len(self._sessions) > self._max_sessions:
                self._sessions.popitem(last=False)
        return 200, {"session": session_id, "n": n,
                     "zbar": [float(v) for v in z.mean(dim=0)]}

    # --- POST /api/decode ---

    def _decode_response(self, session: SessionSeed, overrides: dict[int, float],
                         temperature: float):
        ck = self._ck
        z = session.z
        for dim, value in overrides.items():
            z = shift_to_target(z, dim, value)
        with torch.no_grad():
            g = decode_sample(z, ck.decoder, ck.registry, temperature=temperature)
        zbar = [float(v) for v in z.mean(dim=0)]
        for dim, value in overrides.items():
            zbar[dim] = float(value)   # exact target, not the re-derived mean
        computed = {}
        predicted = {}
        for j, spec in enumerate(ck.specs):
            if spec.name in BUILTIN_PROPERTIES:
                computed[spec.name] = compute_property(g, spec.name)
            predicted[spec.name] = float(head_predict(self._heads[j], zbar[j]))
        return {
            "graph": g.to_json_obj(),
            "smiles": emit_smiles(g),
            "computed_properties": computed,
            "predicted_properties": predicted,
            "zbar": zbar,
        }

    def _validated_overrides(self, payload):
        overrides = {}
        for entry in payload.get("overrides", []):
            dim = int(entry["dim"])
            if dim >= len(self._ck.specs):
                return None, self._error(400, f"dimension {dim} is not targeted")
            overrides[dim] = float(entry["value"])
        return overrides, None

    def handle_decode(self, payload: dict):
        err = self._require_model()
        if err:
            return err
        session = self._sessions.get(str(payload.get("session")))
        if session is None:
            return self._error(404, "unknown session")
        with self._lock:
            self._sessions.move_to_end(session.session_id)
        overrides, err = self._validated_overrides(payload)
        if err:
            return err
        temperature = float(payload.get("temperature", 0.0))
        return 200, self._decode_response(session, overrides, temperature)

    # --- POST /api/traverse ---

    def handle_traverse(self, payload: dict):
        err = self._require_model()
        if err:
            return err
        session = self._sessions.get(str(payload.get("session")))
        if session is None:
            return self._error(404, "unknown session")
        try:
            dim = int(payload["dim"])
            lo, hi = float(payload["lo"]), float(payload["hi"])
            steps = int(payload["steps"])
        except (KeyError, TypeError, ValueError):
            return self._error(400, "traverse needs dim, lo, hi, steps")
        if dim >= len(self._ck.specs):
            return self._error(400, f"dimension {dim} is not targeted")
        if steps < 1:
            return self._error(400, "steps must be >= 1")
        temperature = float(payload.get("temperature", 0.0))
        grid = np.linspace(lo, hi, steps) if steps > 1 else np.array([lo])
        responses = [self._decode_response(session, {dim: float(v)}, temperature)
                     for v in grid]
        return 200, responses


# --- stdlib HTTP wrapper ---

def make_handler(service: ModelService):
    class Handler(BaseHTTPRequestHandler):
        def _send(self, status, payload):
            body = json.dumps(payload).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.end_headers()

        def do_GET(self):
            if self.path == "/api/model":
                self._send(*service.handle_model_info())
            else:
                self._send(404, {"code": 404, "message": f"unknown path {self.path}"})

        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            try:
                payload = json.loads(self.rfile.read(length) or b"{}")
            except json.JSONDecodeError:
                self._send(400, {"code": 400, "message": "invalid JSON body"})
                return
            routes = {
                "/api/seed": service.handle_seed,
                "/api/decode": service.handle_decode,
                "/api/traverse": service.handle_traverse,
            }
            handler = routes.get(self.path)
            if handler is None:
                self._send(404, {"code": 404, "message": f"unknown path {self.path}"})
                return
            try:
                self._send(*handler(payload))
            except Exception as exc:   # surface handler bugs as JSON errors
                self._send(500, {"code": 500, "message": str(exc)})

        def log_message(self, fmt, *args):
            pass

    return Handler


def serve(ck: Checkpoint, host: str = "127.0.0.1", port: int = 8000):
    """Blocking server loop; returns the server object if port 0 picked one."""
    service = ModelService(ck)
    server = ThreadingHTTPServer((host, port), make_handler(service))
    print(f"serving on http://{host}:{server.server_address[1]}")
    server.serve_forever()


def start_background_server(service: ModelService, host: str = "127.0.0.1",
                            port: int = 0):
    """Non-blocking variant for tests and demos; returns (server, thread)."""
    server = ThreadingHTTPServer((host, port), make_handler(service))
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread
