import json

import numpy as np
import pytest
import requests
import torch

from mdvae.chem import MolecularGraph, is_valid, parse_smiles
from mdvae.nn import LossWeights, predict
from mdvae.evaluation import exported_heads
from mdvae.service import ModelService, start_background_server
from mdvae.training import TrainConfig, train

from synthetic import make_monotone_dataset


@pytest.fixture(scope="module")
def service(qm9_registry):
    ds = make_monotone_dataset(n_records=60, n_props=2, seed=8)
    config = TrainConfig(learning_rate=3e-3, batch_size=16, epochs=1, seed=1,
                         latent_dim=6, hidden_dim=10, kl_warmup=False,
                         weights=LossWeights(mono_mode="gradient"))
    ck, _ = train(ds, config)
    return ModelService(ck)


def test_no_model_503():
    empty = ModelService()
    status, payload = empty.handle_model_info()
    assert status == 503
    assert payload["code"] == 503


def test_model_info_schema(service):
    status, info = service.handle_model_info()
    assert status == 200
    assert info["latent_dim"] == 6
    assert [t["dim"] for t in info["targeted"]] == [0, 1]
    assert info["atom_alphabet"] == ["C", "N", "O", "F"]
    assert info["bond_alphabet"] == [1, 2, 3]
    heads = exported_heads(service._ck)
    for t, head in zip(info["targeted"], heads):
        assert t["coefficients"] == [float(c) for c in head.coefficients]
        # hex-float encoding round-trips to full precision
        decoded = [float.fromhex(h) for h in t["coefficients_hex"]]
        assert decoded == t["coefficients"]
    json.dumps(info)   # JSON-serializable


def test_seed_deterministic(service):
    s1 = service.handle_seed({"seed": 42})[1]
    s2 = service.handle_seed({"seed": 42})[1]
    assert s1["zbar"] == s2["zbar"]
    assert s1["n"] == s2["n"]
    assert s1["session"] != s2["session"]


def test_seed_n_one_valid(service):
    status, payload = service.handle_seed({"n_atoms": 1, "seed": 0})
    assert status == 200
    assert payload["n"] == 1


def test_seed_out_of_range(service):
    status, payload = service.handle_seed({"n_atoms": 99, "seed": 0})
    assert status == 400


def test_lru_eviction(qm9_registry, service):
    small = ModelService(service._ck, max_sessions=8)
    ids = [small.handle_seed({"seed": k})[1]["session"] for k in range(20)]
    assert small.session_count == 8
    status, _ = small.handle_decode({"session": ids[0]})
    assert status == 404
    status, _ = small.handle_decode({"session": ids[-1]})
    assert status == 200


def test_decode_deterministic(service):
    sid = service.handle_seed({"seed": 7})[1]["session"]
    r1 = service.handle_decode({"session": sid})[1]
    r2 = service.handle_decode({"session": sid})[1]
    assert r1["graph"] == r2["graph"]
    assert r1["smiles"] == r2["smiles"]
    assert r1["zbar"] == r2["zbar"]


def test_decode_latency_budget(service):
    import time
    sid = service.handle_seed({"seed": 8, "n_atoms": 8})[1]["session"]
    service.handle_decode({"session": sid})   # warm-up
    start = time.perf_counter()
    status, _ = service.handle_decode(
        {"session": sid, "overrides": [{"dim": 0, "value": 2.0}]})
    elapsed = time.perf_counter() - start
    assert status == 200
    assert elapsed < 1.0


def test_decode_unknown_session(service):
    status, payload = service.handle_decode({"session": "nope"})
    assert status == 404


def test_decode_untargeted_dim(service):
    sid = service.handle_seed({"seed": 1})[1]["session"]
    status, _ = service.handle_decode(
        {"session": sid, "overrides": [{"dim": 4, "value": 0.0}]})
    assert status == 400


def test_decode_override_prediction_exact(service):
    heads = exported_heads(service._ck)
    sid = service.handle_seed({"seed": 3})[1]["session"]
    for value in np.linspace(-3, 3, 7):
        _, resp = service.handle_decode(
            {"session": sid, "overrides": [{"dim": 1, "value": float(value)}]})
        assert resp["predicted_properties"]["factor_1"] == predict(heads[1], float(value))
        assert resp["zbar"][1] == float(value)


def test_decode_graph_valid(service, qm9_registry):
    rng = np.random.default_rng(0)
    for k in range(60):
        sid = service.handle_seed({"seed": int(rng.integers(2**31))})[1]["session"]
        overrides = [{"dim": int(rng.integers(2)), "value": float(rng.normal() * 3)}]
        status, resp = service.handle_decode({"session": sid, "overrides": overrides})
        assert status == 200
        g = MolecularGraph.from_json_obj(resp["graph"], qm9_registry)
        assert is_valid(g)
        assert is_valid(parse_smiles(resp["smiles"], qm9_registry))


def test_traverse_matches_decode(service):
    sid = service.handle_seed({"seed": 11})[1]["session"]
    status, arr = service.handle_traverse(
        {"session": sid, "dim": 0, "lo": -1.0, "hi": 1.0, "steps": 5})
    assert status == 200
    assert len(arr) == 5
    values = [r["zbar"][0] for r in arr]
    assert values == pytest.approx(list(np.linspace(-1, 1, 5)), abs=0)
    single = service.handle_decode(
        {"session": sid, "overrides": [{"dim": 0, "value": -1.0}]})[1]
    assert arr[0] == single


def test_traverse_single_step(service):
    sid = service.handle_seed({"seed": 12})[1]["session"]
    status, arr = service.handle_traverse(
        {"session": sid, "dim": 0, "lo": 0.5, "hi": 2.0, "steps": 1})
    assert status == 200
    assert len(arr) == 1
    assert arr[0]["zbar"][0] == 0.5


def test_traverse_validation(service):
    sid = service.handle_seed({"seed": 13})[1]["session"]
    assert service.handle_traverse({"session": sid, "dim": 0, "lo": 0, "hi": 1,
                                    "steps": 0})[0] == 400
    assert service.handle_traverse({"session": sid, "dim": 0})[0] == 400
    assert service.handle_traverse({"session": "x", "dim": 0, "lo": 0, "hi": 1,
                                    "steps": 2})[0] == 404


def test_http_roundtrip(service):
    server, thread = start_background_server(service)
    port = server.server_address[1]
    base = f"http://127.0.0.1:{port}"
    try:
        info = requests.get(f"{base}/api/model", timeout=10)
        assert info.status_code == 200
        assert info.headers["Access-Control-Allow-Origin"] == "*"
        assert info.json()["latent_dim"] == 6

        seed = requests.post(f"{base}/api/seed", json={"seed": 5}, timeout=10).json()
        decode = requests.post(f"{base}/api/decode",
                               json={"session": seed["session"]}, timeout=30)
        assert decode.status_code == 200
        assert "smiles" in decode.json()

        trav = requests.post(f"{base}/api/traverse",
                             json={"session": seed["session"], "dim": 1,
                                   "lo": -1, "hi": 1, "steps": 3}, timeout=60)
        assert trav.status_code == 200
        assert len(trav.json()) == 3

        missing = requests.post(f"{base}/api/decode", json={"session": "zz"}, timeout=10)
        assert missing.status_code == 404
        assert missing.json() == {"code": 404, "message": "unknown session"}

        preflight = requests.options(f"{base}/api/decode", timeout=10)
        assert preflight.status_code == 204
        assert "POST" in preflight.headers["Access-Control-Allow-Methods"]
    finally:
        server.shutdown()


def test_concurrent_decodes_identical(service):
    import concurrent.futures

    sid = service.handle_seed({"seed": 21})[1]["session"]
    payload = {"session": sid, "overrides": [{"dim": 0, "value": 1.5}]}
    with concurrent.futures.ThreadPoolExecutor(max_workers=4) as pool:
        results = list(pool.map(lambda _: service.handle_decode(dict(payload)),
                                range(8)))
    first = results[0][1]
    assert all(r[1] == first for r in results)
