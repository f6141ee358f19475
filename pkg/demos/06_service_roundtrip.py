"""Spin up the designer HTTP service in-process and drive the four
endpoints the browser UI uses: model info, seed, decode, traverse."""
import tempfile
from pathlib import Path

import requests

from mdvae.chem import AtomRegistry
from mdvae.data import Dataset
from mdvae.nn import LossWeights
from mdvae.sample_data import write_qm9_style_csv
from mdvae.service import ModelService, start_background_server
from mdvae.training import TrainConfig, train

workdir = Path(tempfile.mkdtemp())
csv = workdir / "train.csv"
write_qm9_style_csv(csv, n_molecules=200, seed=17)
ds = Dataset.from_csv(csv, ["molecular_weight", "logp_atom_contrib", "clogs"],
                      AtomRegistry.qm9(), seed=0)
ck, _ = train(ds, TrainConfig(learning_rate=3e-3, batch_size=32, epochs=2, seed=0,
                              latent_dim=10, hidden_dim=16,
                              weights=LossWeights(beta=2.0, lam=0.5)))

server, _ = start_background_server(ModelService(ck))
base = f"http://127.0.0.1:{server.server_address[1]}"
print("serving at", base)

info = requests.get(f"{base}/api/model").json()
print("\nmodel info: latent_dim", info["latent_dim"], "alphabet", info["atom_alphabet"])
for t in info["targeted"]:
    print(f"  dim {t['dim']} -> {t['property']} (degree {len(t['coefficients']) - 1})")

session = requests.post(f"{base}/api/seed", json={"seed": 5}).json()
print("\nsession", session["session"], "n =", session["n"])

for value in (-3.0, 0.0, 3.0):
    resp = requests.post(f"{base}/api/decode", json={
        "session": session["session"],
        "overrides": [{"dim": 0, "value": value}],
    }).json()
    print(f"dim0={value:+.1f} -> {resp['smiles']:24s} predicted "
          f"{ {k: round(v, 3) for k, v in resp['predicted_properties'].items()} }")

arr = requests.post(f"{base}/api/traverse", json={
    "session": session["session"], "dim": 1, "lo": -2, "hi": 2, "steps": 5,
}).json()
print("\ntraverse dim 1:", [r["smiles"] for r in arr])

server.shutdown()
print("\ndone; the browser client in frontend/ consumes exactly these endpoints")
