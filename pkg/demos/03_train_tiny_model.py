"""Train a small model end to end on generated data and watch the loss
terms; saves a checkpoint the later demos reuse.

Run from the repository root:  python3 demos/03_train_tiny_model.py
"""
from pathlib import Path
import tempfile

from mdvae.chem import AtomRegistry
from mdvae.data import Dataset
from mdvae.nn import LossWeights
from mdvae.sample_data import write_qm9_style_csv
from mdvae.training import TrainConfig, load_checkpoint, save_checkpoint, train

workdir = Path(tempfile.mkdtemp())
csv = workdir / "train.csv"
write_qm9_style_csv(csv, n_molecules=300, seed=11)
ds = Dataset.from_csv(csv, ["molecular_weight", "logp_atom_contrib", "clogs"],
                      AtomRegistry.qm9(), seed=0)

config = TrainConfig(
    learning_rate=3e-3,
    batch_size=32,
    epochs=3,
    seed=0,
    latent_dim=12,
    hidden_dim=16,
    weights=LossWeights(alpha=1.0, beta=2.0, gamma=1.0, lam=0.5, mono_mode="gradient"),
)

ck, log = train(ds, config, verbose=True)
print(f"\ntrained {ck.step} steps")
print(f"first step total {log[0]['total']:.3f} -> last {log[-1]['total']:.3f}")

out = Path("demos") / "_tiny_model.ckpt" if Path("demos").exists() else workdir / "model.ckpt"
save_checkpoint(ck, out)
back = load_checkpoint(out)
print(f"checkpoint saved to {out}; reload step counter: {back.step}")
