import pytest

roomwave = pytest.importorskip(
    "roomwave", reason="integration fixtures drive the dataset toolkit")

from roomwave.evaluate import make_splits
from roomwave.generate import GenConfig
from roomwave.io import build_dataset, save_manifest
from roomwave.perturb import PerturbConfig
from roomwave.rasterize import EncodeConfig

from rmtrainer.train import TrainConfig, train


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """10 rooms x 1 tx x (1 clean + 2 copies) at 32 px, binary encoding."""
    root = tmp_path_factory.mktemp("tiny_ds")
    manifest = build_dataset(
        root,
        GenConfig(rng_seed=31, tx_per_scene=1, furniture_count_range=(2, 5)),
        PerturbConfig(rng_seed=32, mean_offset_m=0.5, copies_per_scene=2),
        encode_config=EncodeConfig(encoding="binary", xy_resolution=32,
                                   slice_step_m=0.8),
        n_scenes=10,
    )
    manifest.splits = make_splits(manifest, seed=0)
    save_manifest(manifest)
    return root


@pytest.fixture(scope="session")
def quick_ckpt(tiny_dataset, tmp_path_factory):
    """Shortest useful training run; shared by predict/adapter/CLI tests."""
    out = tmp_path_factory.mktemp("ckpt")
    train(tiny_dataset,
          TrainConfig(encoding="binary", use_snda=False, max_epochs=3,
                      early_stop_patience=3, seed=5),
          out)
    return out / "model.pt"
