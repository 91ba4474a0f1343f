import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from tubemesh.errors import CheckpointError, GradientError, TrainingDivergedError
from tubemesh.fancnn.attention import classifier_attention
from tubemesh.fancnn.config import FanCnnConfig, FanCnnTrainConfig
from tubemesh.fancnn.loss import fancnn_loss
from tubemesh.fancnn.model import FanCnn, FanCnnOutput
from tubemesh.fancnn.sampling import PatchCorpus, sample_batch
from tubemesh.geometry.types import MprVolume, RadialField
from tubemesh.geometry.unwrap import unwrap
from tubemesh.nn import AdamW, Tensor, load_checkpoint, read_manifest, save_checkpoint

log = logging.getLogger(__name__)

CHECKPOINT_KIND = "fancnn"


def train_fancnn(
    corpus: PatchCorpus,
    config: FanCnnConfig,
    train: FanCnnTrainConfig,
    seed: int,
) -> FanCnn:
    """
    Train one network on balanced batches drawn from ``corpus``.

    The seed fixes initialisation and every sampled batch, so equal seeds
    give bit-identical weights.

    Raises
    ------
    TrainingDivergedError
        If the loss or a gradient stops being finite.
    """
    rng = np.random.default_rng(seed)
    model = FanCnn(config, rng)
    if train.epochs == 0:
        return model
    corpus.require_all_categories()
    optimizer = AdamW(model.parameters(), train.optimizer)
    model.train()
    for epoch in range(train.epochs):
        batch = sample_batch(corpus, rng, config, train)
        optimizer.zero_grad()
        radii, logits = model(Tensor(model.normalise(batch.inputs)))
        loss, terms = fancnn_loss(radii, logits, batch.radii, batch.classes)
        if not np.isfinite(terms["total"]):
            raise TrainingDivergedError(f"FanCNN loss became {terms['total']} at epoch {epoch}", seed=seed)
        try:
            loss.backward()
            lr = optimizer.step(epoch)
        except GradientError as exc:
            raise TrainingDivergedError(f"FanCNN training diverged at epoch {epoch}: {exc}", seed=seed) from exc
        if epoch % train.log_every == 0 or epoch == train.epochs - 1:
            log.info(
                f"fancnn seed={seed} epoch {epoch}: loss {terms['total']:.4f} "
                f"(cls {terms['cls']:.4f}, lumen {terms['lumen']:.4f}, cp {terms['cp']:.4f}, "
                f"ncp {terms['ncp']:.4f}) lr {lr:.2e}"
            )
    model.eval()
    return model


def train_ensemble(
    corpus: PatchCorpus,
    config: FanCnnConfig,
    train: FanCnnTrainConfig,
    seeds: Sequence[int],
    *,
    threads: int = 1,
) -> list[FanCnn]:
    """Independently seeded networks, returned in ``seeds`` order."""
    if len(corpus) == 0:
        raise ValueError("cannot train FanCNN on an empty corpus")
    log.info(f"Training {len(seeds)} FanCNN networks on {len(corpus)} arteries, sites {corpus.counts()}")
    with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
        return list(pool.map(lambda s: train_fancnn(corpus, config, train, s), seeds))


def save_ensemble(models: Sequence[FanCnn], out_dir: str | Path, seeds: Sequence[int], epochs: int) -> list[Path]:
    out_dir = Path(out_dir)
    return [
        save_checkpoint(
            out_dir / f"fancnn_{i}.tmnn",
            model,
            kind=CHECKPOINT_KIND,
            epoch=epochs,
            seed=seed,
            config=model.config.model_dump(),
        )
        for i, (model, seed) in enumerate(zip(models, seeds))
    ]


def load_ensemble(model_dir: str | Path) -> list[FanCnn]:
    """
    Rebuild every network checkpointed in ``model_dir``.

    Raises
    ------
    CheckpointError
        If the directory holds no FanCNN checkpoint or one cannot be read.
    """
    paths = sorted(Path(model_dir).glob("fancnn_*.tmnn"))
    if not paths:
        raise CheckpointError(f"no FanCNN checkpoints in '{model_dir}'")
    models = []
    for path in paths:
        manifest, _ = read_manifest(path)
        model = FanCnn(FanCnnConfig.model_validate(manifest["config"]), np.random.default_rng(0))
        load_checkpoint(path, model, kind=CHECKPOINT_KIND)
        models.append(model.eval())
    return models


def infer_output(models: Sequence[FanCnn], mpr: MprVolume) -> FanCnnOutput:
    """Ensemble prediction for a whole artery: radii and class probabilities averaged in model order."""
    config = models[0].config
    cyl = unwrap(mpr, config.n_theta, config.n_radius, config.dr)
    outputs = [model.predict(cyl) for model in models]
    return FanCnnOutput(
        radii=np.mean([o.radii for o in outputs], axis=0),
        class_probs=np.mean([o.class_probs for o in outputs], axis=0),
    )


def infer_field(models: Sequence[FanCnn], mpr: MprVolume, *, attention: bool = True) -> RadialField:
    """
    Radial field of an artery from the ensemble average, post-processed by
    classifier attention unless ``attention`` is False (then the radii are
    only clamped at zero).
    """
    output = infer_output(models, mpr)
    config = models[0].config
    if attention:
        return classifier_attention(output, config.ca_min_radius, dz=mpr.through_plane_spacing)
    radii = np.maximum(output.radii, 0.0)
    return RadialField(
        r_l=radii[0],
        r_cp=radii[1],
        r_ncp=radii[2],
        plaque_class=output.classes,
        dz=mpr.through_plane_spacing,
    )
