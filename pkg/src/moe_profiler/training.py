"""Training loop: uncertainty-weighted multi-task optimization with Adam.

Targets are z-scored with training-split statistics; the best checkpoint is
chosen by validation total loss (training loss when the validation split is
empty); early stopping kicks in after `patience` epochs without improvement.
Runs are deterministic for a fixed config and seed.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import TrainConfig
from .corpus import iter_batches, split_train_val
from .errors import DataError, NumericError
from .losses import mixup, task_losses, uncertainty_loss
from .metrics import NormStats
from .model import SpeakerProfiler
from .optim import Adam
from .pipeline import WaveCache, align_samples, batch_forward, record_sample
from . import evaluation

log = logging.getLogger("moe_profiler.training")

LOG_HEADER = "epoch,split,L_total,L_height,L_age,L_gender,s_height,s_age,s_gender"


@dataclass
class EpochRow:
    epoch: int
    split: str
    l_total: float
    l_height: float
    l_age: float
    l_gender: float
    s_height: float
    s_age: float
    s_gender: float

    def to_csv(self):
        return (
            f"{self.epoch},{self.split},{self.l_total:.8g},{self.l_height:.8g},"
            f"{self.l_age:.8g},{self.l_gender:.8g},{self.s_height:.8g},{self.s_age:.8g},{self.s_gender:.8g}"
        )


@dataclass
class TrainResult:
    cfg: TrainConfig
    norm: NormStats
    best_params: dict  # name -> np.ndarray snapshot of the best epoch
    best_epoch: int
    log_rows: list = field(default_factory=list)
    val_report: object = None

    def log_csv(self):
        return LOG_HEADER + "\n" + "\n".join(r.to_csv() for r in self.log_rows) + "\n"


def _losses_to_row(epoch, split, sums, count, net):
    s_h, s_a, s_g = (float(t.data) for t in net.log_vars())
    lh, la, lg = (s / count for s in sums)
    total = 0.5 * (np.exp(-s_h) * lh + np.exp(-s_a) * la + np.exp(-s_g) * lg) + 0.5 * (s_h + s_a + s_g)
    return EpochRow(epoch, split, float(total), lh, la, lg, s_h, s_a, s_g)


def _batch_losses(net, norm, samples, training, orig_lens=None):
    out = batch_forward(net, samples, training=training, orig_lens=orig_lens)
    heights = [s.height_cm for s in samples]
    ages = [s.age_years for s in samples]
    genders = [s.gender for s in samples]
    return task_losses(out, heights, ages, genders, norm)


def train(cfg: TrainConfig, records, out_dir=None) -> TrainResult:
    """Train on the 'train' split of records; returns the best checkpoint state.

    When out_dir is given, writes checkpoint.bemx, train_log.csv and
    val_report.csv there.
    """
    train_recs = [r for r in records if r.split == "train"]
    val_recs = [r for r in records if r.split == "val"]
    if not val_recs and cfg.val_fraction > 0:
        train_recs, val_recs = split_train_val(train_recs, cfg.seed)
    if not train_recs:
        raise DataError("no training records")
    genders = {r.gender for r in train_recs}
    if genders != {0, 1}:
        raise DataError("training split must contain both genders")

    norm = NormStats.fit(train_recs)
    net = SpeakerProfiler(cfg)
    opt = Adam(net.parameters(), lr=cfg.lr)
    mix_rng = np.random.default_rng([cfg.seed, 7919])
    cache = WaveCache()
    use_mixup = cfg.mixup_enabled and cfg.feature_kind == "conv"

    log.info("training: %d train / %d val records, %d parameters, lr=%g, mode=%s, features=%s",
             len(train_recs), len(val_recs), net.num_parameters(), cfg.lr, cfg.mode, cfg.feature_kind)

    rows = []
    best_loss = np.inf
    best_epoch = 0
    best_params = {n: p.data.copy() for n, p in net.parameters().items()}
    stale = 0

    for epoch in range(1, cfg.max_epochs + 1):
        sums = [0.0, 0.0, 0.0]
        count = 0
        for batch_i, batch in enumerate(iter_batches(train_recs, cfg.batch_size, cfg.seed, epoch)):
            samples = [record_sample(r, cache.get(r.utterance_path)) for r in batch]
            samples, orig_lens = align_samples(samples)
            if use_mixup and len(samples) > 1 and mix_rng.random() < 0.5:
                perm = mix_rng.permutation(len(samples))
                lams = mix_rng.random(len(samples))
                samples = [mixup(s, samples[j], lam) for s, j, lam in zip(samples, perm, lams)]
                orig_lens = None  # tiled content is now part of the mixed signal
            lens = orig_lens if cfg.alignment_masking else None
            l_h, l_a, l_g = _batch_losses(net, norm, samples, training=True, orig_lens=lens)
            total = uncertainty_loss(l_h, l_a, l_g, *net.log_vars())
            if not np.isfinite(total.data):
                raise NumericError(f"non-finite training loss at epoch {epoch}, batch {batch_i}")
            opt.zero_grad()
            total.backward()
            opt.step()
            w = len(samples)
            sums[0] += float(l_h.data) * w
            sums[1] += float(l_a.data) * w
            sums[2] += float(l_g.data) * w
            count += w
        rows.append(_losses_to_row(epoch, "train", sums, count, net))

        monitor = rows[-1].l_total
        if val_recs:
            vsums = [0.0, 0.0, 0.0]
            vcount = 0
            for batch in iter_batches(val_recs, cfg.batch_size, cfg.seed, 0):
                samples = [record_sample(r, cache.get(r.utterance_path)) for r in batch]
                samples, orig_lens = align_samples(samples)
                lens = orig_lens if cfg.alignment_masking else None
                l_h, l_a, l_g = _batch_losses(net, norm, samples, training=False, orig_lens=lens)
                w = len(samples)
                vsums[0] += float(l_h.data) * w
                vsums[1] += float(l_a.data) * w
                vsums[2] += float(l_g.data) * w
                vcount += w
            rows.append(_losses_to_row(epoch, "val", vsums, vcount, net))
            monitor = rows[-1].l_total

        if monitor < best_loss:
            best_loss = monitor
            best_epoch = epoch
            best_params = {n: p.data.copy() for n, p in net.parameters().items()}
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                log.info("early stop at epoch %d (best epoch %d)", epoch, best_epoch)
                break

    # restore the best snapshot for the returned state
    for name, p in net.parameters().items():
        p.data = best_params[name].copy()

    result = TrainResult(cfg=cfg, norm=norm, best_params=best_params, best_epoch=best_epoch, log_rows=rows)
    if val_recs:
        result.val_report = evaluation.evaluate(net, norm, val_recs, wave_cache=cache)

    if out_dir is not None:
        from .checkpoint import save_checkpoint

        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        save_checkpoint(out_dir / "checkpoint.bemx", cfg, norm, best_params, best_epoch)
        (out_dir / "train_log.csv").write_text(result.log_csv())
        if result.val_report is not None:
            (out_dir / "val_report.csv").write_text(result.val_report.to_csv())
        log.info("wrote checkpoint and logs under %s", out_dir)
    return result
