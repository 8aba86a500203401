"""Shared plumbing between training and evaluation: features and batching."""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .audio import Waveform, read_audio
from .dsp import cmvn, fbank, mfcc
from .errors import ConfigError
from .losses import LabeledSample, tile_to


def featurize(kind, waveform: Waveform) -> np.ndarray:
    """Frame features for one utterance (fbank/mfcc are CMVN-normalized)."""
    if kind == "fbank":
        return cmvn(fbank(waveform)).frames
    if kind == "mfcc":
        return cmvn(mfcc(waveform)).frames
    raise ConfigError(f"no frame features for kind '{kind}'")


class WaveCache:
    """Read-once waveform cache keyed by path."""

    def __init__(self):
        self._cache = {}

    def get(self, path) -> Waveform:
        key = str(path)
        if key not in self._cache:
            self._cache[key] = read_audio(path)
        return self._cache[key]


def record_sample(record, wave: Waveform) -> LabeledSample:
    return LabeledSample(
        waveform=wave.samples,
        height_cm=record.height_cm,
        age_years=float(record.age_years),
        gender=float(record.gender),
    )


def align_samples(samples):
    """Tile every waveform in the batch to the longest one's length."""
    max_len = max(len(s.waveform) for s in samples)
    orig_lens = [len(s.waveform) for s in samples]
    aligned = [
        LabeledSample(tile_to(s.waveform, max_len), s.height_cm, s.age_years, s.gender) for s in samples
    ]
    return aligned, orig_lens


def batch_forward(net, samples, training=False, orig_lens=None, sample_rate=16000, force_gate=None):
    """Stack aligned samples and run the network once.

    orig_lens enables alignment masking: pooling then ignores frames that
    exist only because of tiling.
    """
    frame_mask = None
    if orig_lens is not None:
        total = len(samples[0].waveform)
        t_full = net.frames_for_samples(total, sample_rate)
        frame_mask = np.zeros((len(samples), t_full), dtype=np.float64)
        for i, n in enumerate(orig_lens):
            t_real = min(t_full, net.frames_for_samples(min(n, total), sample_rate))
            frame_mask[i, :t_real] = 1.0
    if net.cfg.feature_kind == "conv":
        wavs = np.stack([s.waveform for s in samples]).astype(np.float32)
        return net.forward_waveforms(wavs, training=training, frame_mask=frame_mask, force_gate=force_gate)
    feats = np.stack(
        [featurize(net.cfg.feature_kind, Waveform(s.waveform, sample_rate)) for s in samples]
    ).astype(np.float32)
    return net.forward_features(feats, training=training, frame_mask=frame_mask, force_gate=force_gate)


def predict_records(net, norm, records, wave_cache=None, workers=1, waveform_override=None):
    """Forward each record individually (eval mode); returns prediction arrays.

    waveform_override maps record -> Waveform and is how phone masking feeds
    altered audio through the same path.
    """
    wave_cache = wave_cache or WaveCache()

    def one(record):
        wave = waveform_override(record) if waveform_override else wave_cache.get(record.utterance_path)
        sample = record_sample(record, wave)
        out = batch_forward(net, [sample], training=False, sample_rate=wave.sample_rate)
        return (
            float(norm.de_age(out.age_z.data[0])),
            float(norm.de_height(out.height_z.data[0])),
            float(out.gender_p.data[0]),
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, records))
    else:
        results = [one(r) for r in records]

    ages_pred = np.array([r[0] for r in results])
    heights_pred = np.array([r[1] for r in results])
    genders_pred = np.array([r[2] for r in results])
    return ages_pred, heights_pred, genders_pred
