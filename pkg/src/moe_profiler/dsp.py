"""Classic acoustic features: framing, log-mel filter bank, MFCC, deltas, CMVN.

Conventions (the usual ones): 25 ms Hamming frames every 10 ms, pre-emphasis
0.97, 512-point FFT, 80 triangular mel filters on the HTK mel scale spanning
0 to Nyquist, log floor 1e-10. Filter bank features append first and second
order deltas (80*3 = 240 dims); MFCC keeps 16 DCT-II coefficients (16*3 = 48).
"""

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct as _dct

from .audio import Waveform
from .errors import LengthError, ShapeError

FRAME_LEN_S = 0.025
FRAME_SHIFT_S = 0.010
PREEMPH = 0.97
NFFT = 512
N_MELS = 80
N_CEPS = 16
LOG_FLOOR = 1e-10

FEATURE_DIMS = {"fbank": 3 * N_MELS, "mfcc": 3 * N_CEPS}


@dataclass
class FeatureSequence:
    """T x D feature matrix with its frame rate and the family it belongs to."""

    frames: np.ndarray
    frame_shift_s: float
    kind: str

    def __post_init__(self):
        self.frames = np.asarray(self.frames)
        if self.frames.ndim != 2 or self.frames.shape[0] < 1:
            raise ShapeError(f"feature matrix must be T x D with T >= 1, got {self.frames.shape}")
        want = FEATURE_DIMS.get(self.kind)
        if want is not None and self.frames.shape[1] != want:
            raise ShapeError(f"{self.kind} features must have width {want}, got {self.frames.shape[1]}")

    @property
    def num_frames(self):
        return self.frames.shape[0]

    @property
    def dim(self):
        return self.frames.shape[1]


def num_frames(n_samples, sample_rate, frame_len_s=FRAME_LEN_S, frame_shift_s=FRAME_SHIFT_S):
    """Frame count 1 + floor((N - L) / S); raises if the signal is shorter than one frame."""
    flen = int(round(frame_len_s * sample_rate))
    fshift = int(round(frame_shift_s * sample_rate))
    if n_samples < flen:
        raise LengthError(f"signal of {n_samples} samples is shorter than one frame ({flen} samples minimum)")
    return 1 + (n_samples - flen) // fshift


def _frame_array(x, sample_rate, frame_len_s, frame_shift_s, window=True):
    flen = int(round(frame_len_s * sample_rate))
    fshift = int(round(frame_shift_s * sample_rate))
    t = num_frames(len(x), sample_rate, frame_len_s, frame_shift_s)
    idx = fshift * np.arange(t)[:, None] + np.arange(flen)[None, :]
    frames = x[idx]
    if window:
        frames = frames * np.hamming(flen)
    return frames


def frame_signal(w: Waveform, frame_len_s=FRAME_LEN_S, frame_shift_s=FRAME_SHIFT_S):
    """Split a waveform into overlapping Hamming-windowed frames (T x L)."""
    return _frame_array(w.samples, w.sample_rate, frame_len_s, frame_shift_s)


def pre_emphasis(x, coeff=PREEMPH):
    y = np.empty_like(x)
    y[0] = x[0]
    y[1:] = x[1:] - coeff * x[:-1]
    return y


def mel_from_hz(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def hz_from_mel(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels=N_MELS, nfft=NFFT, sample_rate=16000, fmin=0.0, fmax=None):
    """Triangular mel filters evaluated on FFT bin center frequencies.

    Returns an (n_mels, nfft//2 + 1) weight matrix.
    """
    if fmax is None:
        fmax = sample_rate / 2.0
    edges = hz_from_mel(np.linspace(mel_from_hz(fmin), mel_from_hz(fmax), n_mels + 2))
    bin_hz = np.arange(nfft // 2 + 1) * (sample_rate / nfft)
    weights = np.zeros((n_mels, nfft // 2 + 1))
    for j in range(n_mels):
        lo, mid, hi = edges[j], edges[j + 1], edges[j + 2]
        up = (bin_hz - lo) / (mid - lo)
        down = (hi - bin_hz) / (hi - mid)
        weights[j] = np.maximum(0.0, np.minimum(up, down))
    return weights


def _log_mel(w: Waveform):
    x = pre_emphasis(w.samples)
    frames = _frame_array(x, w.sample_rate, FRAME_LEN_S, FRAME_SHIFT_S)
    power = np.abs(np.fft.rfft(frames, NFFT, axis=1)) ** 2
    mel = mel_filterbank(N_MELS, NFFT, w.sample_rate)
    energies = power @ mel.T
    return np.log(np.maximum(energies, LOG_FLOOR))


def delta(features, order=1):
    """Regression deltas with a +/-2 window and edge replication.

    order=2 is the delta of the order-1 output.
    """
    features = np.asarray(features)
    if order < 1:
        raise ShapeError(f"delta order must be >= 1, got {order}")
    if order > 1:
        return delta(delta(features, order - 1), 1)
    t = features.shape[0]
    p = np.pad(features, ((2, 2), (0, 0)), mode="edge")
    num = (p[3 : 3 + t] - p[1 : 1 + t]) + 2.0 * (p[4 : 4 + t] - p[0:t])
    return num / 10.0


def _with_deltas(static):
    return np.concatenate([static, delta(static, 1), delta(static, 2)], axis=1)


def fbank(w: Waveform) -> FeatureSequence:
    """80 log-mel energies plus first and second order deltas (T x 240)."""
    return FeatureSequence(_with_deltas(_log_mel(w)), FRAME_SHIFT_S, "fbank")


def mfcc(w: Waveform) -> FeatureSequence:
    """16 DCT-II (ortho) cepstra of the log-mel energies plus deltas (T x 48)."""
    ceps = _dct(_log_mel(w), type=2, axis=1, norm="ortho")[:, :N_CEPS]
    return FeatureSequence(_with_deltas(ceps), FRAME_SHIFT_S, "mfcc")


def cmvn(f: FeatureSequence) -> FeatureSequence:
    """Per-utterance, per-dimension zero mean / unit variance normalization."""
    if f.num_frames < 2:
        raise LengthError(f"cmvn needs at least 2 frames, got {f.num_frames}")
    mu = f.frames.mean(axis=0)
    var = f.frames.var(axis=0)
    out = (f.frames - mu) / np.sqrt(var + 1e-10)
    return FeatureSequence(out, f.frame_shift_s, f.kind)
