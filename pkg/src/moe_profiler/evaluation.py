"""Evaluation: per-gender reports, constant baselines, phone-masking analysis."""

import logging

import numpy as np

from .errors import DataError, FormatError
from .metrics import EvalReport, ImportanceTable, build_report, pct_change
from .phones import TABLE_ORDER, mask_phone_class, parse_phn
from .pipeline import WaveCache, predict_records

log = logging.getLogger("moe_profiler.evaluation")


def _labels(records):
    ages = np.array([r.age_years for r in records], dtype=np.float64)
    heights = np.array([r.height_cm for r in records], dtype=np.float64)
    genders = np.array([r.gender for r in records], dtype=np.int64)
    return ages, heights, genders


def evaluate(net, norm, records, wave_cache=None, workers=1, waveform_override=None) -> EvalReport:
    """Forward all records through the network and build a per-gender report.

    Regression metrics are de-normalized (years / cm) and grouped by the true
    gender label; gating always uses the predicted gender. Gender accuracy
    thresholds the prediction at 0.5.
    """
    if not records:
        raise DataError("no records to evaluate")
    ages_t, heights_t, genders_t = _labels(records)
    ages_p, heights_p, genders_p = predict_records(
        net, norm, records, wave_cache=wave_cache, workers=workers, waveform_override=waveform_override
    )
    return build_report(ages_p, ages_t, heights_p, heights_t, genders_p, genders_t)


def constant_mean_report(norm, records) -> EvalReport:
    """Baseline report for the predictor that always outputs the training means."""
    ages_t, heights_t, genders_t = _labels(records)
    ages_p = np.full(len(records), norm.age_mean)
    heights_p = np.full(len(records), norm.height_mean)
    genders_p = np.full(len(records), 0.5)
    return build_report(ages_p, ages_t, heights_p, heights_t, genders_p, genders_t)


def phoneme_importance(net, norm, records, workers=1) -> ImportanceTable:
    """Percentage RMSE change per masked phone class, against unmasked audio.

    Records without a readable transcription are excluded with a warning.
    """
    cache = WaveCache()
    usable = []
    transcriptions = {}
    for r in records:
        try:
            transcriptions[str(r.utterance_path)] = parse_phn(r.phn_path)
            usable.append(r)
        except (OSError, FormatError) as exc:
            log.warning("%s: unusable transcription (%s); excluded", r.utterance_path, exc)
    if not usable:
        raise DataError("no records with transcriptions to analyze")

    base = evaluate(net, norm, usable, wave_cache=cache, workers=workers)
    rows = {}
    for cls in TABLE_ORDER:
        def masked_wave(record, _cls=cls):
            wave = cache.get(record.utterance_path)
            return mask_phone_class(wave, transcriptions[str(record.utterance_path)], _cls)

        masked = evaluate(net, norm, usable, wave_cache=cache, workers=workers, waveform_override=masked_wave)
        rows[cls] = (
            pct_change(masked.height_rmse_male, base.height_rmse_male),
            pct_change(masked.height_rmse_female, base.height_rmse_female),
            pct_change(masked.age_rmse_male, base.age_rmse_male),
            pct_change(masked.age_rmse_female, base.age_rmse_female),
        )
    return ImportanceTable(base=base, rows=rows)
