"""The ten event features, feature-matrix standardization and the two-file CSV scheme."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from ..domain import (
    ALL_FEATURES,
    FEATURE_NAMES,
    N_FEATURES,
    EventRecording,
    FeatureMatrix,
    FeatureVector,
    HygieneClass,
    ScalerParams,
)
from ..errors import (
    DegenerateSignal,
    EmptyData,
    FileMissing,
    InvalidLabel,
    LengthMismatch,
    MalformedRow,
    TooFewRows,
    TooShort,
)

logger = logging.getLogger(__name__)

ENTROPY_BINS = 32
SILENCE_RATIO = 1e-12
MIN_EXTRACT_LENGTH = 4


def _as_series(series: Sequence[float]) -> np.ndarray:
    return np.asarray(series, dtype=np.float64).reshape(-1)


def kurtosis(series: Sequence[float]) -> float:
    """Pearson (non-excess) kurtosis m4 / m2**2 with population moments."""
    x = _as_series(series)
    if x.size < 2:
        raise TooShort(f"Kurtosis needs at least 2 samples, got {x.size}")
    if np.ptp(x) == 0.0:
        raise DegenerateSignal("Kurtosis undefined for a zero-variance series")
    m2 = float(stats.moment(x, moment=2))
    if not m2 > np.finfo(np.float64).tiny:
        raise DegenerateSignal(f"Kurtosis undefined for a series with second moment {m2:.3g}")
    # standardize first so m4 cannot underflow when m2 is barely above tiny
    value = float(stats.kurtosis((x - x.mean()) / np.sqrt(m2), fisher=False, bias=True))
    if not np.isfinite(value):
        raise DegenerateSignal("Kurtosis is not finite")
    return value


def shannon_entropy(series: Sequence[float]) -> float:
    x = _as_series(series)
    if x.size < 1:
        raise TooShort("Entropy needs at least 1 sample")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        return 0.0
    counts, _ = np.histogram(x, bins=ENTROPY_BINS, range=(lo, hi))
    return float(stats.entropy(counts, base=2))


def dominant_period(series: Sequence[float], fs: float) -> float:
    """Seconds per cycle of the strongest non-DC DFT bin; 0.0 for silence."""
    x = _as_series(series)
    n = x.size
    if n < MIN_EXTRACT_LENGTH:
        raise TooShort(f"Period needs at least {MIN_EXTRACT_LENGTH} samples, got {n}")
    magnitude = np.abs(np.fft.rfft(x))[1:]
    if magnitude.size == 0 or magnitude.max() < SILENCE_RATIO * n:
        return 0.0
    k = int(np.argmax(magnitude)) + 1
    return n / (k * fs)


def extract_features(rec: EventRecording) -> FeatureVector:
    x = rec.samples
    n = x.size
    if n < MIN_EXTRACT_LENGTH:
        raise TooShort(f"Feature extraction needs at least {MIN_EXTRACT_LENGTH} samples, got {n}", location=rec.event_id)
    if np.ptp(x) == 0.0:
        raise DegenerateSignal("Recording has zero variance", location=rec.event_id)

    highest = float(x.max())
    lowest = float(x.min())
    values = (
        kurtosis(x),
        float(np.std(x)),
        shannon_entropy(x),
        highest,
        lowest,
        int(np.argmax(x)) / (n - 1),
        int(np.argmin(x)) / (n - 1),
        highest - lowest,
        float(np.mean(x)),
        dominant_period(x, rec.sample_rate_hz),
    )
    return FeatureVector(values)


def extract_matrix(recordings: Sequence[EventRecording]) -> FeatureMatrix:
    if not recordings:
        raise EmptyData("No recordings to extract features from")
    vectors: List[FeatureVector] = []
    labels: List[int] = []
    for rec in recordings:
        if rec.label is None:
            raise InvalidLabel("Recording has no class label", location=rec.event_id)
        vectors.append(extract_features(rec))
        labels.append(int(rec.label))
    matrix = FeatureMatrix.from_vectors(vectors, labels)
    logger.info("Extracted features: rows=%d classes=%s", matrix.n_rows, list(matrix.classes))
    return matrix


def fit_standardizer(m: FeatureMatrix) -> ScalerParams:
    return fit_scaler(m.values)


def fit_scaler(X: np.ndarray) -> ScalerParams:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise TooFewRows(f"Standardizer needs at least 2 rows, got {X.shape[0] if X.ndim else 0}")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    degenerate = std == 0.0
    if degenerate.any():
        logger.warning("Degenerate scaler columns: columns=%s", (np.flatnonzero(degenerate) + 1).tolist())
    return ScalerParams(mean, np.where(degenerate, 1.0, std), tuple(bool(d) for d in degenerate))


def apply_standardizer(params: ScalerParams, m: FeatureMatrix) -> FeatureMatrix:
    if params.n_features != m.n_features:
        raise LengthMismatch(f"Scaler has {params.n_features} columns, matrix has {m.n_features}")
    return FeatureMatrix(params.transform(m.values), m.labels, m.feature_indices)


def invert_standardizer(params: ScalerParams, m: FeatureMatrix) -> FeatureMatrix:
    if params.n_features != m.n_features:
        raise LengthMismatch(f"Scaler has {params.n_features} columns, matrix has {m.n_features}")
    return FeatureMatrix(params.inverse(m.values), m.labels, m.feature_indices)


def feature_summary(m: FeatureMatrix) -> Dict[int, Dict[str, Tuple[float, float]]]:
    """Per class code: feature name -> (mean, population std)."""
    out: Dict[int, Dict[str, Tuple[float, float]]] = {}
    for code in m.classes:
        rows = m.values[m.labels == code]
        out[code] = {
            FEATURE_NAMES[idx - 1]: (float(rows[:, col].mean()), float(rows[:, col].std()))
            for col, idx in enumerate(m.feature_indices)
        }
    return out


# --- two-file CSV scheme: labels.csv (one code per line), values.csv (10 reals per line)

def write_feature_files(m: FeatureMatrix, out_dir: Path) -> Tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels_path = out_dir / "labels.csv"
    values_path = out_dir / "values.csv"
    pd.DataFrame(m.labels.reshape(-1, 1)).to_csv(labels_path, header=False, index=False, lineterminator="\n")
    pd.DataFrame(m.values).to_csv(values_path, header=False, index=False, float_format="%.17g", lineterminator="\n")
    return labels_path, values_path


def read_feature_files(labels_path: Path, values_path: Path) -> FeatureMatrix:
    labels_path, values_path = Path(labels_path), Path(values_path)
    for path in (labels_path, values_path):
        if not path.is_file():
            raise FileMissing(f"Feature file not found: {path}", location=str(path))

    labels = _read_headerless(labels_path)
    values = _read_headerless(values_path)
    if labels.shape[1] != 1:
        raise MalformedRow(f"Labels file must hold one column, got {labels.shape[1]}", location=f"{labels_path}:1", row=1)
    if values.shape[1] != N_FEATURES:
        raise MalformedRow(
            f"Values file must hold {N_FEATURES} columns, got {values.shape[1]}", location=f"{values_path}:1", row=1
        )
    if labels.shape[0] != values.shape[0]:
        raise LengthMismatch(
            f"{labels_path} has {labels.shape[0]} rows but {values_path} has {values.shape[0]}",
            location=f"{labels_path}, {values_path}",
        )

    codes = labels[:, 0]
    for row, code in enumerate(codes, start=1):
        if not float(code).is_integer():
            raise MalformedRow(f"Label {code} is not an integer", location=f"{labels_path}:{row}", row=row)
        HygieneClass.from_code(int(code))
    if not np.all(np.isfinite(values)):
        row = int(np.flatnonzero(~np.isfinite(values).all(axis=1))[0]) + 1
        raise MalformedRow("Feature value is not finite", location=f"{values_path}:{row}", row=row)
    return FeatureMatrix(values, codes.astype(np.int64), ALL_FEATURES)


def _read_headerless(path: Path) -> np.ndarray:
    try:
        frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as exc:
        raise EmptyData(f"File is empty: {path}", location=str(path)) from exc
    except pd.errors.ParserError as exc:
        raise MalformedRow(str(exc), location=str(path)) from exc
    numeric = frame.apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    bad = numeric.isna().to_numpy()
    if bad.any():
        row = int(np.flatnonzero(bad.any(axis=1))[0]) + 1
        raise MalformedRow("Unparseable numeric value", location=f"{path}:{row}", row=row)
    return numeric.to_numpy(dtype=np.float64)
