"""Population coding: banded multi-tone inputs, activity vectors and readouts.

An activity vector is the per-comb power change (dB) caused by an input
relative to the no-input run. :class:`PopulationEncoder` and
:class:`PopulationReadout` wrap the functional API as scikit-learn
estimators so the pipeline composes with ``sklearn.pipeline`` and
``sklearn.model_selection``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.metrics import silhouette_samples
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .combgen import CombSpec
from .errors import (
    BaselineMissing,
    ConfigurationError,
    DegenerateTraining,
    DimensionMismatch,
    InvalidRange,
    PNPError,
)
from .integrator import SimGrid, default_grid
from .measure import LineReadout, measure_lines
from .model import DriveConfig, LaserParams
from .parallel import annotate, ordered_map

__all__ = [
    "BAND_PATTERNS",
    "Sign",
    "ReadoutKind",
    "PatternSet",
    "ActivityVector",
    "ReadoutModel",
    "BaselineCache",
    "ClassificationResult",
    "make_bands",
    "band_centers",
    "pad_pattern",
    "fifteen_band_patterns",
    "dual_tone_patterns",
    "trial_seed",
    "uniform_draw",
    "pattern_tones",
    "config_digest",
    "compute_baseline",
    "activity_vector",
    "binary_decode",
    "auto_threshold",
    "auto_sign",
    "auto_decode",
    "train_readout",
    "classify",
    "leave_one_out_accuracy",
    "PopulationEncoder",
    "PopulationReadout",
    "run_classification",
]

# The four input patterns of the 15-band task, verbatim (14 entries each).
BAND_PATTERNS = (
    ("pattern1", (0, 1, 0, 1, 0, 1, 1, 0, 1, 1, 1, 1, 0, 1)),
    ("pattern2", (0, 1, 1, 1, 0, 1, 1, 0, 1, 0, 1, 0, 1, 1)),
    ("pattern3", (1, 1, 1, 1, 0, 1, 1, 0, 0, 1, 0, 0, 1, 1)),
    ("pattern4", (1, 1, 0, 1, 0, 1, 1, 0, 1, 1, 0, 1, 0, 1)),
)


class Sign(str, Enum):
    EXCITATORY = "excitatory"
    INHIBITORY = "inhibitory"


class ReadoutKind(str, Enum):
    NEAREST_CENTROID = "nearest-centroid"
    LINEAR_LEAST_SQUARES = "linear-least-squares"


# --- bands and patterns -----------------------------------------------------

def make_bands(f_lo, f_hi, n) -> np.ndarray:
    """``n + 1`` equally spaced band edges from ``f_lo`` to ``f_hi``."""
    if int(n) != n or n < 1:
        raise InvalidRange(f"band count must be a positive integer, got {n!r}")
    if not f_hi > f_lo:
        raise InvalidRange(f"f_hi ({f_hi!r}) must exceed f_lo ({f_lo!r})")
    return np.linspace(f_lo, f_hi, int(n) + 1)


def band_centers(band_edges) -> np.ndarray:
    e = np.asarray(band_edges, dtype=float)
    return 0.5 * (e[:-1] + e[1:])


def pad_pattern(bits, n_bands, position="trailing") -> tuple:
    bits = tuple(int(b) for b in bits)
    missing = n_bands - len(bits)
    if missing < 0:
        raise ConfigurationError(f"pattern has {len(bits)} entries, more than {n_bands} bands")
    if position == "trailing":
        return bits + (0,) * missing
    if position == "leading":
        return (0,) * missing + bits
    raise ConfigurationError(f"unknown padding position {position!r}")


@dataclass(frozen=True)
class PatternSet:
    band_edges: tuple
    patterns: tuple
    jitter_ratio: float = 0.01
    tone_depth: float = 0.1

    def __post_init__(self):
        edges = tuple(float(e) for e in self.band_edges)
        if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
            raise ConfigurationError("band edges must be strictly ascending")
        n = len(edges) - 1
        patterns = tuple((str(label), tuple(int(b) for b in bits)) for label, bits in self.patterns)
        labels = [label for label, _ in patterns]
        if len(set(labels)) != len(labels):
            raise ConfigurationError("pattern labels must be distinct")
        for label, bits in patterns:
            if len(bits) != n or any(b not in (0, 1) for b in bits):
                raise ConfigurationError(f"pattern {label!r} must be {n} binary entries")
        if not 0 <= self.jitter_ratio < 1:
            raise ConfigurationError("jitter_ratio must lie in [0, 1)")
        if not 0 <= self.tone_depth <= 1:
            raise ConfigurationError("tone_depth must lie in [0, 1]")
        object.__setattr__(self, "band_edges", edges)
        object.__setattr__(self, "patterns", patterns)

    @property
    def n_bands(self) -> int:
        return len(self.band_edges) - 1

    @property
    def labels(self) -> list:
        return [label for label, _ in self.patterns]


def fifteen_band_patterns(f_lo=1.855e9, f_hi=4.105e9, n_bands=15, jitter_ratio=0.01,
                        tone_depth=0.1, pad="trailing") -> PatternSet:
    """The four 14-entry reference patterns on 15 bands, zero-padded at ``pad``."""
    edges = make_bands(f_lo, f_hi, n_bands)
    patterns = tuple((label, pad_pattern(bits, n_bands, pad)) for label, bits in BAND_PATTERNS)
    return PatternSet(tuple(edges), patterns, jitter_ratio, tone_depth)


def dual_tone_patterns(spacing, multiples=(2, 3, 4), jitter_ratio=0.01, tone_depth=0.1) -> PatternSet:
    """Three-class dual-tone task: bands one spacing wide centred on multiples of it.

    Each class switches on a different pair of bands.
    """
    centers = [k * spacing for k in multiples]
    edges = [centers[0] - spacing / 2] + [c + spacing / 2 for c in centers]
    n = len(centers)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    patterns = []
    for i, j in pairs:
        bits = [0] * n
        bits[i] = bits[j] = 1
        patterns.append((f"bands{i + 1}{j + 1}", tuple(bits)))
    return PatternSet(tuple(edges), tuple(patterns), jitter_ratio, tone_depth)


# --- reproducible jitter ------------------------------------------------------

def trial_seed(master_seed, pattern_index, trial) -> int:
    """64-bit seed for one trial, derived only from integers."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(pattern_index), int(trial)))
    return int(ss.generate_state(1, np.uint64)[0])


def uniform_draw(seed, band) -> float:
    """Uniform value in [-1, 1) for one band, exact from a 53-bit integer."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(band),))
    word = int(ss.generate_state(1, np.uint64)[0])
    return (word >> 11) * 2.0**-52 - 1.0


def pattern_tones(bits, band_edges, jitter_ratio, tone_depth, seed) -> list:
    """One tone per set bit at ``center*(1 + jitter_ratio*u)``, kept inside its band."""
    edges = np.asarray(band_edges, dtype=float)
    if len(bits) != edges.size - 1:
        raise ConfigurationError(f"{len(bits)} bits for {edges.size - 1} bands")
    centers = band_centers(edges)
    tones = []
    for k, bit in enumerate(bits):
        if not bit:
            continue
        f = centers[k] * (1.0 + jitter_ratio * uniform_draw(seed, k)) if jitter_ratio else centers[k]
        lo, hi = edges[k], edges[k + 1]
        f = min(max(f, lo), np.nextafter(hi, lo))
        tones.append((float(f), float(tone_depth), 0.0))
    return tones


# --- activity vectors ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ActivityVector:
    deltas: np.ndarray
    config_digest: str = ""

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=float)
        if d.ndim != 1 or not np.all(np.isfinite(d)):
            raise ConfigurationError("activity deltas must be a finite 1-D sequence")
        d.setflags(write=False)
        object.__setattr__(self, "deltas", d)

    def __len__(self):
        return self.deltas.size


def config_digest(params, comb, bias_ratio, grid, tracked_offsets, readout=None) -> str:
    """Stable identifier of everything a no-input baseline depends on."""
    readout = readout or LineReadout()
    payload = {
        "params": [params.tau_s, params.G_N, params.N_th, params.tau_p, params.alpha,
                   params.R_th, params.kappa],
        "comb": [list(line) for line in comb.lines],
        "bias_ratio": float(bias_ratio),
        "grid": [grid.dt, grid.t_transient, grid.t_record, grid.record_stride],
        "offsets": [float(o) for o in tracked_offsets],
        "readout": [readout.window.value, readout.search_halfwidth, readout.integrated],
    }
    text = json.dumps(payload, sort_keys=True, default=repr)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


class BaselineCache(dict):
    """No-input line powers keyed by :func:`config_digest`."""


def compute_baseline(params, comb, bias_ratio, grid, tracked_offsets, readout=None,
                     cache: BaselineCache | None = None):
    digest = config_digest(params, comb, bias_ratio, grid, tracked_offsets, readout)
    powers = measure_lines(params, comb, DriveConfig(bias_ratio), grid, tracked_offsets, readout)
    if cache is not None:
        cache[digest] = powers
    return digest, powers


def activity_vector(params, comb, bias_ratio, tones, grid, tracked_offsets, readout=None,
                    cache: BaselineCache | None = None) -> ActivityVector:
    """Line powers for ``tones`` minus the cached no-input baseline.

    Raises
    ------
    BaselineMissing
        If ``cache`` holds no baseline for this configuration.
    """
    digest = config_digest(params, comb, bias_ratio, grid, tracked_offsets, readout)
    if cache is None or digest not in cache:
        raise BaselineMissing(f"no baseline cached for configuration {digest}")
    powers = measure_lines(params, comb, DriveConfig(bias_ratio, tuple(tones)), grid,
                           tracked_offsets, readout)
    return ActivityVector(powers - cache[digest], digest)


# --- decoding -----------------------------------------------------------------

def _deltas(activity):
    return activity.deltas if isinstance(activity, ActivityVector) else np.asarray(activity, float)


def binary_decode(activity, threshold, sign=Sign.EXCITATORY) -> np.ndarray:
    d = _deltas(activity)
    if Sign(sign) is Sign.EXCITATORY:
        return (d > threshold).astype(int)
    return (d < -threshold).astype(int)


def auto_threshold(activity) -> float:
    """Midpoint between the two group means of the best 1-D 2-means split."""
    d = np.sort(_deltas(activity))
    if d.size < 2 or d[0] == d[-1]:
        return float(abs(d[0])) + 1.0 if d.size else 1.0
    best_cost, best_mid = np.inf, 0.0
    for i in range(1, d.size):
        lo, hi = d[:i], d[i:]
        cost = ((lo - lo.mean()) ** 2).sum() + ((hi - hi.mean()) ** 2).sum()
        if cost < best_cost:
            best_cost, best_mid = cost, 0.5 * (lo.mean() + hi.mean())
    return float(best_mid)


def auto_sign(calibration) -> Sign:
    """Excitatory if rises outweigh dips on average in the calibration deltas."""
    d = _deltas(calibration)
    rise = d[d > 0].mean() if np.any(d > 0) else 0.0
    dip = -d[d < 0].mean() if np.any(d < 0) else 0.0
    return Sign.EXCITATORY if rise >= dip else Sign.INHIBITORY


def auto_decode(activity, sign=None, calibration=None) -> np.ndarray:
    """Decode with the 2-means threshold; sign from ``calibration`` if not given."""
    d = _deltas(activity)
    if sign is None:
        sign = auto_sign(d if calibration is None else calibration)
    level = auto_threshold(d)
    if Sign(sign) is Sign.EXCITATORY:
        return binary_decode(d, level, Sign.EXCITATORY)
    return binary_decode(d, -level, Sign.INHIBITORY)


# --- readout ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ReadoutModel:
    kind: ReadoutKind
    labels: tuple
    centroids: np.ndarray | None = None
    weights: np.ndarray | None = None
    intercepts: np.ndarray | None = None

    @property
    def n_features(self) -> int:
        if self.centroids is not None:
            return self.centroids.shape[1]
        return self.weights.shape[0]


# Condition number above which the ridge no longer rescues the normal equations.
_MAX_CONDITION = 1e12


def _as_matrix(vectors):
    rows = [_deltas(v) for v in vectors]
    if not rows:
        raise DegenerateTraining("no training examples")
    sizes = {r.size for r in rows}
    if len(sizes) != 1:
        raise DimensionMismatch(f"inconsistent activity dimensions {sorted(sizes)}")
    return np.vstack(rows)


def train_readout(labeled, kind=ReadoutKind.NEAREST_CENTROID, ridge=1e-6) -> ReadoutModel:
    """Fit a readout to ``[(activity, label), ...]``.

    Labels keep their order of first appearance; that order breaks ties in
    :func:`classify`.
    """
    kind = ReadoutKind(kind)
    labeled = list(labeled)
    X = _as_matrix([v for v, _ in labeled])
    y = [label for _, label in labeled]
    labels = tuple(dict.fromkeys(y))
    index = np.array([labels.index(label) for label in y])
    if kind is ReadoutKind.NEAREST_CENTROID:
        centroids = np.vstack([X[index == i].mean(axis=0) for i in range(len(labels))])
        return ReadoutModel(kind, labels, centroids=centroids)
    if ridge < 0:
        raise ConfigurationError("ridge must be >= 0")
    A = np.hstack([X, np.ones((X.shape[0], 1))])
    Y = np.eye(len(labels))[index]
    penalty = np.eye(A.shape[1]) * ridge
    penalty[-1, -1] = 0.0
    M = A.T @ A + penalty
    if not np.isfinite(np.linalg.cond(M)) or np.linalg.cond(M) > _MAX_CONDITION:
        raise DegenerateTraining("design matrix is rank-deficient beyond the ridge guard")
    W = np.linalg.solve(M, A.T @ Y)
    return ReadoutModel(kind, labels, weights=W[:-1], intercepts=W[-1])


def _scores(model, X):
    if model.kind is ReadoutKind.NEAREST_CENTROID:
        d2 = ((X[:, None, :] - model.centroids[None, :, :]) ** 2).sum(axis=2)
        return -d2
    return X @ model.weights + model.intercepts


def classify(model: ReadoutModel, activity):
    d = _deltas(activity)
    if d.size != model.n_features:
        raise DimensionMismatch(f"activity has {d.size} entries, model expects {model.n_features}")
    scores = _scores(model, d[None, :])[0]
    # argmax returns the first maximum, i.e. the earliest label on ties.
    return model.labels[int(np.argmax(scores))]


def leave_one_out_accuracy(vectors, labels, kind=ReadoutKind.NEAREST_CENTROID, ridge=1e-6):
    """Fraction of examples classified correctly by a readout trained on the rest."""
    X = _as_matrix(vectors)
    labels = list(labels)
    correct = 0
    for i in range(len(labels)):
        rest = [(X[j], labels[j]) for j in range(len(labels)) if j != i]
        model = train_readout(rest, kind, ridge)
        correct += classify(model, X[i]) == labels[i]
    return correct / len(labels)


# --- scikit-learn estimators ----------------------------------------------------

class PopulationEncoder(TransformerMixin, BaseEstimator):
    """Map RF tone lists to comb activity vectors.

    ``fit`` runs the no-input baseline; ``transform`` takes a sequence of
    tone lists ``[(freq_hz, depth, phase), ...]`` and returns an
    ``(n_inputs, n_combs)`` array of dB changes.
    """

    def __init__(self, params=None, comb=None, bias_ratio=4.0, grid=None, resolution=1e6,
                 tracked_offsets=None, readout=None, max_tone_frequency=None, threads=None):
        self.params = params
        self.comb = comb
        self.bias_ratio = bias_ratio
        self.grid = grid
        self.resolution = resolution
        self.tracked_offsets = tracked_offsets
        self.readout = readout
        self.max_tone_frequency = max_tone_frequency
        self.threads = threads

    def fit(self, X=None, y=None):
        if self.comb is None or len(self.comb) == 0:
            raise ConfigurationError("PopulationEncoder needs a non-empty comb")
        self.params_ = self.params or LaserParams()
        self.offsets_ = (self.comb.offsets if self.tracked_offsets is None
                         else np.asarray(self.tracked_offsets, dtype=float))
        self.readout_ = self.readout or LineReadout()
        grid = self.grid
        if grid is None:
            f_max = self.max_tone_frequency or 0.0
            if X is not None:
                f_max = max([f_max] + [t[0] for tones in X for t in tones])
            probe = DriveConfig(self.bias_ratio, ((f_max, 0.0, 0.0),) if f_max else ())
            grid = default_grid(self.comb, probe, self.resolution, self.params_)
        self.grid_ = grid
        self.cache_ = BaselineCache()
        self.digest_, self.baseline_ = compute_baseline(
            self.params_, self.comb, self.bias_ratio, grid, self.offsets_, self.readout_, self.cache_
        )
        self.n_features_out_ = self.offsets_.size
        return self

    def activity(self, tones) -> ActivityVector:
        check_is_fitted(self, "baseline_")
        return activity_vector(self.params_, self.comb, self.bias_ratio, tones, self.grid_,
                               self.offsets_, self.readout_, self.cache_)

    def transform(self, X):
        check_is_fitted(self, "baseline_")

        def one(item):
            index, tones = item
            try:
                return self.activity(tones).deltas
            except PNPError as exc:
                raise annotate(exc, f"input {index}") from exc

        rows = ordered_map(one, list(enumerate(X)), self.threads)
        return np.vstack(rows) if rows else np.empty((0, self.n_features_out_))


class PopulationReadout(ClassifierMixin, BaseEstimator):
    """Nearest-centroid or ridge least-squares readout of activity vectors."""

    def __init__(self, kind="nearest-centroid", ridge=1e-6):
        self.kind = kind
        self.ridge = ridge

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        self.model_ = train_readout(zip(X, y.tolist()), self.kind, self.ridge)
        self.classes_ = np.array(self.model_.labels)
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatch(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return _scores(self.model_, X)

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]


# --- experiment -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ClassificationResult:
    labels: list
    seeds: list
    patterns: dict
    activities: np.ndarray
    tones: list
    sign: Sign
    decoded: np.ndarray
    hamming: np.ndarray
    loo_accuracy: float
    loo_accuracy_lls: float | None
    silhouettes: np.ndarray
    baseline_powers: np.ndarray
    tracked_offsets: np.ndarray
    config_digest: str
    extra: dict = field(default_factory=dict)


def run_classification(params: LaserParams, comb: CombSpec, bias_ratio, pattern_set: PatternSet,
                       n_trials=10, seed=0, grid: SimGrid | None = None, resolution=1e6,
                       readout: LineReadout | None = None, tracked_offsets=None,
                       threads=None, sign=None) -> ClassificationResult:
    """Jittered trials of every pattern, then readout and decoding statistics.

    Decoding uses the 2-means threshold per trial; the response sign, unless
    given, is chosen on the mean activity of the first pattern.
    """
    trials = []
    for p_index, (label, bits) in enumerate(pattern_set.patterns):
        for t in range(int(n_trials)):
            s = trial_seed(seed, p_index, t)
            tones = pattern_tones(bits, pattern_set.band_edges, pattern_set.jitter_ratio,
                                  pattern_set.tone_depth, s)
            trials.append((label, s, tones))
    encoder = PopulationEncoder(params, comb, bias_ratio, grid, resolution, tracked_offsets,
                                readout, max_tone_frequency=pattern_set.band_edges[-1],
                                threads=threads)
    encoder.fit()
    X = encoder.transform([tones for _, _, tones in trials])
    labels = [label for label, _, _ in trials]
    patterns = dict(pattern_set.patterns)

    first = [i for i, label in enumerate(labels) if label == pattern_set.labels[0]]
    if sign is None:
        sign = auto_sign(X[first].mean(axis=0))
    sign = Sign(sign)
    decoded = np.array([auto_decode(x, sign) for x in X]).reshape(len(labels), -1)
    n = min(decoded.shape[1], pattern_set.n_bands)
    hamming = np.array([
        int(np.sum(decoded[i, :n] != np.asarray(patterns[label][:n])))
        for i, label in enumerate(labels)
    ])

    distinct = len(set(labels))
    if distinct >= 2 and len(labels) > distinct:
        loo = leave_one_out_accuracy(X, labels, ReadoutKind.NEAREST_CENTROID)
        try:
            loo_lls = leave_one_out_accuracy(X, labels, ReadoutKind.LINEAR_LEAST_SQUARES)
        except DegenerateTraining:
            loo_lls = None
        sil = silhouette_samples(X, labels) if len(labels) > distinct else np.zeros(len(labels))
    else:
        loo, loo_lls, sil = float("nan"), None, np.full(len(labels), np.nan)

    return ClassificationResult(
        labels=labels,
        seeds=[s for _, s, _ in trials],
        patterns=patterns,
        activities=X,
        tones=[tones for _, _, tones in trials],
        sign=sign,
        decoded=decoded,
        hamming=hamming,
        loo_accuracy=float(loo),
        loo_accuracy_lls=loo_lls,
        silhouettes=np.asarray(sil, dtype=float),
        baseline_powers=encoder.baseline_,
        tracked_offsets=encoder.offsets_,
        config_digest=encoder.digest_,
    )
