"""Spectral feature extraction: band powers, differential entropy, LDS smoothing.

Signals are windowed into nonoverlapping 1-second Hann windows. Band power is
the summed periodogram power over the band's frequency bins, normalized so the
summed power over all bins estimates the window's sample variance. The DE
value of a band is 0.5 * ln(2*pi*e * var) where var is the band's mean
spectral density calibrated to the full bandwidth, so a unit-variance white
window scores 0.5 * ln(2*pi*e) in every band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LN_2PI_E = math.log(2.0 * math.pi * math.e)


@dataclass(frozen=True)
class BandScheme:
    """Ordered, non-overlapping frequency bands in Hz."""

    bands: tuple  # of (name, low_hz, high_hz)

    def __post_init__(self):
        prev_high = -math.inf
        for name, low, high in self.bands:
            if not low < high:
                raise ValueError(f"band {name!r}: low {low} must be < high {high}")
            if low <= prev_high:
                raise ValueError(f"band {name!r} overlaps or is out of order")
            prev_high = high

    @property
    def n_bands(self):
        return len(self.bands)

    @property
    def names(self):
        return tuple(b[0] for b in self.bands)

    @property
    def highest_edge(self):
        return self.bands[-1][2]


SEED5 = BandScheme((("delta", 1.0, 3.0), ("theta", 4.0, 7.0), ("alpha", 8.0, 13.0),
                    ("beta", 14.0, 30.0), ("gamma", 31.0, 50.0)))
DEAP4 = BandScheme((("theta", 4.0, 7.0), ("alpha", 8.0, 13.0),
                    ("beta", 14.0, 30.0), ("gamma", 31.0, 50.0)))


@dataclass
class FeatureMatrix:
    """samples x dims matrix with a channel-major (channel, band) layout."""

    data: np.ndarray
    n_channels: int
    n_bands: int
    feature_kind: str  # "psd" or "de"

    def __post_init__(self):
        self.data = np.atleast_2d(np.asarray(self.data))
        if self.data.shape[1] != self.n_channels * self.n_bands:
            raise ValueError(f"dims {self.data.shape[1]} != "
                             f"{self.n_channels} channels x {self.n_bands} bands")
        if self.data.size and not np.isfinite(self.data).all():
            raise ValueError("feature matrix contains non-finite entries")

    @property
    def n_samples(self):
        return self.data.shape[0]

    @property
    def dim(self):
        return self.data.shape[1]

    def dim_index(self, channel, band):
        if not (0 <= channel < self.n_channels and 0 <= band < self.n_bands):
            raise IndexError(f"(channel={channel}, band={band}) out of range")
        return channel * self.n_bands + band

    def channel_band(self, dim):
        if not 0 <= dim < self.dim:
            raise IndexError(f"dim {dim} out of range")
        return divmod(dim, self.n_bands)

    def band_block(self, band):
        """Column indices of one band across all channels."""
        return np.arange(self.n_channels) * self.n_bands + band


def _hann(n):
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def _window_spectrum(window, fs):
    """One-sided periodogram per channel, normalized so bins sum to the
    variance estimate of the windowed samples."""
    n = window.shape[-1]
    w = _hann(n)
    spec = np.abs(np.fft.rfft(window * w, axis=-1)) ** 2
    # one-sided doubling except DC and (for even n) Nyquist
    spec[..., 1:] *= 2.0
    if n % 2 == 0:
        spec[..., -1] /= 2.0
    spec /= n * np.sum(w * w)
    freqs = np.fft.rfftfreq(n, d=1.0 / fs)
    return spec, freqs


def _band_bins(freqs, scheme):
    bins = []
    for _, low, high in scheme.bands:
        sel = np.flatnonzero((freqs >= low) & (freqs <= high))
        if sel.size == 0:
            raise ValueError(f"no frequency bins fall inside band [{low}, {high}] Hz")
        bins.append(sel)
    return bins


def _validate_signal(signal, fs, scheme):
    signal = np.atleast_2d(np.asarray(signal, dtype=np.float64))
    if not np.isfinite(signal).all():
        raise ValueError("signal contains non-finite samples")
    n_win = int(fs)
    if signal.shape[1] < n_win:
        raise ValueError(f"signal length {signal.shape[1]} is shorter than one "
                         f"{n_win}-sample window")
    if fs <= 2.0 * scheme.highest_edge:
        raise ValueError(f"fs={fs} violates Nyquist for the top band edge "
                         f"{scheme.highest_edge} Hz")
    return signal, n_win


def band_powers(signal, fs, scheme):
    """Per-window band powers, shape (n_windows, n_channels, n_bands)."""
    signal, n_win = _validate_signal(signal, fs, scheme)
    n_windows = signal.shape[1] // n_win
    out = np.empty((n_windows, signal.shape[0], scheme.n_bands))
    for i in range(n_windows):
        seg = signal[:, i * n_win:(i + 1) * n_win]
        spec, freqs = _window_spectrum(seg, fs)
        if i == 0:
            bins = _band_bins(freqs, scheme)
        for b, sel in enumerate(bins):
            out[i, :, b] = spec[:, sel].sum(axis=-1)
    return out


def psd_extract(signal, fs, scheme):
    """Band power features from nonoverlapping 1-second Hann windows."""
    powers = band_powers(signal, fs, scheme)
    n_windows, n_channels, n_bands = powers.shape
    return FeatureMatrix(powers.reshape(n_windows, n_channels * n_bands),
                         n_channels, n_bands, "psd")


def de_extract(window):
    """Differential entropy 0.5*ln(2*pi*e*var) of band-filtered samples.

    window is (n_samples,) or (n_channels, n_samples); variance is the
    unbiased sample variance per channel. Zero variance is rejected.
    """
    window = np.atleast_2d(np.asarray(window, dtype=np.float64))
    if window.shape[1] < 2:
        raise ValueError("differential entropy needs at least 2 samples")
    var = window.var(axis=1, ddof=1)
    if np.any(var <= 0):
        raise ValueError("zero variance window: differential entropy undefined")
    de = 0.5 * (LN_2PI_E + np.log(var))
    return de[0] if de.shape == (1,) else de


def de_band_extract(signal, fs, scheme):
    """Per-window, per-band DE via the spectral route.

    The band variance is the band's mean spectral density scaled to the full
    one-sided bandwidth, so a flat-spectrum unit-variance window scores the
    closed-form 0.5*ln(2*pi*e) in every band.
    """
    signal, n_win = _validate_signal(signal, fs, scheme)
    _, freqs = _window_spectrum(signal[:, :n_win], fs)
    bins = _band_bins(freqs, scheme)
    powers = band_powers(signal, fs, scheme)
    n_total = freqs.size
    var = np.empty_like(powers)
    for b, sel in enumerate(bins):
        var[:, :, b] = powers[:, :, b] * (n_total / sel.size)
    if np.any(var <= 0):
        raise ValueError("zero band variance: differential entropy undefined")
    de = 0.5 * (LN_2PI_E + np.log(var))
    n_windows, n_channels, n_bands = de.shape
    return FeatureMatrix(de.reshape(n_windows, n_channels * n_bands),
                         n_channels, n_bands, "de")


def lds_smooth(series, ratio=0.1):
    """Linear-dynamic-system smoothing of a feature sequence.

    Scalar Kalman filter plus RTS smoother per dimension with identity
    transition and observation, process/observation noise ratio `ratio`,
    and a diffuse start at the first observation. Preserves length; a
    constant sequence is a fixed point.
    """
    series = np.asarray(series, dtype=np.float64)
    if not np.isfinite(series).all():
        raise ValueError("series contains non-finite values")
    if ratio <= 0:
        raise ValueError("noise ratio must be positive")
    squeeze = series.ndim == 1
    x = series.reshape(series.shape[0], -1)
    t_len = x.shape[0]
    if t_len == 1:
        return series.copy()

    q, r = float(ratio), 1.0
    means = np.empty_like(x)
    covs = np.empty(t_len)
    pred_covs = np.empty(t_len)
    means[0] = x[0]
    covs[0] = r
    for t in range(1, t_len):
        p_pred = covs[t - 1] + q
        k = p_pred / (p_pred + r)
        means[t] = means[t - 1] + k * (x[t] - means[t - 1])
        covs[t] = (1.0 - k) * p_pred
        pred_covs[t] = p_pred
    smoothed = means.copy()
    for t in range(t_len - 2, -1, -1):
        c = covs[t] / pred_covs[t + 1]
        smoothed[t] = means[t] + c * (smoothed[t + 1] - means[t])
    return smoothed.reshape(series.shape) if not squeeze else smoothed[:, 0]


def extract(signal, fs, scheme, kind, lds_ratio=0.1):
    """Full pipeline: windowed features of the requested kind, LDS-smoothed.

    Pass lds_ratio=None to skip smoothing.
    """
    kind = kind.lower()
    if kind == "psd":
        fm = psd_extract(signal, fs, scheme)
    elif kind == "de":
        fm = de_band_extract(signal, fs, scheme)
    else:
        raise ValueError(f"unknown feature kind {kind!r}")
    if lds_ratio is not None and fm.n_samples > 1:
        fm.data = lds_smooth(fm.data, lds_ratio)
    return fm
