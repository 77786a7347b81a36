"""Marked point patterns (earthquake catalogs): validation, CSV I/O, splitting."""

import csv
from dataclasses import dataclass, field

import numpy as np

LABELS = ("main", "aftershock")


class CatalogError(ValueError):
    """Raised for malformed or invalid catalog input."""


@dataclass(frozen=True)
class MarkedPointPattern:
    """Event times in ``(0, T)`` with marks in ``(kappa0, kappa_max)``."""

    times: np.ndarray
    marks: np.ndarray
    T: float
    kappa0: float
    kappa_max: float = np.inf

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).ravel()
        marks = np.asarray(self.marks, dtype=float).ravel()
        times.setflags(write=False)
        marks.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "marks", marks)
        object.__setattr__(self, "T", float(self.T))
        if times.size != marks.size:
            raise CatalogError("times and marks must have equal length")
        if self.T <= 0:
            raise CatalogError("window end T must be positive")
        if self.kappa_max <= self.kappa0:
            raise CatalogError("kappa_max must exceed kappa0")
        if times.size:
            if times[0] <= 0 or times[-1] >= self.T:
                raise CatalogError("event times must lie in (0, T)")
            if np.any(np.diff(times) <= 0):
                raise CatalogError("event times must be strictly increasing")
            if np.any((marks <= self.kappa0) | (marks >= self.kappa_max)):
                raise CatalogError("marks must lie in (kappa0, kappa_max)")

    @property
    def n(self):
        return self.times.size

    def __len__(self):
        return self.times.size


@dataclass(frozen=True)
class LabeledPattern:
    pattern: MarkedPointPattern
    labels: tuple = field(default=None)

    def __post_init__(self):
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != self.pattern.n:
                raise CatalogError("labels must align with events")
            bad = [x for x in labels if x not in LABELS]
            if bad:
                raise CatalogError(f"unknown label {bad[0]!r}")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return self.pattern.n

    def is_main(self):
        if self.labels is None:
            raise CatalogError("pattern carries no labels")
        return np.array([x == "main" for x in self.labels])


def load_catalog(path, kappa0, kappa_max=np.inf, T=None, margin=1.0, jitter=None,
                 clamp=False, rng=None):
    """Read a ``time,magnitude[,label]`` CSV into a validated :class:`LabeledPattern`.

    ``T`` defaults to the last event time plus ``margin``.  Ties are errors
    unless ``jitter`` is given, in which case tied times are shifted by
    uniform(0, jitter) and re-sorted.  With ``clamp`` marks sitting exactly
    on a bound are nudged inward by 1e-9.
    """
    times, marks, labels = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise CatalogError("empty catalog file") from None
        if header[:2] != ["time", "magnitude"] or len(header) > 3 or (
            len(header) == 3 and header[2] != "label"
        ):
            raise CatalogError("header must be 'time,magnitude' or 'time,magnitude,label'")
        has_label = len(header) == 3
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise CatalogError(f"malformed row {row_no}: expected {len(header)} fields")
            try:
                t, k = float(row[0]), float(row[1])
            except ValueError:
                raise CatalogError(f"malformed row {row_no}: non-numeric value") from None
            if not (np.isfinite(t) and np.isfinite(k)):
                raise CatalogError(f"malformed row {row_no}: non-finite value")
            if clamp:
                if k == kappa0:
                    k = kappa0 + 1e-9
                elif k == kappa_max:
                    k = kappa_max - 1e-9
            if not kappa0 < k < kappa_max:
                raise CatalogError(f"mark {k} outside ({kappa0}, {kappa_max}) at row {row_no}")
            if has_label:
                lab = row[2].strip()
                if lab not in LABELS:
                    raise CatalogError(f"unknown label {lab!r} at row {row_no}")
                labels.append(lab)
            if jitter is None and times:
                if t == times[-1]:
                    raise CatalogError(f"duplicate times at row {row_no}")
                if t < times[-1]:
                    raise CatalogError(f"non-monotone times at row {row_no}")
            times.append(t)
            marks.append(k)

    times = np.asarray(times, dtype=float)
    marks = np.asarray(marks, dtype=float)
    if jitter is not None:
        rng = np.random.default_rng() if rng is None else rng
        tied = np.zeros(times.size, dtype=bool)
        if times.size > 1:
            srt = np.sort(times)
            dup = np.isin(times, srt[1:][np.diff(srt) == 0])
            tied |= dup
        times = times + np.where(tied, rng.uniform(0.0, jitter, size=times.size), 0.0)
        order = np.argsort(times, kind="stable")
        times, marks = times[order], marks[order]
        if labels:
            labels = [labels[i] for i in order]
        if np.any(np.diff(times) <= 0):
            raise CatalogError("ties remain after jittering")
    if T is None:
        T = (times[-1] if times.size else 0.0) + margin
    pattern = MarkedPointPattern(times, marks, T, kappa0, kappa_max)
    return LabeledPattern(pattern, labels if has_label else None)


def save_catalog(labeled, path):
    """Write a pattern in the catalog CSV format (labels column when present)."""
    if isinstance(labeled, MarkedPointPattern):
        labeled = LabeledPattern(labeled)
    p = labeled.pattern
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if labeled.labels is None:
            w.writerow(["time", "magnitude"])
            for t, k in zip(p.times, p.marks):
                w.writerow([repr(float(t)), repr(float(k))])
        else:
            w.writerow(["time", "magnitude", "label"])
            for t, k, lab in zip(p.times, p.marks, labeled.labels):
                w.writerow([repr(float(t)), repr(float(k)), lab])


def split_at(labeled, t_split):
    """Partition into the fitting part on ``(0, t_split)`` and the rest on ``[t_split, T)``.

    The second part keeps absolute times and the original window end.
    """
    if isinstance(labeled, MarkedPointPattern):
        labeled = LabeledPattern(labeled)
    p = labeled.pattern
    if not 0 < t_split < p.T:
        raise CatalogError("t_split must lie in (0, T)")
    first = p.times < t_split
    lab = None if labeled.labels is None else np.asarray(labeled.labels, dtype=object)

    def part(mask, T):
        sub = _unchecked_pattern(p.times[mask], p.marks[mask], T, p.kappa0, p.kappa_max)
        return LabeledPattern(sub, None if lab is None else tuple(lab[mask]))

    return part(first, t_split), part(~first, p.T)


def _unchecked_pattern(times, marks, T, kappa0, kappa_max):
    # The forecast part starts at t_split rather than 0, so skip the (0, T) check.
    obj = object.__new__(MarkedPointPattern)
    times = np.asarray(times, float).copy()
    marks = np.asarray(marks, float).copy()
    times.setflags(write=False)
    marks.setflags(write=False)
    for k, v in dict(times=times, marks=marks, T=float(T), kappa0=kappa0, kappa_max=kappa_max).items():
        object.__setattr__(obj, k, v)
    return obj


def concat(first, second):
    """Inverse of :func:`split_at`: merge two parts, restoring the later window end."""
    a, b = first.pattern, second.pattern
    times = np.concatenate([a.times, b.times])
    marks = np.concatenate([a.marks, b.marks])
    labels = None
    if first.labels is not None and second.labels is not None:
        labels = tuple(first.labels) + tuple(second.labels)
    return LabeledPattern(MarkedPointPattern(times, marks, b.T, a.kappa0, a.kappa_max), labels)
