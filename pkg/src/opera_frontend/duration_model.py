"""Per-phoneme duration mixtures and note-constrained duration allocation.

A note of known length must be filled exactly by its phonemes.  Each phoneme
carries a Gaussian-mixture model of its duration (in 10 ms frames); the
allocator picks the per-phoneme durations that maximize the summed
log-likelihood subject to the exact note-length constraint.  With the
max-weight component of each mixture selected, the optimum has a closed form:

    d_i = mu_i + var_i * alpha,   alpha = (T - sum(mu)) / sum(var)

i.e. the residual between the note length and the summed means is spread
across phonemes in proportion to their duration variance.  Two rule-based
baselines (primary-vowel residual absorption, and the same rule driven by a
per-phoneme mean-duration table) are provided for comparison, plus a
grid-search oracle used to validate the closed form in tests.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DegenerateComponent,
    FormatError,
    InfeasibleNote,
    UnknownPhoneme,
)

FRAME_MS = 10
MIN_DURATION_FRAMES = 1.0
STD_FLOOR_FRAMES = 0.5  # fitted stds below this would make the allocator brittle

PHONEME_CLASSES = ("vowel", "consonant", "silence")

# Vowel-like symbols of the shipped inventory: vowels, offglides, syllabic
# nasals.  Everything else non-silent counts as a consonant.
_VOWEL_SYMBOLS = frozenset(
    "i u y a o 7 e E @ O i\\ i` @` I U 2 9 M V m= n= N=".split()
)
_SILENCE_SYMBOLS = frozenset({"sil", "sp", "br"})


def classify_phoneme(symbol: str | None) -> str:
    """Map a phoneme symbol to its context class (note edges count as silence)."""
    if symbol is None or symbol in _SILENCE_SYMBOLS:
        return "silence"
    if symbol in _VOWEL_SYMBOLS:
        return "vowel"
    return "consonant"


# --------------------------------------------------------------------------
# Domain types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MixtureComponent:
    weight: float
    mean_frames: float
    std_frames: float

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0 + 1e-9:
            raise ValueError(f"component weight out of [0,1]: {self.weight}")
        if self.std_frames < 0.0:
            raise ValueError(f"negative component std: {self.std_frames}")


@dataclass(frozen=True)
class PhonemeDurationDistribution:
    phoneme: str
    components: tuple[MixtureComponent, ...]

    def __post_init__(self):
        if not self.components:
            raise ValueError("distribution needs at least one component")
        object.__setattr__(self, "components", tuple(self.components))
        total = sum(c.weight for c in self.components)
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"component weights sum to {total}, expected 1")

    @property
    def mean_frames(self) -> float:
        """Mixture mean (weighted over all components)."""
        return sum(c.weight * c.mean_frames for c in self.components)


def single_gaussian(phoneme: str, mean_frames: float, std_frames: float) -> PhonemeDurationDistribution:
    return PhonemeDurationDistribution(
        phoneme, (MixtureComponent(1.0, mean_frames, std_frames),)
    )


@dataclass(frozen=True)
class NoteSpan:
    """One note: a total frame budget and the distributions of its phonemes."""

    total_frames: int
    distributions: tuple[PhonemeDurationDistribution, ...]

    def __post_init__(self):
        object.__setattr__(self, "distributions", tuple(self.distributions))
        if not self.distributions:
            raise ValueError("note span needs at least one phoneme")
        if self.total_frames < 1:
            raise ValueError("note span needs at least one frame")

    def __len__(self) -> int:
        return len(self.distributions)


class AllocationMethod(Enum):
    LAGRANGE = "lagrange"
    FITTING_HEURISTIC = "heuristic"
    MEAN_FIT = "meanfit"
    GRID_ORACLE = "grid-oracle"  # test support only


@dataclass
class AllocationResult:
    durations_frames: list[int]
    durations_real: list[float]
    alpha: float
    clamped_indices: set[int]
    method: AllocationMethod

    def __post_init__(self):
        if any(f < 1 for f in self.durations_frames):
            raise ValueError("allocated duration below one frame")


# --------------------------------------------------------------------------
# Mixture primitives
# --------------------------------------------------------------------------

def select_max_weight_component(dist: PhonemeDurationDistribution) -> tuple[float, float]:
    """(mean, std) of the heaviest component; ties go to the lowest index."""
    best = max(range(len(dist.components)), key=lambda k: (dist.components[k].weight, -k))
    comp = dist.components[best]
    return comp.mean_frames, comp.std_frames


def mixture_log_likelihood(dist: PhonemeDurationDistribution, d: float) -> float:
    """log sum_k w_k N(d; mu_k, sigma_k^2), evaluated in log space."""
    if not math.isfinite(d):
        raise ValueError(f"duration must be finite, got {d}")
    w = np.array([c.weight for c in dist.components])
    mu = np.array([c.mean_frames for c in dist.components])
    sd = np.array([c.std_frames for c in dist.components])
    if np.any(sd <= 0.0):
        raise DegenerateComponent(f"zero-std component in {dist.phoneme!r}")
    with np.errstate(divide="ignore"):
        logw = np.log(w)
    logpdf = -0.5 * ((d - mu) / sd) ** 2 - np.log(sd) - 0.5 * math.log(2.0 * math.pi)
    return float(logsumexp(logw + logpdf))


def _selected_params(span: NoteSpan) -> tuple[np.ndarray, np.ndarray]:
    pairs = [select_max_weight_component(dist) for dist in span.distributions]
    mu = np.array([p[0] for p in pairs])
    sd = np.array([p[1] for p in pairs])
    return mu, sd


def span_log_likelihood(span: NoteSpan, durations: Sequence[float]) -> float:
    """Summed log N(d_i; mu_i, sigma_i^2) over the max-weight components."""
    mu, sd = _selected_params(span)
    d = np.asarray(durations, dtype=float)
    if np.any(sd <= 0.0):
        raise DegenerateComponent("zero-std component in span")
    return float(np.sum(-0.5 * ((d - mu) / sd) ** 2 - np.log(sd) - 0.5 * math.log(2.0 * math.pi)))


# --------------------------------------------------------------------------
# Quantization
# --------------------------------------------------------------------------

def quantize_to_frames(real_durations: Sequence[float], total_frames: int) -> list[int]:
    """Largest-remainder rounding to integers that sum exactly to the budget.

    Spare frames go to the largest fractional remainders; on ties the earlier
    index wins.  Inputs must already be >= 1 and sum to the budget.
    """
    r = np.asarray(real_durations, dtype=float)
    if r.size == 0:
        raise ValueError("nothing to quantize")
    if np.any(r < MIN_DURATION_FRAMES - 1e-9):
        raise ValueError(f"real durations below {MIN_DURATION_FRAMES} frame(s): {r}")
    if abs(float(r.sum()) - total_frames) > 1e-6:
        raise ValueError(f"real durations sum to {r.sum()}, expected {total_frames}")

    floors = np.floor(np.maximum(r, MIN_DURATION_FRAMES)).astype(int)
    spare = int(total_frames - floors.sum())
    remainders = r - floors
    order = sorted(range(r.size), key=lambda i: (-remainders[i], i))
    out = floors.copy()
    if spare >= 0:
        for i in order[:spare]:
            out[i] += 1
    else:
        # float drift pushed a floor too high; take frames back from the
        # smallest remainders without breaching the 1-frame floor
        for i in reversed(order):
            if spare == 0:
                break
            if out[i] > 1:
                out[i] -= 1
                spare += 1
    assert int(out.sum()) == total_frames
    return [int(v) for v in out]


def _floor_and_rescale(durations: np.ndarray, total: float) -> np.ndarray:
    """Scale to the exact total while keeping every entry >= 1 frame.

    No-op when the input already satisfies both conditions.
    """
    d = np.array(durations, dtype=float)
    n = d.size
    if total < n * MIN_DURATION_FRAMES - 1e-9:
        raise InfeasibleNote(f"{total} frames cannot hold {n} phonemes")
    fixed = np.zeros(n, dtype=bool)
    for _ in range(n):
        budget = total - MIN_DURATION_FRAMES * fixed.sum()
        free = ~fixed
        free_sum = d[free].sum()
        if free_sum > 0:
            d[free] *= budget / free_sum
        else:
            d[free] = budget / free.sum()
        below = free & (d < MIN_DURATION_FRAMES)
        if not below.any():
            break
        d[below] = MIN_DURATION_FRAMES
        fixed |= below
        if fixed.all():
            break
    d[fixed] = MIN_DURATION_FRAMES
    return d


# --------------------------------------------------------------------------
# Allocators
# --------------------------------------------------------------------------

def allocate_lagrange(span: NoteSpan) -> AllocationResult:
    """Constrained maximum-likelihood allocation with closed-form multiplier.

    Solves d_i = mu_i + var_i * alpha with alpha = (T - sum mu) / sum var over
    the active set; phonemes pushed below the 1-frame floor are clamped there
    and the remainder is re-solved (at most M passes).  When every active
    variance is zero the residual is split in proportion to the means, or
    uniformly if those are zero as well.
    """
    m = len(span)
    t = span.total_frames
    if t < m * MIN_DURATION_FRAMES:
        raise InfeasibleNote(f"{t} frames cannot hold {m} phonemes")

    mu, sd = _selected_params(span)
    var = sd**2
    active = np.ones(m, dtype=bool)
    d = np.empty(m, dtype=float)
    alpha = 0.0

    for _ in range(m):
        budget = t - MIN_DURATION_FRAMES * np.count_nonzero(~active)
        var_sum = var[active].sum()
        if var_sum > 0.0:
            alpha = float((budget - mu[active].sum()) / var_sum)
            d[active] = mu[active] + var[active] * alpha
        else:
            mu_sum = mu[active].sum()
            alpha = 0.0
            if mu_sum > 0.0:
                d[active] = budget * mu[active] / mu_sum
            else:
                d[active] = budget / np.count_nonzero(active)
        below = active & (d < MIN_DURATION_FRAMES)
        if not below.any():
            break
        d[below] = MIN_DURATION_FRAMES
        active &= ~below
        if not active.any():
            break

    clamped = set(int(i) for i in np.nonzero(~active)[0])
    return AllocationResult(
        durations_frames=quantize_to_frames(d, t),
        durations_real=[float(v) for v in d],
        alpha=alpha,
        clamped_indices=clamped,
        method=AllocationMethod.LAGRANGE,
    )


def allocate_fitting_heuristic(
    span: NoteSpan,
    primary_index: int,
    r0: float = 1.0,
    reserve: float = 0.0,
) -> AllocationResult:
    """Rule-based baseline: one designated vowel absorbs the note residual.

    Non-primary phonemes keep r0-stretched means (scaled down if they would
    exceed the (1 - reserve) share of the note); the primary takes whatever
    remains.  If the remainder drops below one frame, every phoneme is instead
    rescaled proportionally to its mean.
    """
    m = len(span)
    t = float(span.total_frames)
    if not 0 <= primary_index < m:
        raise ValueError(f"primary index {primary_index} out of range for {m} phonemes")
    if t < m * MIN_DURATION_FRAMES:
        raise InfeasibleNote(f"{span.total_frames} frames cannot hold {m} phonemes")

    mu, _ = _selected_params(span)
    d = np.empty(m, dtype=float)
    clamped: set[int] = set()

    if m == 1:
        d[0] = t
    else:
        others = np.arange(m) != primary_index
        raw = r0 * mu[others]
        cap = (1.0 - reserve) * t
        raw_sum = raw.sum()
        if raw_sum > cap and raw_sum > 0:
            raw = raw * (cap / raw_sum)
        residual = t - raw.sum()
        if residual >= MIN_DURATION_FRAMES:
            d[others] = raw
            d[primary_index] = residual
        else:
            mu_sum = mu.sum()
            if mu_sum > 0:
                d = t * mu / mu_sum
            else:
                d = np.full(m, t / m)
    rescued = _floor_and_rescale(d, t)
    clamped = set(int(i) for i in np.nonzero(rescued != d)[0]) if not np.array_equal(rescued, d) else set()
    d = rescued

    return AllocationResult(
        durations_frames=quantize_to_frames(d, span.total_frames),
        durations_real=[float(v) for v in d],
        alpha=0.0,
        clamped_indices=clamped,
        method=AllocationMethod.FITTING_HEURISTIC,
    )


def allocate_mean_fit(
    span: NoteSpan,
    table: "DurationModelTable",
    primary_index: int | None = None,
) -> AllocationResult:
    """Baseline driven by a per-phoneme mean-duration look-up table.

    Each distribution is replaced by the context-free table mean for its
    phoneme, then the fitting heuristic runs with the second phoneme as the
    default primary vowel.
    """
    means = [table.context_free(dist.phoneme).mean_frames for dist in span.distributions]
    flat = NoteSpan(
        span.total_frames,
        tuple(
            single_gaussian(dist.phoneme, mean, 0.0)
            for dist, mean in zip(span.distributions, means)
        ),
    )
    if primary_index is None:
        primary_index = 1 if len(span) >= 2 else 0
    result = allocate_fitting_heuristic(flat, primary_index)
    result.method = AllocationMethod.MEAN_FIT
    return result


def allocate_with_method(
    span: NoteSpan,
    method: AllocationMethod | str,
    table: "DurationModelTable | None" = None,
    primary_index: int = 1,
) -> AllocationResult:
    """Dispatch to an allocator by name; primary index is clipped to the span."""
    if isinstance(method, str):
        method = AllocationMethod(method)
    if method is AllocationMethod.LAGRANGE:
        return allocate_lagrange(span)
    p = primary_index if 0 <= primary_index < len(span) else len(span) - 1
    if method is AllocationMethod.FITTING_HEURISTIC:
        return allocate_fitting_heuristic(span, primary_index=p)
    if method is AllocationMethod.MEAN_FIT:
        if table is None:
            raise ValueError("mean-fit allocation needs a duration table")
        return allocate_mean_fit(span, table, primary_index=p)
    raise ValueError(f"cannot allocate with {method}")


def oracle_allocate_grid(span: NoteSpan, step: float) -> AllocationResult:
    """Independent check of the closed form: grid search over the simplex.

    Exhaustive at the requested step for one or two phonemes; for three or
    four, a full coarse grid is refined around its argmax down to the
    requested step (the objective is concave, so the optimum cannot hide
    between coarse points beyond the refinement margin).  Test support only.
    """
    m = len(span)
    t = float(span.total_frames)
    if m > 4:
        raise ValueError("grid oracle supports at most 4 phonemes")
    if step <= 0:
        raise ValueError("step must be positive")
    if t < m * MIN_DURATION_FRAMES:
        raise InfeasibleNote(f"{span.total_frames} frames cannot hold {m} phonemes")

    mu, sd = _selected_params(span)
    if np.any(sd <= 0):
        raise DegenerateComponent("grid oracle needs positive stds")
    var = sd**2

    def objective(points: np.ndarray) -> np.ndarray:
        # points: (..., m); constants dropped, argmax unaffected
        return -np.sum((points - mu) ** 2 / (2.0 * var), axis=-1)

    if m == 1:
        best = np.array([t])
    elif m == 2:
        grid = np.arange(MIN_DURATION_FRAMES, t - MIN_DURATION_FRAMES + step / 2, step)
        pts = np.stack([grid, t - grid], axis=-1)
        best = pts[int(np.argmax(objective(pts)))]
    else:
        lo = np.full(m - 1, MIN_DURATION_FRAMES)
        hi = np.full(m - 1, t - (m - 1) * MIN_DURATION_FRAMES)
        spacing = float(hi[0] - lo[0])
        shrink = 20.0 if m == 3 else 8.0  # cube grids get expensive fast
        best = None
        while True:
            spacing = max(spacing / shrink, step)
            axes = [
                np.arange(lo[i], hi[i] + spacing / 2, spacing)
                for i in range(m - 1)
            ]
            mesh = np.meshgrid(*axes, indexing="ij")
            free = np.stack([g.ravel() for g in mesh], axis=-1)
            last = t - free.sum(axis=-1)
            feasible = last >= MIN_DURATION_FRAMES - 1e-12
            if not feasible.any():
                free = np.array([lo])
                last = np.array([t - lo.sum()])
                feasible = np.array([True])
            pts = np.concatenate([free, last[:, None]], axis=-1)[feasible]
            best = pts[int(np.argmax(objective(pts)))]
            if spacing <= step:
                break
            margin = 2.0 * spacing
            lo = np.maximum(best[:-1] - margin, MIN_DURATION_FRAMES)
            hi = np.minimum(best[:-1] + margin, t - (m - 1) * MIN_DURATION_FRAMES)

    return AllocationResult(
        durations_frames=quantize_to_frames(best, span.total_frames),
        durations_real=[float(v) for v in best],
        alpha=0.0,
        clamped_indices=set(),
        method=AllocationMethod.GRID_ORACLE,
    )


# --------------------------------------------------------------------------
# Context-bucketed duration table
# --------------------------------------------------------------------------

ContextKey = tuple  # (prev_class | None, next_class | None, tertile | None)
CONTEXT_FREE: ContextKey = (None, None, None)


@dataclass(frozen=True)
class PhonemeContext:
    """One phoneme with its neighbours and the length of its note."""

    phoneme: str
    prev: str | None = None
    next: str | None = None
    note_frames: int | None = None


@dataclass
class DurationModelTable:
    """Mixture distributions bucketed by (prev class, next class, note tertile).

    Buckets with a None field match any value of that field; the all-None
    bucket is the context-free fallback that every phoneme must have.
    """

    entries: dict[str, dict[ContextKey, PhonemeDurationDistribution]] = field(default_factory=dict)
    tertile_bounds: tuple[float, float] | None = None
    k: int = 2

    def add(self, dist: PhonemeDurationDistribution, context: ContextKey = CONTEXT_FREE) -> None:
        self.entries.setdefault(dist.phoneme, {})[tuple(context)] = dist

    def phonemes(self) -> list[str]:
        return sorted(self.entries)

    def context_free(self, phoneme: str) -> PhonemeDurationDistribution:
        buckets = self.entries.get(phoneme)
        if not buckets or CONTEXT_FREE not in buckets:
            raise UnknownPhoneme(phoneme)
        return buckets[CONTEXT_FREE]

    def tertile(self, note_frames: int | None) -> int | None:
        if note_frames is None or self.tertile_bounds is None:
            return None
        lo, hi = self.tertile_bounds
        if note_frames < lo:
            return 0
        if note_frames < hi:
            return 1
        return 2

    def lookup(self, context: PhonemeContext) -> PhonemeDurationDistribution:
        """Most specific bucket first, ending at the context-free entry."""
        buckets = self.entries.get(context.phoneme)
        if not buckets:
            raise UnknownPhoneme(context.phoneme)
        p = classify_phoneme(context.prev)
        n = classify_phoneme(context.next)
        t = self.tertile(context.note_frames)
        for key in (
            (p, n, t),
            (p, n, None),
            (p, None, t),
            (None, n, t),
            (p, None, None),
            (None, n, None),
            (None, None, t),
            CONTEXT_FREE,
        ):
            if key in buckets:
                return buckets[key]
        raise UnknownPhoneme(context.phoneme)

    def validate_inventory(self, inventory: Iterable[str]) -> None:
        missing = [p for p in inventory if p not in self.entries or CONTEXT_FREE not in self.entries[p]]
        if missing:
            raise UnknownPhoneme(missing[0])


def predict_distributions(
    contexts: Sequence[PhonemeContext], table: DurationModelTable
) -> list[PhonemeDurationDistribution]:
    """Per-phoneme distribution via the most specific matching table bucket."""
    return [table.lookup(ctx) for ctx in contexts]


def contexts_for_note(phonemes: Sequence[str], note_frames: int) -> list[PhonemeContext]:
    """Context records for the phonemes of one note; edges border silence."""
    out = []
    for i, ph in enumerate(phonemes):
        out.append(
            PhonemeContext(
                phoneme=ph,
                prev=phonemes[i - 1] if i > 0 else None,
                next=phonemes[i + 1] if i + 1 < len(phonemes) else None,
                note_frames=note_frames,
            )
        )
    return out


# --------------------------------------------------------------------------
# Statistical estimation (data-driven stand-in for a trained predictor)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DurationSample:
    phoneme: str
    duration_frames: float
    prev: str | None = None
    next: str | None = None
    note_frames: int | None = None


def _fit_mixture_1d(x: np.ndarray, k: int) -> list[MixtureComponent]:
    """Deterministic EM fit of a k-component Gaussian mixture to 1-D data.

    Initialized from quantile splits; stds floored to keep the allocator
    well-conditioned.  Falls back to fewer components for tiny samples.
    """
    x = np.asarray(x, dtype=float)
    k = max(1, min(k, x.size))
    if k == 1 or x.size < 4:
        std = float(x.std()) if x.size > 1 else 0.0
        return [MixtureComponent(1.0, float(x.mean()), max(std, STD_FLOOR_FRAMES))]

    qs = np.quantile(x, [(2 * j + 1) / (2 * k) for j in range(k)])
    mu = qs.astype(float)
    sd = np.full(k, max(float(x.std()) / k, STD_FLOOR_FRAMES))
    w = np.full(k, 1.0 / k)

    for _ in range(200):
        log_resp = (
            np.log(np.maximum(w, 1e-12))[None, :]
            - 0.5 * ((x[:, None] - mu[None, :]) / sd[None, :]) ** 2
            - np.log(sd)[None, :]
        )
        log_resp -= logsumexp(log_resp, axis=1, keepdims=True)
        resp = np.exp(log_resp)
        nk = resp.sum(axis=0)
        w_new = np.maximum(nk / x.size, 1e-3)
        w_new /= w_new.sum()
        mu_new = (resp * x[:, None]).sum(axis=0) / np.maximum(nk, 1e-12)
        var_new = (resp * (x[:, None] - mu_new[None, :]) ** 2).sum(axis=0) / np.maximum(nk, 1e-12)
        sd_new = np.maximum(np.sqrt(var_new), STD_FLOOR_FRAMES)
        if (
            np.allclose(mu_new, mu, atol=1e-8)
            and np.allclose(sd_new, sd, atol=1e-8)
            and np.allclose(w_new, w, atol=1e-10)
        ):
            mu, sd, w = mu_new, sd_new, w_new
            break
        mu, sd, w = mu_new, sd_new, w_new

    order = np.argsort(-w, kind="stable")
    w = w[order] / w[order].sum()
    comps = [
        MixtureComponent(float(w[j]), float(mu[order][j]), float(sd[order][j]))
        for j in range(k)
    ]
    # exact weight normalization against float drift
    drift = 1.0 - sum(c.weight for c in comps)
    if drift:
        comps[0] = MixtureComponent(comps[0].weight + drift, comps[0].mean_frames, comps[0].std_frames)
    return comps


def fit_duration_table(
    samples: Iterable[DurationSample],
    k: int = 2,
    min_bucket_count: int = 10,
) -> DurationModelTable:
    """Estimate mixtures per phoneme, plus context buckets with enough data."""
    samples = list(samples)
    if not samples:
        raise ValueError("no duration samples")

    note_lengths = np.array(
        [s.note_frames for s in samples if s.note_frames is not None], dtype=float
    )
    bounds = None
    if note_lengths.size >= 3:
        bounds = (
            float(np.quantile(note_lengths, 1 / 3)),
            float(np.quantile(note_lengths, 2 / 3)),
        )

    table = DurationModelTable(tertile_bounds=bounds, k=k)

    by_phoneme: dict[str, list[float]] = {}
    by_bucket: dict[tuple[str, ContextKey], list[float]] = {}
    for s in samples:
        by_phoneme.setdefault(s.phoneme, []).append(s.duration_frames)
        key = (
            classify_phoneme(s.prev),
            classify_phoneme(s.next),
            table.tertile(s.note_frames),
        )
        by_bucket.setdefault((s.phoneme, key), []).append(s.duration_frames)

    for phoneme, values in sorted(by_phoneme.items()):
        comps = _fit_mixture_1d(np.array(values), k)
        table.add(PhonemeDurationDistribution(phoneme, tuple(comps)))
    for (phoneme, key), values in sorted(by_bucket.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
        if len(values) >= min_bucket_count and key != CONTEXT_FREE:
            comps = _fit_mixture_1d(np.array(values), k)
            table.add(PhonemeDurationDistribution(phoneme, tuple(comps)), key)
    return table


# --------------------------------------------------------------------------
# Model file I/O (shared contract with the external trainer)
# --------------------------------------------------------------------------

def _context_to_json(key: ContextKey) -> dict | None:
    if tuple(key) == CONTEXT_FREE:
        return None
    prev, nxt, tert = key
    return {"prev": prev, "next": nxt, "tertile": tert}


def _context_from_json(obj: dict | None) -> ContextKey:
    if obj is None:
        return CONTEXT_FREE
    prev = obj.get("prev")
    nxt = obj.get("next")
    tert = obj.get("tertile")
    for cls in (prev, nxt):
        if cls is not None and cls not in PHONEME_CLASSES:
            raise FormatError(f"unknown phoneme class in model context: {cls!r}")
    if tert is not None and tert not in (0, 1, 2):
        raise FormatError(f"tertile must be 0, 1 or 2, got {tert!r}")
    return (prev, nxt, tert)


def write_model(table: DurationModelTable, file: IO[str]) -> None:
    """Write the mixture-parameter JSON document (deterministic ordering)."""
    entries = []
    for phoneme in table.phonemes():
        buckets = table.entries[phoneme]
        for key in sorted(buckets, key=lambda c: (c != CONTEXT_FREE, str(c))):
            dist = buckets[key]
            entry: dict = {
                "phoneme": phoneme,
                "components": [
                    {
                        "weight": c.weight,
                        "mean_frames": c.mean_frames,
                        "std_frames": c.std_frames,
                    }
                    for c in dist.components
                ],
            }
            ctx = _context_to_json(key)
            if ctx is not None:
                entry["context"] = ctx
            entries.append(entry)
    doc = {
        "frame_ms": FRAME_MS,
        "K": table.k,
        "tertile_bounds_frames": list(table.tertile_bounds) if table.tertile_bounds else None,
        "entries": entries,
    }
    json.dump(doc, file, indent=2, sort_keys=True)
    file.write("\n")


def read_model(file: IO[str]) -> DurationModelTable:
    """Read and validate a mixture-parameter JSON document."""
    try:
        doc = json.load(file)
    except json.JSONDecodeError as exc:
        raise FormatError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "entries" not in doc:
        raise FormatError("model file must be an object with an 'entries' list")
    if doc.get("frame_ms") != FRAME_MS:
        raise FormatError(f"model frame_ms must be {FRAME_MS}, got {doc.get('frame_ms')!r}")

    bounds = doc.get("tertile_bounds_frames")
    if bounds is not None and (not isinstance(bounds, (list, tuple)) or len(bounds) != 2):
        raise FormatError(f"tertile_bounds_frames must be a [low, high] pair, got {bounds!r}")
    table = DurationModelTable(
        tertile_bounds=tuple(bounds) if bounds else None,
        k=int(doc.get("K", 2)),
    )
    for i, entry in enumerate(doc["entries"]):
        try:
            phoneme = entry["phoneme"]
            comps = tuple(
                MixtureComponent(
                    float(c["weight"]), float(c["mean_frames"]), float(c["std_frames"])
                )
                for c in entry["components"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad model entry #{i}: {exc}") from exc
        total = sum(c.weight for c in comps)
        if abs(total - 1.0) > 1e-6:
            raise FormatError(f"entry #{i} ({phoneme!r}): weights sum to {total}")
        dist = PhonemeDurationDistribution(phoneme, comps)
        table.add(dist, _context_from_json(entry.get("context")))
    return table
