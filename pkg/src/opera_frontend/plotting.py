"""Deterministic SVG rendering of f0 contours with note-step overlays.

The drawing convention mirrors the usual transcription figure: a continuous
orange f0 line over dashed blue note steps.  Output is plain SVG text with
fixed formatting and no timestamps, so identical inputs give identical bytes.
"""

from __future__ import annotations

import math
from typing import Sequence

from .note_transcriber import TranscribedNote
from .pitch_tracker import PitchTrack, hz_to_midi

F0_COLOR = "#ff7f0e"  # orange contour
NOTE_COLOR = "#1f77b4"  # blue dashed steps


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def render_f0_svg(
    track: PitchTrack,
    notes: Sequence[TranscribedNote] = (),
    width: int = 900,
    height: int = 320,
) -> str:
    """SVG document with the track's f0 contour and optional note steps."""
    margin_l, margin_r, margin_t, margin_b = 54.0, 16.0, 16.0, 36.0
    plot_w = width - margin_l - margin_r
    plot_h = height - margin_t - margin_b

    duration_s = max(len(track) * track.hop_s, track.hop_s)
    midis = [hz_to_midi(f) for f in track.f0_hz[track.voiced]]
    midis += [float(n.midi_pitch) for n in notes]
    if midis:
        lo, hi = min(midis) - 2.0, max(midis) + 2.0
    else:
        lo, hi = 48.0, 72.0

    def x_at(t: float) -> float:
        return margin_l + plot_w * t / duration_s

    def y_at(m: float) -> float:
        return margin_t + plot_h * (hi - m) / (hi - lo)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{_fmt(margin_l)}" y="{_fmt(margin_t)}" width="{_fmt(plot_w)}" '
        f'height="{_fmt(plot_h)}" fill="none" stroke="#444444" stroke-width="1"/>',
    ]

    # y ticks at whole MIDI values, thinned to at most ~12 labels
    span = hi - lo
    step = max(1, int(math.ceil(span / 12.0)))
    tick = int(math.ceil(lo))
    while tick <= hi:
        y = y_at(tick)
        parts.append(
            f'<line x1="{_fmt(margin_l - 4)}" y1="{_fmt(y)}" x2="{_fmt(margin_l)}" '
            f'y2="{_fmt(y)}" stroke="#444444" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(margin_l - 8)}" y="{_fmt(y + 3)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{tick}</text>'
        )
        tick += step

    # x ticks: 6 evenly spaced time labels
    for k in range(7):
        t = duration_s * k / 6.0
        x = x_at(t)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{_fmt(margin_t + plot_h)}" x2="{_fmt(x)}" '
            f'y2="{_fmt(margin_t + plot_h + 4)}" stroke="#444444" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(margin_t + plot_h + 16)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{t:.2f}s</text>'
        )
    parts.append(
        f'<text x="{_fmt(margin_l / 2 - 10)}" y="{_fmt(margin_t + plot_h / 2)}" '
        f'font-family="sans-serif" font-size="10" '
        f'transform="rotate(-90 {_fmt(margin_l / 2 - 10)} {_fmt(margin_t + plot_h / 2)})" '
        f'text-anchor="middle">MIDI pitch</text>'
    )

    # note steps first, f0 on top (class attributes let tests find each series)
    for note in notes:
        y = y_at(note.midi_pitch)
        x1 = x_at(note.start_frame * track.hop_s)
        x2 = x_at(note.end_frame * track.hop_s)
        parts.append(
            f'<line class="note-step" x1="{_fmt(x1)}" y1="{_fmt(y)}" x2="{_fmt(x2)}" '
            f'y2="{_fmt(y)}" stroke="{NOTE_COLOR}" stroke-width="2" stroke-dasharray="6 3"/>'
        )

    run: list[str] = []
    for i in range(len(track)):
        if track.voiced[i]:
            x = x_at((i + 0.5) * track.hop_s)
            y = y_at(hz_to_midi(track.f0_hz[i]))
            run.append(f"{_fmt(x)},{_fmt(y)}")
        elif run:
            parts.append(_polyline(run))
            run = []
    if run:
        parts.append(_polyline(run))

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _polyline(points: list[str]) -> str:
    if len(points) == 1:
        x, y = points[0].split(",")
        return (
            f'<circle class="f0-contour" cx="{x}" cy="{y}" r="1.5" fill="{F0_COLOR}"/>'
        )
    return (
        f'<polyline class="f0-contour" points="{" ".join(points)}" fill="none" '
        f'stroke="{F0_COLOR}" stroke-width="1.5"/>'
    )
