"""Detector models, vacuum heralding, and ancilla erasure with feedforward.

Heralding is deterministic: no sampling happens anywhere.  All measurement
branches are enumerated exactly and reported with their probabilities.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .state import (
    HybridState,
    Term,
    canonicalize,
    overlap_sq,
    qubus_close,
    state_norm_sq,
)

_LN10 = math.log(10.0)


class FeedforwardError(RuntimeError):
    """Feedforward corrections failed to collapse the simulated detection
    outcomes onto a single state; signals a protocol-construction bug."""


@dataclass(frozen=True)
class DetectorModel:
    """On/off photon detector with quantum efficiency eta.

    eta = 1 is the ideal photon-number non-resolving detector.  The detector
    stays silent on a coherent amplitude beta with probability
    exp(-eta |beta|^2).  Dark counts are reserved but not modeled.
    """

    efficiency: float = 1.0
    dark_count_prob: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("detector efficiency must lie in [0, 1]")
        if self.dark_count_prob != 0.0:
            raise ValueError("dark counts are not modeled")

    @classmethod
    def ideal_pnnd(cls) -> "DetectorModel":
        return cls(1.0)

    @classmethod
    def on_off(cls, efficiency: float) -> "DetectorModel":
        return cls(float(efficiency))

    @property
    def kind(self) -> str:
        return "ideal_pnnd" if self.efficiency == 1.0 else "on_off"

    def no_click_log(self, beam_amp: complex) -> float:
        """Natural log of the silence probability on amplitude beam_amp."""
        beam_amp = complex(beam_amp)
        return -self.efficiency * (
            beam_amp.real * beam_amp.real + beam_amp.imag * beam_amp.imag
        )

    def no_click_prob(self, beam_amp: complex) -> float:
        return math.exp(self.no_click_log(beam_amp))


@dataclass(frozen=True)
class BranchRecord:
    """One distinct beam-amplitude class seen by the herald detector."""

    beam_amp: complex
    weight: float
    no_click_log: float

    @property
    def no_click(self) -> float:
        return math.exp(self.no_click_log)

    def to_dict(self) -> dict:
        return {
            "beam_amp": [self.beam_amp.real, self.beam_amp.imag],
            "weight": self.weight,
            "no_click": self.no_click,
            "no_click_log10": self.no_click_log / _LN10,
        }


@dataclass(frozen=True)
class HeraldOutcome:
    """Result of heralding on detector silence.

    ``heralded_state`` is the renormalized vacuum branch with the consumed
    beam removed (empty when no vacuum branch exists, in which case
    ``success_prob`` is 0).  ``error_prob_log`` is the natural log of
    ``error_prob`` and stays meaningful when the probability underflows;
    it is -inf when every branch heralds correctly.
    """

    heralded_state: HybridState
    success_prob: float
    error_prob: float
    error_prob_log: float
    branch_table: tuple[BranchRecord, ...]

    def __post_init__(self):
        if not -1e-12 <= self.success_prob <= 1.0 + 1e-12:
            raise ValueError("success probability out of [0, 1]")
        if self.error_prob > 1.0 - self.success_prob + 1e-12:
            raise ValueError("error probability exceeds failure weight")


def _branch_clusters(state: HybridState, beam: int):
    """Group terms into classes of equal beam amplitude (merge tolerance)."""
    clusters: list[list] = []  # [representative_amp, [terms]]
    for t in sorted(
        state.terms, key=lambda t: (round(t.qubus[beam].real, 12),
                                    round(t.qubus[beam].imag, 12))
    ):
        amp = t.qubus[beam]
        for row in clusters:
            if qubus_close(row[0], amp):
                row[1].append(t)
                break
        else:
            clusters.append([amp, [t]])
    return clusters


def herald_vacuum(
    state: HybridState, beam: int, det: DetectorModel
) -> HeraldOutcome:
    """Condition on detector silence for one qubus beam.

    The branch whose beam amplitude is vacuum (within merge tolerance) is
    kept, renormalized, and returned with the consumed beam removed from the
    qubus list.  ``success_prob`` is that branch's weight.  ``error_prob``
    is the total silent-failure probability: the chance the detector stays
    dark although the state sits in a non-vacuum branch, summed as
    weight * exp(-eta |beta|^2) over those branches.
    """
    if not 0 <= beam < state.layout.qubus_count:
        raise ValueError(f"beam index {beam} out of range")
    norm = state_norm_sq(state)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError("state must be normalized before heralding")
    s = canonicalize(state)

    vacuum_terms: list[Term] = []
    success = 0.0
    records = []
    failure_logs = []
    for rep, members in _branch_clusters(s, beam):
        weight = state_norm_sq(s.with_terms(members))
        records.append(BranchRecord(rep, weight, det.no_click_log(rep)))
        if qubus_close(rep, 0.0):
            vacuum_terms = members
            success = weight
        elif weight > 0.0:
            failure_logs.append(math.log(weight) + det.no_click_log(rep))

    if failure_logs:
        error_log = float(np.logaddexp.reduce(failure_logs))
        error_prob = math.exp(error_log)
    else:
        error_log = float("-inf")
        error_prob = 0.0

    new_layout = s.layout.replace(qubus_count=s.layout.qubus_count - 1)
    if success > 0.0:
        scale = 1.0 / math.sqrt(success)
        heralded = HybridState(
            new_layout,
            tuple(
                Term(t.amp * scale, t.labels, t.qubus[:beam] + t.qubus[beam + 1 :])
                for t in vacuum_terms
            ),
            s.norm_mode,
        )
    else:
        heralded = HybridState(new_layout, (), s.norm_mode)

    records.sort(key=lambda r: (-r.weight, round(r.beam_amp.real, 12),
                                round(r.beam_amp.imag, 12)))
    return HeraldOutcome(
        heralded_state=heralded,
        success_prob=success,
        error_prob=error_prob,
        error_prob_log=error_log,
        branch_table=tuple(records),
    )


def feedforward_outcomes(
    state: HybridState, correction_party: int
) -> list[HybridState]:
    """Corrected, renormalized state for each simulated detection mode.

    For detection in spatial mode k0, every term is multiplied by
    exp(-2 pi i j k0 / n) with j the correction party's label, and the
    spatial register is removed.
    """
    layout = state.layout
    if not layout.has_ancilla:
        raise ValueError("layout has no single-photon spatial register")
    layout.party_slot(correction_party)
    n = layout.ancilla_modes
    slot = layout.ancilla_slot
    new_layout = layout.replace(ancilla_modes=0)
    outcomes = []
    for k0 in range(n):
        picked = []
        for t in state.terms:
            if t.labels[slot] != k0:
                continue
            j = t.labels[layout.party_slot(correction_party)]
            amp = t.amp * cmath.exp(-2j * math.pi * j * k0 / n)
            picked.append(Term(amp, t.labels[:slot] + t.labels[slot + 1 :], t.qubus))
        if not picked:
            raise FeedforwardError(
                f"feedforward failed: detection outcome {k0} is unreachable"
            )
        out = canonicalize(HybridState(new_layout, tuple(picked), state.norm_mode))
        scale = 1.0 / math.sqrt(state_norm_sq(out))
        out = out.with_terms(Term(t.amp * scale, t.labels, t.qubus) for t in out.terms)
        outcomes.append(out)
    return outcomes


def measure_ancilla_and_feedforward(
    state: HybridState, correction_party: int
) -> HybridState:
    """Erase the single-photon spatial register by measurement + feedforward.

    The register must already be Fourier-transformed.  Every detection
    outcome then yields the same corrected state up to a global phase; the
    erasure is deterministic and costs no success probability.  Raises
    :class:`FeedforwardError` when the outcomes disagree beyond fidelity
    1 - 1e-10, which signals a mis-built circuit.
    """
    outcomes = feedforward_outcomes(state, correction_party)
    ref = outcomes[0]
    for other in outcomes[1:]:
        if abs(overlap_sq(ref, other) - 1.0) > 1e-10:
            raise FeedforwardError("feedforward failed: outcomes disagree")
    return ref
