"""Coordinator-mediated many-to-one stable matching of channels to SUs.

SUs propose in decreasing rate order; a channel accepts any proposer whose
primary-side utility clears that channel's QoS threshold and keeps only the
best proposer seen so far. After every proposal the coordinator disqualifies
SUs the channel can never end up with, which is what keeps the message count
low: each SU learns about each channel at most once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Matching:
    """Assignment of channels to SUs; unassigned channels stay with their PU.

    channel_of[l] is the SU index holding channel l, or None.
    channels_of[k] is the set of channels held by SU k.
    """

    channel_of: list
    channels_of: list

    @classmethod
    def from_channel_map(cls, channel_of, n_sus: int) -> "Matching":
        channels_of = [set() for _ in range(n_sus)]
        for l, k in enumerate(channel_of):
            if k is not None:
                channels_of[k].add(l)
        return cls(channel_of=list(channel_of), channels_of=channels_of)

    @property
    def n_channels(self) -> int:
        return len(self.channel_of)

    @property
    def n_sus(self) -> int:
        return len(self.channels_of)

    def assigned_pairs(self):
        """(su, channel) pairs in channel order."""
        return [(k, l) for l, k in enumerate(self.channel_of) if k is not None]

    def check_consistent(self, quotas) -> None:
        """Raise ValueError unless this is a valid quota-feasible matching."""
        seen = set()
        for k, held in enumerate(self.channels_of):
            if len(held) > quotas[k]:
                raise ValueError(f"SU {k} exceeds quota {quotas[k]}")
            for l in held:
                if self.channel_of[l] != k:
                    raise ValueError(f"channel {l} map disagrees with SU {k}")
                if l in seen:
                    raise ValueError(f"channel {l} assigned twice")
                seen.add(l)
        for l, k in enumerate(self.channel_of):
            if k is not None and l not in self.channels_of[k]:
                raise ValueError(f"SU {k} missing channel {l}")

    def to_dict(self) -> dict:
        return {
            "channel_of": [k if k is not None else "pu" for k in self.channel_of],
            "channels_of": [sorted(held) for held in self.channels_of],
        }


@dataclass
class MessageLog:
    """Signalling record of one protocol run.

    proposals hold (su, channel) in send order, responses the matching
    accept/reject bits, disqualifications the (su, mask) broadcasts where
    mask is the SU's updated blocked set packed little-endian by channel.
    """

    n_channels: int
    proposals: list = field(default_factory=list)
    responses: list = field(default_factory=list)
    disqualifications: list = field(default_factory=list)
    bits_total: int = 0
    proposals_per_su: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "proposals": [list(p) for p in self.proposals],
            "responses": [int(r) for r in self.responses],
            "disqualifications": [[k, mask] for k, mask in self.disqualifications],
            "bits_total": self.bits_total,
            "proposals_per_su": list(self.proposals_per_su),
        }


@dataclass
class CoordinatorState:
    """Mutable coordinator view while the protocol runs.

    pu_prefs starts as a copy of u_pu and is zeroed as SUs get disqualified,
    engaged[l] is the current holder of channel l, blocked[k][l] marks
    channels SU k may no longer propose to.
    """

    pu_prefs: np.ndarray
    engaged: list
    blocked: np.ndarray


def proposal_bits(channel: int) -> int:
    """Bits to index one channel among those still open, ceil(log2) of the
    1-based channel number; the first channel costs nothing."""
    return int(channel).bit_length() if channel > 0 else 0


def worst_case_bits(n_channels: int) -> int:
    """Per-SU signalling ceiling: L-bit disqualification masks (at most one
    per channel), one response per channel, and every channel index once."""
    l = n_channels
    return l * l + l + sum(j.bit_length() for j in range(l))


def run_stable_matching(tables, quotas, thresholds=None, scheduler=None):
    """Run the proposal protocol; returns (Matching, MessageLog).

    Each under-quota SU proposes to its best remaining channel with positive
    rate. The channel accepts when the proposer clears its threshold,
    dropping any previous holder. Either way the coordinator then
    disqualifies every SU the channel now strictly prefers less than the
    incumbent (or less than the threshold itself on a reject), and sends
    each newly affected SU its updated blocked mask.

    scheduler None picks proposers round-robin; passing a numpy Generator
    picks uniformly among SUs able to propose. The outcome is the same
    either way, only the message order varies.
    """
    u_su = np.asarray(tables.u_su, dtype=float)
    u_pu = np.asarray(tables.u_pu, dtype=float)
    n_sus, n_channels = u_su.shape
    quotas = list(quotas)
    if len(quotas) != n_sus:
        raise ValueError("quotas length must match the number of SUs")
    if thresholds is None:
        thresholds = tables.u_pu_self
    thresholds = np.asarray(thresholds, dtype=float)

    state = CoordinatorState(
        pu_prefs=u_pu.copy(),
        engaged=[None] * n_channels,
        blocked=np.zeros((n_sus, n_channels), dtype=bool),
    )
    held = [set() for _ in range(n_sus)]
    proposed = np.zeros((n_sus, n_channels), dtype=bool)
    log = MessageLog(n_channels=n_channels, proposals_per_su=[0] * n_sus)

    # preference order over channels: decreasing rate, channel index on ties
    pref = np.argsort(-u_su, axis=1, kind="stable")

    def next_channel(k):
        for l in pref[k]:
            if u_su[k, l] <= 0.0:
                return None  # sorted descending, nothing positive remains
            if proposed[k, l] or state.blocked[k, l] or l in held[k]:
                continue
            return int(l)
        return None

    def disqualify(l, bar_value, bar_su):
        """Block every non-disqualified SU the channel now ranks below the
        bar; ties lose to the lower SU index. bar_su None means the bar is
        the threshold itself and ties lose too."""
        for i in range(n_sus):
            if state.blocked[i, l]:
                continue
            if bar_su is None:
                worse = u_pu[l, i] <= bar_value
            else:
                worse = (u_pu[l, i], -i) < (bar_value, -bar_su)
            if not worse:
                continue
            state.blocked[i, l] = True
            state.pu_prefs[l, i] = 0.0
            mask = 0
            for j in np.flatnonzero(state.blocked[i]):
                mask |= 1 << int(j)
            log.disqualifications.append((i, mask))
            log.bits_total += n_channels

    def propose(k):
        l = next_channel(k)
        proposed[k, l] = True
        log.proposals.append((k, l))
        log.proposals_per_su[k] += 1
        log.bits_total += proposal_bits(l)
        accepted = u_pu[l, k] > thresholds[l]
        log.responses.append(accepted)
        log.bits_total += 1
        if accepted:
            prev = state.engaged[l]
            state.engaged[l] = k
            held[k].add(l)
            if prev is not None and prev != k:
                held[prev].discard(l)
            disqualify(l, u_pu[l, k], k)
        else:
            disqualify(l, thresholds[l], None)

    def actionable():
        return [
            k
            for k in range(n_sus)
            if len(held[k]) < quotas[k] and next_channel(k) is not None
        ]

    cursor = 0
    while True:
        ready = actionable()
        if not ready:
            break
        if scheduler is None:
            pick = next((k for k in ready if k >= cursor % n_sus), ready[0])
            cursor = pick + 1
        else:
            pick = ready[int(scheduler.integers(len(ready)))]
        propose(pick)

    channel_of = list(state.engaged)
    matching = Matching.from_channel_map(channel_of, n_sus)
    matching.check_consistent(quotas)
    return matching, log


def is_individually_rational(matching: Matching, tables, thresholds=None) -> bool:
    """No matched agent strictly prefers dropping its assignment."""
    if thresholds is None:
        thresholds = tables.u_pu_self
    for l, k in enumerate(matching.channel_of):
        if k is None:
            continue
        if tables.u_su[k, l] < 0.0:
            return False
        if tables.u_pu[l, k] < thresholds[l]:
            return False
    return True


def find_blocking_pairs(matching: Matching, tables, quotas, thresholds=None):
    """All (su, channel) pairs that would defect from the matching.

    A pair blocks when the channel strictly prefers the SU to its current
    holder (or to staying unassigned), and the SU strictly prefers the
    channel to its worst held one, or has spare quota and positive rate.
    """
    if thresholds is None:
        thresholds = tables.u_pu_self
    pairs = []
    for k in range(matching.n_sus):
        held = matching.channels_of[k]
        worst = min((tables.u_su[k, l] for l in held), default=None)
        for l in range(matching.n_channels):
            if l in held:
                continue
            incumbent = matching.channel_of[l]
            if incumbent is None:
                channel_gains = tables.u_pu[l, k] > thresholds[l]
            else:
                channel_gains = tables.u_pu[l, k] > tables.u_pu[l, incumbent]
            if not channel_gains:
                continue
            if len(held) < quotas[k]:
                su_gains = tables.u_su[k, l] > 0.0
            else:
                su_gains = tables.u_su[k, l] > worst
            if su_gains:
                pairs.append((k, l))
    return pairs


def is_stable(matching: Matching, tables, quotas, thresholds=None) -> bool:
    """Individually rational and free of blocking pairs."""
    return is_individually_rational(matching, tables, thresholds) and not find_blocking_pairs(
        matching, tables, quotas, thresholds
    )


def verify_unique_pu_optimal(matching: Matching, tables, quotas) -> bool:
    """Check the no-contention outcome: with every quota at least L and no
    QoS floor, each channel must go to the SU its PU ranks highest."""
    if any(q < matching.n_channels for q in quotas):
        raise ValueError("requires every quota >= number of channels")
    for l in range(matching.n_channels):
        best = int(np.argmax(tables.u_pu[l]))  # argmax takes the lowest index on ties
        if matching.channel_of[l] != best:
            return False
    return True
