"""Traffic signal schedules and their encoding for optimization.

Each signalized intersection runs two complementary groups. Group A starts
RED, stays red for ``offset`` seconds, then alternates green for ``green``
seconds and red for ``red`` seconds forever; group B is always the opposite
of group A. Timings are integer seconds: red and green in [20, 54], offset
in [0, red + green - 1].
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

RED_GREEN_MIN = 20
RED_GREEN_MAX = 54


class Phase(Enum):
    GREEN = "GREEN"
    RED = "RED"


@dataclass(frozen=True)
class IntersectionSignal:
    """Signal timing of one intersection: red/green durations and group A's initial red offset."""

    red: int
    green: int
    offset: int

    def __post_init__(self):
        for name in ("red", "green", "offset"):
            if not isinstance(getattr(self, name), int):
                raise ValueError(f"IntersectionSignal.{name} must be an integer")
        if not (RED_GREEN_MIN <= self.red <= RED_GREEN_MAX):
            raise ValueError(f"red must be in [{RED_GREEN_MIN}, {RED_GREEN_MAX}], got {self.red}")
        if not (RED_GREEN_MIN <= self.green <= RED_GREEN_MAX):
            raise ValueError(f"green must be in [{RED_GREEN_MIN}, {RED_GREEN_MAX}], got {self.green}")
        if not (0 <= self.offset <= self.red + self.green - 1):
            raise ValueError(
                f"offset must be in [0, {self.red + self.green - 1}], got {self.offset}"
            )

    @property
    def cycle(self) -> int:
        return self.red + self.green


# A configuration maps intersection id -> IntersectionSignal, covering
# exactly the signalized intersections of a network.
SignalConfiguration = dict


def phase_at(signal: IntersectionSignal, t: float) -> tuple[Phase, Phase]:
    """(group A, group B) phases at time t seconds; B is always A's complement."""
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    if t < signal.offset:
        a = Phase.RED
    else:
        into_cycle = (t - signal.offset) % signal.cycle
        a = Phase.GREEN if into_cycle < signal.green else Phase.RED
    b = Phase.RED if a is Phase.GREEN else Phase.GREEN
    return a, b


def check_configuration(net, config: dict) -> None:
    """Require config to cover exactly the signalized intersections of net."""
    expected = set(net.signalized_ids())
    got = set(config)
    if got != expected:
        missing = sorted(expected - got)
        extra = sorted(got - expected)
        parts = []
        if missing:
            parts.append(f"missing {missing}")
        if extra:
            parts.append(f"unexpected {extra}")
        raise ValueError("signal configuration does not match network: " + ", ".join(parts))


def edge_phases(net, config: dict | None, t: float) -> dict[str, Phase]:
    """Phase of every signal-controlled incoming edge at time t.

    Edges not controlled by a signal are absent from the result (treat as
    green). An unsignalized network accepts config None or {}.
    """
    if not net.signalized_ids():
        if config:
            raise ValueError("network has no signalized intersections but a configuration was given")
        return {}
    if config is None:
        raise ValueError("network has signalized intersections; a signal configuration is required")
    check_configuration(net, config)
    phases: dict[str, Phase] = {}
    for iid in net.signalized_ids():
        ix = net.intersections[iid]
        a, b = phase_at(config[iid], t)
        for eid in ix.group_a:
            phases[eid] = a
        for eid in ix.group_b:
            phases[eid] = b
    return phases


def sample_config(net, rng: np.random.Generator) -> dict:
    """Draw a uniform random configuration for every signalized intersection.

    Iterates intersections in sorted-id order and draws red, green, offset in
    that order, so a seeded generator gives a reproducible configuration.
    """
    ids = net.signalized_ids()
    if not ids:
        raise ValueError("network has no signalized intersections")
    config = {}
    for iid in ids:
        red = int(rng.integers(RED_GREEN_MIN, RED_GREEN_MAX + 1))
        green = int(rng.integers(RED_GREEN_MIN, RED_GREEN_MAX + 1))
        offset = int(rng.integers(0, red + green))
        config[iid] = IntersectionSignal(red=red, green=green, offset=offset)
    return config


def encode_values(config: dict, ids) -> np.ndarray:
    """Encode a configuration as one [0, 1] triple (red, green, offset) per id."""
    span = RED_GREEN_MAX - RED_GREEN_MIN
    out = np.empty(3 * len(ids))
    for j, iid in enumerate(ids):
        sig = config[iid]
        out[3 * j] = (sig.red - RED_GREEN_MIN) / span
        out[3 * j + 1] = (sig.green - RED_GREEN_MIN) / span
        out[3 * j + 2] = sig.offset / (sig.cycle - 1)
    return out


def decode_values(vector: np.ndarray, ids) -> dict:
    """Inverse of encode_values, rounding to the integer timing lattice.

    Red and green are decoded first; the offset coordinate is then scaled by
    the decoded cycle, so its admissible range follows the decoded durations.
    Coordinates outside [0, 1] are clamped with a warning.
    """
    vector = np.asarray(vector, dtype=float)
    if vector.shape != (3 * len(ids),):
        raise ValueError(f"expected vector of length {3 * len(ids)}, got shape {vector.shape}")
    if np.any(vector < 0) or np.any(vector > 1):
        warnings.warn("encoded coordinates outside [0, 1]; clamping", stacklevel=2)
        vector = np.clip(vector, 0.0, 1.0)
    span = RED_GREEN_MAX - RED_GREEN_MIN
    config = {}
    for j, iid in enumerate(ids):
        red = int(round(RED_GREEN_MIN + vector[3 * j] * span))
        green = int(round(RED_GREEN_MIN + vector[3 * j + 1] * span))
        red = min(max(red, RED_GREEN_MIN), RED_GREEN_MAX)
        green = min(max(green, RED_GREEN_MIN), RED_GREEN_MAX)
        offset = int(round(vector[3 * j + 2] * (red + green - 1)))
        offset = min(max(offset, 0), red + green - 1)
        config[iid] = IntersectionSignal(red=red, green=green, offset=offset)
    return config


def encode(config: dict, net) -> np.ndarray:
    """Encode over the network's signalized intersections in sorted-id order."""
    check_configuration(net, config)
    return encode_values(config, net.signalized_ids())


def decode(vector: np.ndarray, net) -> dict:
    """Decode a [0, 1] vector over the network's signalized intersections."""
    return decode_values(vector, net.signalized_ids())


def save_config(config: dict, path) -> None:
    doc = {
        iid: {"red": sig.red, "green": sig.green, "offset": sig.offset}
        for iid, sig in sorted(config.items())
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_config(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    config = {}
    for iid, timing in doc.items():
        config[str(iid)] = IntersectionSignal(
            red=int(timing["red"]), green=int(timing["green"]), offset=int(timing["offset"])
        )
    return config
