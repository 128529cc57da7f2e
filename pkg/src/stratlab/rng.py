"""Reproducible, splittable random streams.

Every random draw in this package flows through an :class:`RngStream`, which
names a stream by ``(master_seed, path)``.  Paths are tuples of labels (trial
indices, purpose tags); streams with distinct paths are statistically
independent, and the same identity always replays the identical draw
sequence no matter what other streams were consumed in between.  This is
what makes experiment results a pure function of their configuration,
independent of execution order or worker count.

Backed by numpy's counter-based Philox generator keyed through
``SeedSequence``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Union

import numpy as np

Label = Union[int, str]

_MASK64 = (1 << 64) - 1


def _encode_label(label: Label) -> int:
    """Map a label to a uint64 word for SeedSequence entropy."""
    if isinstance(label, bool):
        return int(label)
    if isinstance(label, int):
        return label & _MASK64
    if isinstance(label, str):
        digest = hashlib.sha256(label.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big")
    raise TypeError(f"stream labels must be int or str, got {type(label).__name__}")


@dataclass(frozen=True)
class RngStream:
    """A named, replayable source of randomness.

    ``child(*labels)`` derives a sub-stream; ``generator()`` opens a fresh
    numpy Generator positioned at the stream's origin (two calls replay the
    same sequence).
    """

    master_seed: int
    path: tuple[Label, ...] = ()

    def child(self, *labels: Label) -> "RngStream":
        return RngStream(self.master_seed, self.path + labels)

    def generator(self) -> np.random.Generator:
        entropy = [_encode_label(self.master_seed)]
        entropy.extend(_encode_label(label) for label in self.path)
        # SeedSequence absorbs trailing zero entropy words; a nonzero length
        # sentinel keeps paths like ("a",) and ("a", 0) distinct.
        entropy.append(len(self.path) + 1)
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
