"""Initial-condition sampling from the Born density on the slab 0 < z < L.

The untruncated density factorizes: X0 and Y0 are centered Gaussians with
variance 1/(2 omega), and Z0 has density (4/sqrt(pi)) z^2 exp(-z^2), i.e.
Z0 = sqrt(G) with G ~ Gamma(3/2). Candidates with z0 >= L are rejected,
which truncates the axial marginal to the slab the detector can see.

Streams are counter-based (Philox keyed by seed and round index), so a
batch is a pure function of (n, seed): re-running, resuming, or splitting
work across workers reproduces the identical sample sequence.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import ModelParams

__all__ = [
    "SampleBatch",
    "sample_initial",
    "empirical_rejection_rate",
    "write_samples_csv",
]

_ROUND_SIZE = 8192


@dataclass(frozen=True)
class SampleBatch:
    """Accepted initial positions plus rejection bookkeeping."""

    positions: np.ndarray   # (requested, 3)
    seed: int
    requested: int
    rejected: int           # discards among candidates up to the n-th acceptance


def _round_rng(seed: int, round_index: int) -> np.random.Generator:
    # one Philox key per (seed, round): rounds are independent substreams
    return np.random.Generator(np.random.Philox(key=(seed << 64) | round_index))


def _propose(seed: int, round_index: int, omega: float) -> np.ndarray:
    rng = _round_rng(seed, round_index)
    # Gamma(3/2) = Exp(1) + N(0,1)^2 / 2, then Z0 = sqrt(G)
    g = rng.standard_exponential(_ROUND_SIZE)
    g += 0.5 * rng.standard_normal(_ROUND_SIZE) ** 2
    z = np.sqrt(g)
    sigma = 1.0 / np.sqrt(2.0 * omega)
    xy = sigma * rng.standard_normal((_ROUND_SIZE, 2))
    return np.column_stack([xy, z])


def sample_initial(n: int, seed: int, p: ModelParams) -> SampleBatch:
    """Draw n initial positions from the Born density restricted to z0 < L.

    Deterministic in (n, seed): the first m accepted points of a batch of
    size n equal the batch of size m for any m <= n.
    """
    if n <= 0:
        raise DomainError("sample_initial: n must be positive")
    if seed < 0:
        raise DomainError("sample_initial: seed must be nonnegative")
    out = np.empty((n, 3))
    got = 0
    n_rejected = 0
    round_index = 0
    while got < n:
        cand = _propose(seed, round_index, p.omega)
        round_index += 1
        accept = cand[:, 2] < p.detector_L
        acc_idx = np.flatnonzero(accept)
        take = min(n - got, acc_idx.size)
        if take:
            sel = acc_idx[:take]
            out[got : got + take] = cand[sel]
            got += take
        if got == n:
            # count only discards up to and including the n-th acceptance
            n_rejected += int(np.sum(~accept[: sel[-1] + 1]))
        else:
            n_rejected += int(np.sum(~accept))
    return SampleBatch(out, seed, n, n_rejected)


def empirical_rejection_rate(batch: SampleBatch) -> float:
    """Fraction of candidates discarded; converges to 1 - lambda_0(L)."""
    total = batch.requested + batch.rejected
    if total == 0:
        raise DomainError("empirical_rejection_rate: empty batch")
    return batch.rejected / total


def write_samples_csv(batch: SampleBatch, path) -> None:
    """Write accepted positions as CSV with a header row."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x0", "y0", "z0"])
        for row in batch.positions:
            w.writerow([repr(float(c)) for c in row])
