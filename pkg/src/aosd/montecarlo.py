"""Shot-level simulation of the discrimination protocol.

Random numbers come from numpy's Philox4x32-10 counter-based generator.  The
shot stream is cut into fixed-size blocks and block ``b`` is driven by
``SeedSequence(seed, spawn_key=(b,))``, so the merged report does not depend
on how blocks are shared among workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ensemble import Ensemble
from .jointstate import EtaBasis, chi_states
from .protocol import ProtocolParams

RNG_ALGORITHM = "numpy Philox4x32-10, SeedSequence spawn_key=(block,)"
BLOCK_SIZE = 1 << 16


@dataclass(frozen=True, eq=False)
class ShotReport:
    shots: int
    successes: int
    failures: int
    confusion: np.ndarray  # [prepared, identified], success branch only
    seed: int

    CSV_HEADER = "shots,successes,failures," + ",".join(f"c{i}{j}" for i in range(3) for j in range(3)) + ",seed"

    def __eq__(self, other):
        if not isinstance(other, ShotReport):
            return NotImplemented
        return (
            (self.shots, self.successes, self.failures, self.seed)
            == (other.shots, other.successes, other.failures, other.seed)
            and np.array_equal(self.confusion, other.confusion)
        )

    @property
    def success_rate(self) -> float:
        return self.successes / self.shots

    @property
    def misidentified(self) -> int:
        return int(self.confusion.sum() - np.trace(self.confusion))

    def csv_row(self) -> str:
        cells = [self.shots, self.successes, self.failures, *self.confusion.ravel().tolist(), self.seed]
        return ",".join(str(int(c)) for c in cells)


def simulate(
    ensemble: Ensemble,
    params: ProtocolParams,
    basis: Optional[EtaBasis] = None,
    shots: int = 100_000,
    seed: Optional[int] = None,
    workers: int = 1,
    full_born: bool = False,
) -> ShotReport:
    """Prepare, apply the joint transformation, measure the ancilla, read the flag.

    Parameters
    ----------
    full_born : bool
        Sample all six system-ancilla outcomes from |chi_i|^2 instead of the
        ancilla outcome followed by the exact conditional system readout.
    """
    if shots < 1:
        raise ValueError(f"shots must be at least 1, got {shots}")
    if workers < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (1 << 63))
    basis = basis or EtaBasis.computational()
    chis = chi_states(params, ensemble, basis)
    born = np.abs(chis) ** 2  # [prepared, 2*s + a]
    born /= born.sum(axis=1, keepdims=True)
    p = ensemble.p

    n_blocks = math.ceil(shots / BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, shots - b * BLOCK_SIZE) for b in range(n_blocks)]
    chunks = np.array_split(np.arange(n_blocks), min(workers, n_blocks))

    def run(blocks):
        total = np.zeros((3, 3), dtype=np.int64)
        fails = 0
        for b in blocks:
            f, conf = _block(int(b), sizes[b], seed, p, born, full_born)
            fails += f
            total += conf
        return fails, total

    if workers == 1:
        results = [run(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, chunks))
    failures = sum(r[0] for r in results)
    confusion = sum((r[1] for r in results), np.zeros((3, 3), dtype=np.int64))
    return ShotReport(
        shots=shots, successes=shots - failures, failures=failures, confusion=confusion, seed=seed
    )


def _block(index, size, seed, p, born, full_born):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))
    prepared = rng.choice(3, size=size, p=p)
    probs = born[prepared]  # (size, 6), columns m = 2*s + a
    u = rng.random(size)
    if full_born:
        m = np.minimum((probs.cumsum(axis=1) < u[:, None]).sum(axis=1), 5)
        success = m % 2 == 0
        identified = m // 2
    else:
        p0 = probs[:, 0::2].sum(axis=1)
        success = u < p0
        # conditional readout of the system given ancilla |0>
        cond = probs[:, 0::2] / np.where(p0 > 0, p0, 1.0)[:, None]
        v = rng.random(size)
        identified = np.minimum((cond.cumsum(axis=1) < v[:, None]).sum(axis=1), 2)
    confusion = np.zeros((3, 3), dtype=np.int64)
    np.add.at(confusion, (prepared[success], identified[success]), 1)
    return int(size - success.sum()), confusion
