from __future__ import annotations

from typing import Sequence

from synth.rng import RngSeed, as_seed
from utils.errors import DataError


def random_pairing(species: Sequence[str], seed: RngSeed | int) -> tuple[list[tuple[str, str]], str | None]:
    """
    Uniform random perfect matching of the species codes. With an odd count
    one code is left over and returned separately. The result depends on the
    set of codes and the seed only, not on the input order.
    """
    codes = sorted(set(species))
    if len(codes) < 2:
        raise DataError("nothing to pair: fewer than 2 species")
    rng = as_seed(seed).generator()
    shuffled = [codes[k] for k in rng.permutation(len(codes))]
    pairs = [tuple(sorted(shuffled[k:k + 2])) for k in range(0, len(shuffled) - 1, 2)]
    leftover = shuffled[-1] if len(shuffled) % 2 else None
    return pairs, leftover
