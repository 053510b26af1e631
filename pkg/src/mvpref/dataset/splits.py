"""Deterministic 8:1:1 train/val/test splits over comparison pairs.

The split unit is the prompt id (one asset list per prompt), never the pair:
two pairs from the same list must land in the same split or near-duplicate
assets would leak across splits.
"""

import logging
from typing import Sequence

from ..errors import ValidationError
from ..rng import make_generator
from .types import ComparisonPair

logger = logging.getLogger(__name__)


def split_dataset(pairs: Sequence[ComparisonPair], seed: int):
    """Partition pairs into (train, val, test) by prompt id, 8:1:1.

    val and test each get floor(n/10) of the n distinct prompt ids; train
    takes the rest.  Deterministic under seed.  Fewer than 10 distinct ids
    degenerates (empty val/test) with a warning.
    """
    if not pairs:
        raise ValidationError("cannot split an empty pair list")
    list_ids = sorted({p.prompt_id for p in pairs})
    n = len(list_ids)
    if n < 10:
        logger.warning(
            "only %d distinct asset lists; 8:1:1 split is degenerate", n
        )
    rng = make_generator("split", seed)
    order = [list_ids[i] for i in rng.permutation(n)]
    n_val = n // 10
    n_test = n // 10
    val_ids = set(order[:n_val])
    test_ids = set(order[n_val:n_val + n_test])

    train, val, test = [], [], []
    for pair in pairs:
        if pair.prompt_id in val_ids:
            val.append(pair)
        elif pair.prompt_id in test_ids:
            test.append(pair)
        else:
            train.append(pair)
    return train, val, test
