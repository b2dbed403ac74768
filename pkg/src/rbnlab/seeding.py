"""Named seed derivation so grid cells and runs get independent streams."""

from __future__ import annotations

import hashlib


def derive_seed(master: int, *parts) -> int:
    """A 63-bit seed determined by ``master`` and the labels in ``parts``.

    Parts are rendered with ``repr``, so ``2`` and ``2.0`` differ; pass
    normalised values.
    """
    text = "|".join([str(int(master))] + [repr(p) for p in parts])
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1
