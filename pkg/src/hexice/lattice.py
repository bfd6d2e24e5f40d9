"""The 12-site hexagonal proton lattice.

Sites are numbered 1..12 around the ring.  Sites ``2j-1`` and ``2j`` share
edge ``j`` (an H-bond); sites ``2j`` and ``2j+1`` (mod 12) sit next to the
same vertex.  A basis state is a 12-bit integer whose printed binary form is
the ket ``|s1 s2 ... s12>``: site 1 is the most significant bit.
"""

from __future__ import annotations

import enum
import itertools
from functools import lru_cache

import numpy as np

N_SITES = 12
N_EDGES = 6
DIM = 1 << N_SITES

#: Edge pairs (2j-1, 2j), 1-based.
EDGES: tuple[tuple[int, int], ...] = tuple((2 * j - 1, 2 * j) for j in range(1, N_EDGES + 1))
#: Vertex pairs (2j, 2j+1 mod 12), 1-based; the last one wraps to (12, 1).
VORTICES: tuple[tuple[int, int], ...] = tuple(
    (2 * j, 2 * j % N_SITES + 1) for j in range(1, N_EDGES + 1)
)

ICE_LABEL: tuple[int, ...] = (1,) * N_EDGES
STATE_B = 0b010101010101
STATE_C = 0b101010101010
ICE_RULE_STATES: tuple[int, int] = (STATE_B, STATE_C)


class DefectClass(enum.Enum):
    ICE_RULE = "IceRule"
    IONIC = "Ionic"
    BJERRUM = "Bjerrum"

    def __str__(self) -> str:
        return self.value


def check_site(site: int) -> int:
    if not isinstance(site, (int, np.integer)) or not 1 <= site <= N_SITES:
        raise ValueError(f"site index must be an integer in 1..{N_SITES}, got {site!r}")
    return int(site)


def check_state(state: int) -> int:
    if not isinstance(state, (int, np.integer)) or not 0 <= state < DIM:
        raise ValueError(f"basis state must be an integer in [0, {DIM}), got {state!r}")
    return int(state)


def site_mask(site: int) -> int:
    return 1 << (N_SITES - check_site(site))


def occupation(state: int, site: int) -> int:
    return (state >> (N_SITES - site)) & 1


def occupations(state: int) -> list[int]:
    """Occupation numbers ``[n_1, ..., n_12]``."""
    return [(state >> (N_SITES - k)) & 1 for k in range(1, N_SITES + 1)]


def proton_count(state: int) -> int:
    return bin(check_state(state)).count("1")


def edge_partner(site: int) -> int:
    site = check_site(site)
    return site + 1 if site % 2 else site - 1


def vortex_partner(site: int) -> int:
    site = check_site(site)
    return site % N_SITES + 1 if site % 2 == 0 else (site - 2) % N_SITES + 1


def ket(state: int) -> str:
    return "|" + format(check_state(state), f"0{N_SITES}b") + ">"


def parse_ket(text: str) -> int:
    """Inverse of :func:`ket`; accepts ``"|0101...>"`` or a bare bit string."""
    bits = text.strip().strip("|>⟩")
    if len(bits) != N_SITES or set(bits) - {"0", "1"}:
        raise ValueError(f"not a {N_SITES}-site occupation ket: {text!r}")
    return int(bits, 2)


def sector_of(state: int) -> tuple[int, ...]:
    """Per-edge proton occupancies ``(n_1+n_2, n_3+n_4, ..., n_11+n_12)``."""
    n = occupations(check_state(state))
    return tuple(n[2 * e] + n[2 * e + 1] for e in range(N_EDGES))


def classify(state: int) -> DefectClass:
    label = sector_of(state)
    if any(k == 2 for k in label):
        return DefectClass.BJERRUM
    if state in ICE_RULE_STATES:
        return DefectClass.ICE_RULE
    if all(k == 1 for k in label):
        return DefectClass.IONIC
    # empty edges: everything outside the one-proton-per-edge sector is Bjerrum
    return DefectClass.BJERRUM


def check_label(label) -> tuple[int, ...]:
    label = tuple(int(k) for k in label)
    if len(label) != N_EDGES or any(k not in (0, 1, 2) for k in label):
        raise ValueError(f"sector label must be {N_EDGES} entries in {{0,1,2}}, got {label!r}")
    return label


@lru_cache(maxsize=None)
def _sector_table() -> dict[tuple[int, ...], tuple[int, ...]]:
    table: dict[tuple[int, ...], list[int]] = {}
    for s in range(DIM):
        table.setdefault(sector_of(s), []).append(s)
    return {k: tuple(v) for k, v in table.items()}


def enumerate_sector(label) -> tuple[int, ...]:
    """All basis states with the given edge occupancies, ascending."""
    return _sector_table()[check_label(label)]


def all_sector_labels() -> list[tuple[int, ...]]:
    """The 729 sector labels in lexicographic order."""
    return [tuple(p) for p in itertools.product((0, 1, 2), repeat=N_EDGES)]


def occupation_array(states) -> np.ndarray:
    """``(len(states), 12)`` integer array of occupations, column k = site k+1."""
    states = np.asarray(states, dtype=np.int64)
    shifts = N_SITES - np.arange(1, N_SITES + 1)
    return (states[:, None] >> shifts[None, :]) & 1
