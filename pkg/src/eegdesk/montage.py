"""Static 10-20 spatial knowledge: electrode regions, homologous pairs,
derivation parsing.

The electrode table ships as ``data/regions.txt`` so it can be audited and
amended without touching code. Modern temporal names (T7/T8/P7/P8) are
aliases of the classic T3/T4/T5/T6.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from .errors import UnknownElectrodeError

# Modern 10-20 names resolve to the classic entries in the table.
ALIASES = {"T7": "T3", "T8": "T4", "P7": "T5", "P8": "T6"}

# Canonical left-right homologous pairs, in clinical reading order.
SYMMETRY_PAIRS: tuple[tuple[str, str], ...] = (
    ("FP1", "FP2"),
    ("F3", "F4"),
    ("F7", "F8"),
    ("C3", "C4"),
    ("T3", "T4"),
    ("P3", "P4"),
    ("T5", "T6"),
    ("O1", "O2"),
)

# Adjective stems for derivation descriptions ("fronto-central" etc.).
_REGION_STEM = {
    "frontal": "fronto",
    "temporal": "temporo",
    "central": "centro",
    "parietal": "parieto",
    "occipital": "occipito",
}

_LABEL_NOISE = re.compile(r"^EEG\s+")
_REF_SUFFIX = re.compile(r"-(REF|LE)$")


@dataclass(frozen=True)
class ElectrodeSite:
    hemisphere: str  # left | right | midline
    region: str  # frontal | temporal | central | parietal | occipital


def _load_region_table() -> dict[str, ElectrodeSite]:
    text = resources.files("eegdesk.data").joinpath("regions.txt").read_text("utf-8")
    table: dict[str, ElectrodeSite] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, hemisphere, region = line.split()
        if hemisphere not in ("left", "right", "midline"):
            raise ValueError(f"bad hemisphere in region table: {line!r}")
        if region not in _REGION_STEM:
            raise ValueError(f"bad region in region table: {line!r}")
        table[name.upper()] = ElectrodeSite(hemisphere, region)
    return table


REGION_TABLE = _load_region_table()

# left<->right mirror map, including the earlobe references and aliases.
_MIRROR: dict[str, str] = {}
for _l, _r in SYMMETRY_PAIRS + (("A1", "A2"),):
    _MIRROR[_l] = _r
    _MIRROR[_r] = _l
for _new, _old in ALIASES.items():
    _MIRROR[_new] = {v: k for k, v in ALIASES.items()}.get(_MIRROR[_old], _MIRROR[_old])


def normalize_label(label: str) -> str:
    """Canonicalize a channel label: uppercase, drop the "EEG " prefix and
    "-REF"/"-LE" reference suffixes TUH-style files carry."""
    label = label.strip().upper()
    label = _LABEL_NOISE.sub("", label)
    label = _REF_SUFFIX.sub("", label)
    return label


def _canonical_electrode(name: str) -> str:
    name = name.strip().upper()
    return ALIASES.get(name, name)


def electrode_site(name: str) -> ElectrodeSite:
    """Region/hemisphere of a single electrode. Raises UnknownElectrodeError."""
    site = REGION_TABLE.get(_canonical_electrode(name))
    if site is None:
        raise UnknownElectrodeError(f"electrode not in 10-20 table: {name!r}")
    return site


def split_derivation(label: str) -> list[str]:
    """Component electrodes of a (possibly bipolar) normalized label."""
    return [part for part in normalize_label(label).split("-") if part]


def region_of(label: str) -> ElectrodeSite:
    """Site of a channel label. For a derivation "A-B" the region is A's;
    the hemisphere is midline when the two electrodes straddle hemispheres.
    """
    parts = split_derivation(label)
    if not parts:
        raise UnknownElectrodeError(f"empty channel label: {label!r}")
    sites = [electrode_site(p) for p in parts]
    hemisphere = sites[0].hemisphere
    if any(s.hemisphere not in (hemisphere, "midline") for s in sites[1:]):
        hemisphere = "midline"
    return ElectrodeSite(hemisphere=hemisphere, region=sites[0].region)


def describe_label(label: str) -> str:
    """Clinical phrasing for a channel, e.g. "F4-C4" -> "right fronto-central"."""
    parts = split_derivation(label)
    site = region_of(label)
    regions: list[str] = []
    for p in parts:
        r = electrode_site(p).region
        if r not in regions:
            regions.append(r)
    if len(regions) == 1:
        region_text = regions[0]
    else:
        stems = [_REGION_STEM[r] for r in regions[:-1]]
        region_text = "-".join(stems + [regions[-1]])
    return f"{site.hemisphere} {region_text}"


def mirror_label(label: str) -> str | None:
    """Homologous opposite-hemisphere label, mirroring every electrode token.

    Returns None when any lateral electrode has no homolog (midline tokens
    map to themselves). Non-electrode tokens are preserved as-is.
    """
    parts = normalize_label(label).split("-")
    mirrored: list[str] = []
    changed = False
    for part in parts:
        canon = part.strip().upper()
        if canon in _MIRROR:
            # Preserve the caller's naming convention (T7 mirrors to T8, not T4).
            target = _MIRROR[ALIASES.get(canon, canon)]
            if canon in ALIASES:
                target = {v: k for k, v in ALIASES.items()}.get(target, target)
            mirrored.append(target)
            changed = True
        elif canon in REGION_TABLE and REGION_TABLE[canon].hemisphere == "midline":
            mirrored.append(canon)
        else:
            mirrored.append(canon)
    if not changed:
        return None
    return "-".join(mirrored)


def pairs_in(channels: list[str]) -> list[tuple[str, str]]:
    """Homologous (left_label, right_label) pairs present among ``channels``.

    A pair is formed when mirroring every electrode of a left-hemisphere
    label yields another label in the set. Order is stable: canonical pair
    order of the lead electrode, FP1/FP2 first, O1/O2 last.
    """
    normalized = {normalize_label(c): c for c in channels}
    lead_order = {pair[0]: i for i, pair in enumerate(SYMMETRY_PAIRS)}
    found: list[tuple[int, str, str]] = []
    seen: set[tuple[str, str]] = set()
    for norm, original in normalized.items():
        parts = norm.split("-")
        lead = _canonical_electrode(parts[0]) if parts and parts[0] else ""
        if lead not in lead_order:
            continue  # not a left-hemisphere lead electrode
        mirrored = mirror_label(norm)
        if mirrored is None or mirrored not in normalized:
            continue
        key = (norm, mirrored)
        if key in seen:
            continue
        seen.add(key)
        found.append((lead_order[lead], original, normalized[mirrored]))
    found.sort(key=lambda item: (item[0], item[1]))
    return [(left, right) for _, left, right in found]
