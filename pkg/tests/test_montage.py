"""10-20 region table, derivation parsing, homologous pairs."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from eegdesk.errors import UnknownElectrodeError
from eegdesk.montage import (
    REGION_TABLE,
    SYMMETRY_PAIRS,
    describe_label,
    mirror_label,
    normalize_label,
    pairs_in,
    region_of,
)

FULL_1020 = [
    "FP1", "FP2", "F3", "F4", "F7", "F8", "C3", "C4", "T3", "T4",
    "P3", "P4", "T5", "T6", "O1", "O2", "FZ", "CZ", "PZ", "A1", "A2",
]


class TestRegionOf:
    def test_fp1_f3_is_left_frontal(self):
        site = region_of("FP1-F3")
        assert (site.hemisphere, site.region) == ("left", "frontal")

    def test_cz_is_midline_central(self):
        site = region_of("CZ")
        assert (site.hemisphere, site.region) == ("midline", "central")

    def test_f4_c4_is_right(self):
        site = region_of("F4-C4")
        assert site.hemisphere == "right"
        assert site.region == "frontal"
        assert describe_label("F4-C4") == "right fronto-central"

    def test_cross_hemisphere_derivation_is_midline(self):
        assert region_of("C3-C4").hemisphere == "midline"

    def test_total_on_standard_set(self):
        for name in FULL_1020:
            region_of(name)  # must not raise

    def test_modern_temporal_aliases(self):
        assert region_of("T7") == region_of("T3")
        assert region_of("P8") == region_of("T6")

    def test_unknown_electrode(self):
        with pytest.raises(UnknownElectrodeError):
            region_of("XX9")

    def test_table_covers_standard_set(self):
        assert set(FULL_1020) <= set(REGION_TABLE)

    def test_pairs_map_to_opposite_hemispheres_same_region(self):
        for left, right in SYMMETRY_PAIRS:
            l, r = REGION_TABLE[left], REGION_TABLE[right]
            assert (l.hemisphere, r.hemisphere) == ("left", "right")
            assert l.region == r.region


class TestNormalize:
    def test_strips_prefix_and_reference_suffix(self):
        assert normalize_label("EEG FP1-REF") == "FP1"
        assert normalize_label("eeg c3-le") == "C3"
        assert normalize_label(" Fp1-F3 ") == "FP1-F3"


class TestPairs:
    def test_c3_c4_derivations_pair(self):
        assert pairs_in(["C3-P3", "C4-P4"]) == [("C3-P3", "C4-P4")]

    def test_left_only_montage_empty(self):
        assert pairs_in(["FP1-F3", "F3-C3", "C3-P3"]) == []

    def test_full_referential_set_has_eight_pairs(self):
        pairs = pairs_in(FULL_1020)
        assert len(pairs) == 8
        assert pairs[0] == ("FP1", "FP2")
        assert pairs[-1] == ("O1", "O2")

    def test_empty_input_allowed(self):
        assert pairs_in([]) == []

    def test_mismatched_suffix_does_not_pair(self):
        assert pairs_in(["C3-P3", "C4-O2"]) == []

    def test_mirror_label(self):
        assert mirror_label("C3-P3") == "C4-P4"
        assert mirror_label("T7") == "T8"
        assert mirror_label("CZ-PZ") is None

    @given(st.sets(st.sampled_from(FULL_1020)))
    def test_monotone_under_channel_subsets(self, subset):
        sub = sorted(subset)
        assert set(pairs_in(sub)) <= set(pairs_in(FULL_1020))
