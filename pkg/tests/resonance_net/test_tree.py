from __future__ import annotations

import json
import math

import numpy as np
import pytest

from diffusion_core.diophantine.params import ResonanceVector
from diffusion_core.errors.exceptions import SelectionError
from diffusion_core.hamiltonian.scales import PaperConstants, ScaleLadder
from diffusion_core.resonance_net import tree as tree_module
from diffusion_core.resonance_net.tree import (
    ResonanceTree,
    build_tree,
    generation_zero,
    intersection_graph,
    line_intersection,
)
from diffusion_core.resonance_net.verification import accumulation_profile, isolation_violations, verify_tree
from diffusion_core.serializers.tree_serializer import load_tree, tree_document

from tests.helpers import NET_DOMAIN


def test_generation_zero_matches_coprime_enumeration():
    domain = ((0.2, 0.7), (0.1, 0.3))
    lines = generation_zero(domain, 10, 0.01)
    expected = 0
    for lo, hi in domain:
        expected += sum(
            1 for q in range(1, 11) for p in range(-10, 11) if math.gcd(p, q) == 1 and lo <= p / q <= hi
        )
    assert len(lines) == expected
    assert all(math.gcd(*line.k.k) == 1 and line.k.norm <= 10 for line in lines)


def test_empty_domain_gives_empty_tree(ladder, net_params):
    tree = build_tree(((0.3, 0.3), (0.3, 0.5)), ladder, net_params, 1, PaperConstants(), seed=1)
    assert tree.is_empty()


def test_tree_has_every_generation(two_generation_tree):
    assert [len(generation) > 0 for generation in two_generation_tree.generations] == [True, True, True]


def test_each_segment_meets_its_anchor_ball(two_generation_tree):
    for segment in two_generation_tree.segments():
        if segment.anchor is not None:
            assert segment.distance_to(segment.anchor) <= segment.rho


def test_tree_is_connected(two_generation_tree):
    assert two_generation_tree.is_connected()


def test_items_one_to_six_pass(two_generation_tree):
    assert two_generation_tree.rejected == []
    report = verify_tree(two_generation_tree)
    assert report.rejections() == []
    for item in ("item1", "item2", "item3", "item4", "item5", "item6"):
        assert report.passed(item), report.failures(item)
    assert report.summary["item6"]["checked"] > 0
    assert report.passed("item7") and report.passed("item8")
    assert report.constants["c1"] >= 0.0 and report.constants["c2"] >= 0.0
    assert not report.adjacency_violations


def test_moved_segment_fails_item_six(two_generation_tree):
    tree = load_tree(tree_document(two_generation_tree))
    segment = tree.generations[2][0]
    parent = tree.segment(segment.parent)
    shift = np.array([10 * parent.rho, 0.0])
    moved = segment.replace(endpoints=segment.endpoints + shift, anchor=segment.anchor + shift)
    tree.replace_segment(moved)
    report = verify_tree(tree)
    assert any(entry["segment"] == moved.id for entry in report.failures("item6"))


def test_accumulation_distances_decrease(two_generation_tree):
    profile = accumulation_profile(two_generation_tree)
    assert len(profile.distances) == 3
    assert profile.decreasing


def test_tree_is_byte_identical_for_same_inputs(two_generation_tree, ladder, net_params):
    again = build_tree(NET_DOMAIN, ladder, net_params, 2, PaperConstants(), seed=7)
    first = json.dumps(tree_document(two_generation_tree), sort_keys=True)
    second = json.dumps(tree_document(again), sort_keys=True)
    assert first == second


def test_serialized_tree_rebuilds_graph(two_generation_tree):
    restored = load_tree(tree_document(two_generation_tree))
    assert restored.graph.number_of_edges() == two_generation_tree.graph.number_of_edges()
    assert [s.k.k for s in restored.segments()] == [s.k.k for s in two_generation_tree.segments()]


def test_crossings_are_isolated_from_coarser_lines():
    lines = generation_zero(((0.3, 0.5), (0.3, 0.5)), 6, 0.001)
    assert line_intersection(lines[0].k, lines[-1].k) is not None
    tree = ResonanceTree(domain=((0.3, 0.5), (0.3, 0.5)), ladder=ScaleLadder(6, 0.2, 1), params=None, constants=None)
    tree.generations = [lines]
    tree.graph = intersection_graph(lines)
    assert tree.graph.number_of_edges() > 0
    assert isolation_violations(tree) == []


def _short_vector(monkeypatch):
    # every child gets |k| = 1, far below R/4
    monkeypatch.setattr(tree_module, "select_resonance_vector", lambda omega, R, k_prev, params: ResonanceVector((1, 1, -1)))


def test_strict_mode_raises_with_context(monkeypatch, ladder, net_params):
    _short_vector(monkeypatch)
    with pytest.raises(SelectionError) as info:
        build_tree(NET_DOMAIN, ladder, net_params, 1, PaperConstants(), seed=7, strict=True)
    assert info.value.witness["segment"] == "g1-0"
    assert info.value.witness["clause"] == "item1"


def test_rejected_children_are_item_failures(monkeypatch, ladder, net_params):
    _short_vector(monkeypatch)
    tree = build_tree(NET_DOMAIN, ladder, net_params, 1, PaperConstants(), seed=7)
    assert tree.generations[1] == []
    assert tree.rejected and all(segment.clause == "item1" for segment in tree.rejected)
    report = verify_tree(tree)
    assert not report.passed("item1")
    assert len(report.rejections()) == len(tree.rejected)
    assert report.summary["item1"]["rejected"] == len(tree.rejected)
    assert not report.passed()
