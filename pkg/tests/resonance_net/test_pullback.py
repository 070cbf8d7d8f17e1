from __future__ import annotations

import numpy as np

from diffusion_core.hamiltonian.fourier import FourierHamiltonian, IntegrablePart
from diffusion_core.hamiltonian.frequency import frequency_map
from diffusion_core.resonance_net.pullback import pullback_to_actions
from diffusion_core.resonance_net.zones import partition_tree
from diffusion_core.serializers.tree_serializer import load_tree, tree_document


def integrable(h0):
    return FourierHamiltonian.from_cosines(h0, [], epsilon=0.0)


def test_free_rotor_pullback_is_identity(two_generation_tree):
    pulled = pullback_to_actions(two_generation_tree, integrable(IntegrablePart.free()))
    for segment in pulled.segments():
        np.testing.assert_allclose(segment.action_polyline, segment.polyline(), atol=1e-12)
        assert len(segment.action_polyline) == 64


def test_diagonal_pullback_halves_first_frequency(two_generation_tree):
    pulled = pullback_to_actions(two_generation_tree, integrable(IntegrablePart.quadratic(np.diag([2.0, 1.0]))))
    for segment in pulled.segments():
        expected = segment.endpoints * np.array([0.5, 1.0])
        np.testing.assert_allclose(segment.action_endpoints, expected, atol=1e-12)


def test_pullback_round_trip(two_generation_tree, quartic_h0):
    H = integrable(quartic_h0)
    pulled = pullback_to_actions(two_generation_tree, H)
    for segment in pulled.segments():
        np.testing.assert_allclose(frequency_map(H, segment.action_endpoints), segment.endpoints, atol=1e-10)
        assert len(segment.graph["fast"]) == len(segment.graph["slow"]) == 64


def test_zone_cores_are_pulled_back(two_generation_tree):
    tree = load_tree(tree_document(two_generation_tree))
    partition_tree(tree, K_cap=10)
    pulled = pullback_to_actions(tree, integrable(IntegrablePart.quadratic(np.diag([2.0, 1.0]))))
    assert set(pulled.zones) == {segment.id for segment in tree.segments() if segment.generation > 0}
    for segment_id, partition in pulled.zones.items():
        centers = np.array([core.center for core in partition.cores]).reshape(-1, 2)
        np.testing.assert_allclose(partition.action_centers, centers * np.array([0.5, 1.0]), atol=1e-12)
