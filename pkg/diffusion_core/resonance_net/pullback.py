import copy
import logging
from dataclasses import replace

import numpy as np

from diffusion_core.errors.exceptions import InversionError
from diffusion_core.hamiltonian.frequency import inverse_frequency
from diffusion_core.resonance_net.tree import POLYLINE_NODES

logger = logging.getLogger(__name__)


def resonance_graph(k, actions):
    """
    Slow/fast coordinates along the curve: J^s = I·k̂ and J^f = I·k̂⊥ with
    k̂ = (k1, k2)/|(k1, k2)|, so that the resonance reads J^s = J^s_*(J^f).
    """
    planar = np.asarray(k.k[:2], dtype=float)
    planar /= np.linalg.norm(planar)
    normal = np.array([-planar[1], planar[0]])
    return {"fast": (actions @ normal).tolist(), "slow": (actions @ planar).tolist()}


def _invert(H, frequencies, segment_id):
    try:
        return inverse_frequency(H, frequencies)
    except InversionError as exc:
        exc.witness["segment"] = segment_id
        raise


def pullback_to_actions(tree, H, nodes=POLYLINE_NODES):
    """
    Map every accepted segment and zone core through Ω⁻¹.

    Returns a copy of the tree whose segments carry ``action_polyline``
    (``nodes`` points), ``action_endpoints`` and the slow/fast ``graph``.

    :raises InversionError: with the segment id added to the witness
    """
    result = copy.copy(tree)
    result.generations = []
    for generation in tree.generations:
        mapped = []
        for segment in generation:
            actions = _invert(H, segment.polyline(nodes), segment.id)
            mapped.append(
                segment.replace(
                    action_polyline=actions,
                    action_endpoints=actions[[0, -1]],
                    graph=resonance_graph(segment.k, actions),
                )
            )
        result.generations.append(mapped)

    result.zones = {}
    for segment_id, partition in tree.zones.items():
        centers = np.array([core.center for core in partition.cores]).reshape(-1, 2)
        action_centers = _invert(H, centers, segment_id) if len(centers) else centers
        result.zones[segment_id] = replace(partition, action_centers=action_centers)
    result.rebuild_graph()
    logger.info("pulled back %d segments to action space", len(result.segments()))
    return result
