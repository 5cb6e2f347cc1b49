"""Community detection and N-body layout for large undirected graphs."""

from .bhtree import BHTree, build_tree, coulomb_force, coulomb_forces, direct_coulomb, direct_coulomb_all
from .community import (
    Dendrogram,
    Partition,
    greedy_modularity,
    label_agreement,
    modularity,
    refine_recursive,
)
from .graph import Graph, ParseError, largest_connected_component, parse_edge_list, read_edge_list
from .layout import (
    BodyState,
    DivergenceError,
    SimParams,
    energies,
    friction_force,
    pair_spacing,
    random_init,
    relax,
    spring_force,
    step,
)
from .mds import bfs_distances, landmark_mds, maxmin_landmarks, mds_init

__all__ = [
    "BHTree", "build_tree", "coulomb_force", "coulomb_forces", "direct_coulomb",
    "direct_coulomb_all", "Dendrogram", "Partition", "greedy_modularity",
    "label_agreement", "modularity", "refine_recursive", "Graph", "ParseError",
    "largest_connected_component", "parse_edge_list", "read_edge_list", "BodyState",
    "DivergenceError", "SimParams", "energies", "friction_force", "pair_spacing",
    "random_init", "relax", "spring_force", "step", "bfs_distances", "landmark_mds",
    "maxmin_landmarks", "mds_init",
]
