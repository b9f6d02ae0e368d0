"""Numerical core: spaces, cube trees, energies, net content and limsup experiments."""
from lab.errors import LabError
from lab.spaces import (
    Ball, Box, CantorSpace, ProductSpace, SpaceDescriptor, SymbolicSpace, TorusSpace,
    parse_space,
)
from lab.cubes import CubeId, CubeSet, CubeTree, build_tree

__all__ = [
    'Ball', 'Box', 'CantorSpace', 'CubeId', 'CubeSet', 'CubeTree', 'LabError', 'ProductSpace',
    'SpaceDescriptor', 'SymbolicSpace', 'TorusSpace', 'build_tree', 'parse_space',
]
