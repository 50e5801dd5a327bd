"""
World Module

Procedural synthetic indoor environments: the ground-truth graph, what the
agent observes, expert paths and the instructions describing them.
"""

from hybridnav.world.models import (
    WorldNode,
    WorldGraph,
    NeighborStub,
    Observation,
    Instruction,
    INSTRUCTION_CATEGORIES,
    check_world_invariants,
)
from hybridnav.world.generator import generate_world, world_rng
from hybridnav.world.observation import observe
from hybridnav.world.instructions import Vocabulary, generate_instruction
from hybridnav.world.io import load_world, save_world, world_from_text, world_to_dict

__all__ = [
    'WorldNode',
    'WorldGraph',
    'NeighborStub',
    'Observation',
    'Instruction',
    'INSTRUCTION_CATEGORIES',
    'check_world_invariants',
    'generate_world',
    'world_rng',
    'observe',
    'Vocabulary',
    'generate_instruction',
    'load_world',
    'save_world',
    'world_from_text',
    'world_to_dict',
]
