"""
Instruction Module

The fixed token vocabulary (room, object, direction and function words)
and template-based instruction generation along expert paths.

Categories:
    - S1: at least two room words and no object words
    - S2: at least two object words and no room words
    - S3: at least four room and object words combined, two rooms or more
    - plain: directions only
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Sequence, Tuple

import numpy as np

from hybridnav.exceptions import EncodingError, InstructionGenerationError
from hybridnav.graph import heading_of
from hybridnav.world.models import INSTRUCTION_CATEGORIES, Instruction, WorldGraph


ROOM_NAMES = (
    'kitchen', 'bedroom', 'bathroom', 'livingroom',
    'hallway', 'office', 'diningroom', 'laundryroom',
)
OBJECT_NAMES = (
    'fridge', 'oven', 'bed', 'lamp', 'sink', 'toilet', 'sofa', 'television',
    'desk', 'chair', 'table', 'washer', 'shelf', 'plant', 'mirror', 'rug',
)
DIRECTION_WORDS = ('left', 'right', 'straight')
FUNCTION_WORDS = (
    'walk', 'go', 'turn', 'through', 'past', 'the', 'and', 'into',
    'then', 'enter', 'stop', 'near', 'at',
)

TOKEN_TYPES = {'function': 0, 'direction': 1, 'room': 2, 'object': 3}

MAX_EVENTS = 8
MAX_TURNS = 12
STRAIGHT_TOLERANCE = math.pi / 4


@dataclass(frozen=True)
class Vocabulary:
    """
    Token vocabulary sized to a world's room and object vocabularies.

    Names beyond the built-in lists are generated as ``room8``,
    ``object16`` and so on.
    """
    room_words: Tuple[str, ...]
    object_words: Tuple[str, ...]

    @classmethod
    def for_sizes(cls, room_vocab_size: int, object_vocab_size: int) -> 'Vocabulary':
        rooms = tuple(ROOM_NAMES[i] if i < len(ROOM_NAMES) else f'room{i}'
                      for i in range(room_vocab_size))
        objects = tuple(OBJECT_NAMES[i] if i < len(OBJECT_NAMES) else f'object{i}'
                        for i in range(object_vocab_size))
        return cls(rooms, objects)

    @classmethod
    def for_world(cls, world: WorldGraph) -> 'Vocabulary':
        return cls.for_sizes(world.room_vocab_size, world.object_vocab_size)

    @cached_property
    def tokens(self) -> Tuple[str, ...]:
        return FUNCTION_WORDS + DIRECTION_WORDS + self.room_words + self.object_words

    @cached_property
    def _ids(self) -> Dict[str, int]:
        return {token: i for i, token in enumerate(self.tokens)}

    @cached_property
    def _types(self) -> Dict[str, int]:
        types = {w: TOKEN_TYPES['function'] for w in FUNCTION_WORDS}
        types.update({w: TOKEN_TYPES['direction'] for w in DIRECTION_WORDS})
        types.update({w: TOKEN_TYPES['room'] for w in self.room_words})
        types.update({w: TOKEN_TYPES['object'] for w in self.object_words})
        return types

    def __len__(self) -> int:
        return len(self.tokens)

    def encode(self, tokens: Sequence[str]) -> Tuple[List[int], List[int]]:
        """
        Map tokens to (token ids, token type ids).

        Raises:
            EncodingError: On an empty sequence or an unknown token.
        """
        if len(tokens) == 0:
            raise EncodingError("Cannot encode an empty instruction.", details={'length': 0})
        unknown = [t for t in tokens if t not in self._ids]
        if unknown:
            raise EncodingError(
                f"Out-of-vocabulary tokens: {unknown}",
                details={'unknown': unknown}
            )
        return [self._ids[t] for t in tokens], [self._types[t] for t in tokens]

    def count(self, tokens: Sequence[str], kind: str) -> int:
        """Number of tokens of a kind ('room', 'object', 'direction', 'function')."""
        wanted = TOKEN_TYPES[kind]
        return sum(1 for t in tokens if self._types.get(t) == wanted)


def _dedupe(values: Sequence) -> List:
    out = []
    for value in values:
        if not out or out[-1] != value:
            out.append(value)
    return out


def _turn_word(world: WorldGraph, path: Sequence[int], k: int) -> str:
    """Turn taken at path[k]; 'straight' at the ends of the path."""
    if k <= 0 or k >= len(path) - 1:
        return 'straight'
    a, b, c = (world.node(n).position for n in path[k - 1:k + 2])
    incoming = heading_of(b[0] - a[0], b[1] - a[1])
    outgoing = heading_of(c[0] - b[0], c[1] - b[1])
    delta = (outgoing - incoming + math.pi) % (2 * math.pi) - math.pi
    if abs(delta) < STRAIGHT_TOLERANCE:
        return 'straight'
    return 'right' if delta > 0 else 'left'


def _check_path(world: WorldGraph, path: Sequence[int]) -> None:
    if not path:
        raise InstructionGenerationError("Expert path is empty.", details={'path': []})
    for node_id in path:
        world.node(node_id)
    for a, b in zip(path, path[1:]):
        if not world.has_edge(a, b):
            raise InstructionGenerationError(
                f"Expert path step {a} -> {b} is not a world edge.",
                details={'path': list(path)}
            )


def generate_instruction(
    world: WorldGraph,
    expert_path: Sequence[int],
    category: str,
    vocabulary: 'Vocabulary' = None
) -> Instruction:
    """
    Describe an expert path with a templated instruction.

    Args:
        world: World the path lives in.
        expert_path: Node ids from start to goal.
        category: 'S1', 'S2', 'S3' or 'plain'.
        vocabulary: Token vocabulary; derived from the world when omitted.

    Returns:
        Instruction whose goal is the last path node.

    Raises:
        InstructionGenerationError: If the path is invalid or the category
            cannot be satisfied on it.
    """
    if category not in INSTRUCTION_CATEGORIES:
        raise InstructionGenerationError(
            f"Unknown instruction category '{category}'.",
            details={'category': category, 'choices': list(INSTRUCTION_CATEGORIES)}
        )
    _check_path(world, expert_path)
    vocabulary = vocabulary or Vocabulary.for_world(world)

    # (path index, kind, word) events in path order
    room_events = []
    previous_room = None
    for k, node_id in enumerate(expert_path):
        node = world.node(node_id)
        if node.room_index != previous_room:
            room_events.append((k, 'room', vocabulary.room_words[node.room_type]))
            previous_room = node.room_index
    object_events = []
    previous_object = None
    for k, node_id in enumerate(expert_path):
        top = int(np.argmax(world.node(node_id).semantic))
        if top != previous_object:
            object_events.append((k, 'object', vocabulary.object_words[top]))
            previous_object = top

    goal = expert_path[-1]

    if category == 'S1':
        if len(room_events) < 2:
            raise InstructionGenerationError(
                "S1 needs a path crossing at least two rooms.",
                details={'category': category, 'rooms_on_path': len(room_events)}
            )
        events = room_events[:MAX_EVENTS]
        tokens = ['walk', 'through', 'the', events[0][2]]
        for k, _, word in events[1:]:
            tokens += ['turn', _turn_word(world, expert_path, k - 1), 'into', 'the', word]
        tokens += ['and', 'stop']

    elif category == 'S2':
        if len(object_events) < 2:
            raise InstructionGenerationError(
                "S2 needs at least two distinct objects along the path.",
                details={'category': category, 'objects_on_path': len(object_events)}
            )
        events = object_events[:MAX_EVENTS - 1] + object_events[-1:] \
            if len(object_events) > MAX_EVENTS else object_events
        tokens = ['walk', 'past', 'the', events[0][2]]
        for k, _, word in events[1:-1]:
            tokens += ['then', _turn_word(world, expert_path, k - 1), 'past', 'the', word]
        tokens += ['and', 'stop', 'near', 'the', events[-1][2]]

    elif category == 'S3':
        if len(room_events) < 2 or len(room_events) + len(object_events) < 4:
            raise InstructionGenerationError(
                "S3 needs two rooms and four room or object mentions along the path.",
                details={'category': category, 'rooms_on_path': len(room_events),
                         'objects_on_path': len(object_events)}
            )
        rooms = room_events[:MAX_EVENTS]
        budget = max(MAX_EVENTS - len(rooms), 4 - len(rooms))
        if budget <= 0:
            objects = []
        elif len(object_events) > budget:
            objects = object_events[:budget - 1] + object_events[-1:]
        else:
            objects = object_events
        events = sorted(rooms + objects, key=lambda e: (e[0], e[1] != 'room'))
        tokens = ['walk']
        for k, kind, word in events:
            if kind == 'room':
                tokens += ['enter', 'the', word]
            else:
                tokens += ['past', 'the', word]
        tokens += ['and', 'stop']

    else:
        tokens = ['walk']
        for k in range(1, min(len(expert_path) - 1, MAX_TURNS + 1)):
            tokens += ['turn', _turn_word(world, expert_path, k)]
        tokens += ['and', 'stop']

    return Instruction(tokens=tuple(tokens), category=category, goal_node_id=goal)
