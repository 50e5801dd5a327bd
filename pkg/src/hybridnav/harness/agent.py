"""
Agent Bundle Module

Everything a trained agent consists of: the navigation policy and the
optional lite auxiliary models, saved to and loaded from one checkpoint.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

from hybridnav.config import AgentConfig, PolicyConfig
from hybridnav.exceptions import ConfigurationError
from hybridnav.imagination import (
    Imaginer,
    LearnedImaginerModel,
    RoomTypeModel,
    RoomWeightDict,
    WaypointModel,
    WaypointPredictor,
    build_imaginer,
)
from hybridnav.memory import FeatureLayout
from hybridnav.policy import NavigationPolicy, load_modules, read_checkpoint, save_checkpoint
from hybridnav.world import Vocabulary, WorldGraph


logger = logging.getLogger(__name__)

BUILDERS = {
    'policy': NavigationPolicy.from_spec,
    'waypoint': WaypointModel.from_spec,
    'room': RoomTypeModel.from_spec,
    'imaginer': LearnedImaginerModel.from_spec,
}


@dataclass
class AgentBundle:
    """
    A policy with its auxiliary models.

    Attributes:
        policy: NavigationPolicy.
        waypoint_model: WaypointModel growing trees past depth 1.
        room_model: RoomTypeModel used by the learned imaginer.
        imaginer_model: LearnedImaginerModel for ``imaginer.kind = learned``.
    """
    policy: NavigationPolicy
    waypoint_model: Optional[WaypointModel] = None
    room_model: Optional[RoomTypeModel] = None
    imaginer_model: Optional[LearnedImaginerModel] = None

    @classmethod
    def initial(cls, world: WorldGraph, config: PolicyConfig, hidden: int = 64,
                history_length: int = 2) -> 'AgentBundle':
        """Untrained bundle sized for a world's vocabularies and channels."""
        layout = FeatureLayout.for_world(world)
        return cls(
            policy=NavigationPolicy(config, Vocabulary.for_world(world), layout.dim),
            waypoint_model=WaypointModel(world.appearance_dim, world.geometry_dim, hidden,
                                         seed=config.seed),
            room_model=RoomTypeModel(world.object_vocab_size, world.geometry_dim,
                                     world.room_vocab_size, seed=config.seed),
            imaginer_model=LearnedImaginerModel(world.appearance_dim, world.geometry_dim,
                                                world.object_vocab_size, history_length,
                                                hidden, seed=config.seed),
        )

    def modules(self) -> Dict[str, Any]:
        modules = {'policy': self.policy, 'waypoint': self.waypoint_model,
                   'room': self.room_model, 'imaginer': self.imaginer_model}
        return {name: module for name, module in modules.items() if module is not None}

    def save(self, path, extra: Dict[str, Any] = None):
        """Write every present model to one checkpoint."""
        modules = self.modules()
        specs = {name: module.spec() for name, module in modules.items()}
        return save_checkpoint(path, modules, specs, extra)

    @classmethod
    def load(cls, path) -> 'AgentBundle':
        """
        Rebuild a bundle from a checkpoint.

        Raises:
            ConfigurationError: If the file is missing, corrupt, of another
                version or has no policy.
        """
        modules = load_modules(path, BUILDERS)
        if 'policy' not in modules:
            raise ConfigurationError(f"Checkpoint {path} holds no policy.",
                                     details={'path': str(path)})
        for module in modules.values():
            module.eval()
        return cls(modules['policy'], modules.get('waypoint'), modules.get('room'),
                   modules.get('imaginer'))

    @staticmethod
    def extra(path) -> Dict[str, Any]:
        """Metadata stored with a checkpoint."""
        header, _ = read_checkpoint(path)
        return header.get('extra', {})

    def components(self, world: WorldGraph, config: AgentConfig,
                   imaginer_seed: Optional[int] = None
                   ) -> Tuple[Imaginer, Optional[WaypointPredictor], Optional[RoomWeightDict]]:
        """
        Imaginer, waypoint predictor and room weights for one episode.

        The waypoint predictor is left out when the waypoint model is
        disabled or missing; room weights when room reweighting is off.
        """
        imaginer_config = config.imaginer
        if imaginer_seed is not None:
            imaginer_config = type(imaginer_config)(imaginer_config.kind, imaginer_config.noise,
                                                    imaginer_seed)
        imaginer = build_imaginer(imaginer_config, world, self.imaginer_model,
                                  self.room_model if config.use_room_model else None)
        predictor = None
        if config.use_waypoint_model and self.waypoint_model is not None:
            predictor = WaypointPredictor(self.waypoint_model, config.max_waypoints,
                                          config.nms_window)
        weights = RoomWeightDict.for_world(world) if config.use_room_model else None
        return imaginer, predictor, weights
