"""Deterministic incident-scene simulator and decision-support hub.

Simulated aerial vehicles survey a grid planned by a greedy multi-agent
router and stream JSON messages to a central hub, which fuses the evidence
into an exact Bayesian threat posterior and re-ranks response documentation
by TF-IDF relevance, all inspectable live through an HTTP API.
"""

__version__ = "0.1.0"

from .geo import EnuPoint, GeoPoint, from_enu, to_enu
from .world import Scene, SceneConfig, build_scene, load_scene_config

__all__ = [
    "EnuPoint",
    "GeoPoint",
    "Scene",
    "SceneConfig",
    "build_scene",
    "from_enu",
    "load_scene_config",
    "to_enu",
    "__version__",
]
