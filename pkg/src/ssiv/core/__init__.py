"""System graphs, asynchronous composition and concretization to an LTS."""
from .compose import Composition, build_composition, compose_async
from .graph import (ActionEffect, GraphTransition, SystemGraph, build_system_graph,
                    eliminate_actions, inert, instantiate)
from .layout import Layout
from .lts import DEFAULT_MAX_STATES, Lts, Stepper, concretize, flatten

__all__ = [
    "ActionEffect", "Composition", "DEFAULT_MAX_STATES", "GraphTransition", "Layout", "Lts",
    "Stepper", "SystemGraph", "build_composition", "build_system_graph", "compose_async",
    "concretize", "eliminate_actions", "flatten", "inert", "instantiate",
]
