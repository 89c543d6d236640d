"""Built-in pattern, attacker and scenario models."""
from .conformity import conformity_atom
from .scenarios import (MODELS, Expected, Scenario, compile_scenario, get_scenario,
                        list_scenarios, load_scenario, read_manifest)

__all__ = ["MODELS", "Expected", "Scenario", "compile_scenario", "conformity_atom",
           "get_scenario", "list_scenarios", "load_scenario", "read_manifest"]
