"""Active learning of realtime one-counter automata."""

from importlib.resources import files

from .automata import Configuration, Dfa, Roca, load_automaton, load_roca, save_automaton

DATA = files(__package__) / "data"

__all__ = ["Configuration", "Dfa", "Roca", "DATA", "load_automaton", "load_roca", "save_automaton"]
