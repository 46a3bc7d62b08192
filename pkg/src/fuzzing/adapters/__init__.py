from src.fuzzing.adapters.afl import AflPlusPlusAdapter
from src.fuzzing.adapters.base import FuzzerAdapter, FuzzerProcess, SystemClock
from src.fuzzing.adapters.scripted import ScriptedFuzzerAdapter

__all__ = ["AflPlusPlusAdapter", "FuzzerAdapter", "FuzzerProcess", "ScriptedFuzzerAdapter", "SystemClock"]
