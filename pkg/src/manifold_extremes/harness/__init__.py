from .config import ExperimentConfig, load_config
from .experiments import ExperimentReport, run

__all__ = ["ExperimentConfig", "ExperimentReport", "load_config", "run"]
