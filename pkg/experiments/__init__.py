"""
Experiments package: un módulo por subcomando de la CLI
"""

from experiments.bayes import BayesExperiment
from experiments.convergence import ConvergenceExperiment
from experiments.curve import CurveExperiment
from experiments.dmz import DmzExperiment
from experiments.properties import PropertiesExperiment
from experiments.simulate import SimulateExperiment

EXPERIMENTS = {
    cls.name: cls
    for cls in (
        SimulateExperiment,
        BayesExperiment,
        CurveExperiment,
        DmzExperiment,
        PropertiesExperiment,
        ConvergenceExperiment,
    )
}

__all__ = [
    'EXPERIMENTS',
    'BayesExperiment',
    'ConvergenceExperiment',
    'CurveExperiment',
    'DmzExperiment',
    'PropertiesExperiment',
    'SimulateExperiment',
]
