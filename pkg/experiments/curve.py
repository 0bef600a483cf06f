"""
Subcomando filter-curve: Zakai a lo largo de cada camino contra Bayes nodo a nodo
"""

import numpy as np

from experiment_base import Experiment
from fbsfilter.export import RunWriter
from fbsfilter.filtering import ParticleEnsemble, bayes_filter, zakai_curve_integrate
from fbsfilter.stats import CheckResult
from fbsfilter.suite import Scenario, run_particles, simulate_truth


def curve_checks(
        ensemble: ParticleEnsemble,
        scenario: Scenario,
        sigmas: float,
        writer: RunWriter | None = None,
        prefix: str = "curve",
) -> list[CheckResult]:
    """
    Un veredicto por (F, camino): máximo sobre los nodos de |π_Zakai - π_Bayes|
    en unidades del SE jackknife combinado. En el caso degenerado se exige igualdad exacta.
    """
    checks = []
    for F in scenario.test_functions:
        for label, path in zip(scenario.path_names, scenario.paths):
            trace = zakai_curve_integrate(ensemble, F, path, scenario.coeffs)
            bayes = [bayes_filter(ensemble, F, path.corner(m)) for m in range(len(path))]
            pi_bayes = np.array([b.pi for b in bayes])
            se = np.sqrt(trace.pi_se ** 2 + np.array([b.se for b in bayes]) ** 2)
            gap = np.abs(trace.pi - pi_bayes)
            z = np.where(se > 0, gap / np.where(se > 0, se, 1.0), np.where(gap == 0, 0.0, np.inf))
            worst = int(np.argmax(z))
            checks.append(CheckResult(
                f"{prefix}_{F.name}_{label}", bool(z[worst] <= sigmas), float(z[worst]), sigmas,
                {"node": list(path.nodes[worst]), "max_gap": float(gap.max())},
            ))
            if scenario.degenerate:
                exact = bool(np.array_equal(trace.pi, pi_bayes))
                checks.append(CheckResult(f"{prefix}_exact_{F.name}_{label}", exact, float(gap.max()), 0.0))
            if writer is not None:
                writer.write_trace(f"trace_zakai_{F.name}_{label}", trace.rows())
    return checks


class CurveExperiment(Experiment):
    name = "filter-curve"

    def run_checks(self) -> list[CheckResult]:
        scenario = self.scenario
        truth = self.step("Simulando realización", simulate_truth, scenario)
        ensemble = self.step("Propagando partículas", run_particles, scenario, truth.WY.increments.values,
                             self.settings.jobs)
        return self.step("Integrando Zakai por los caminos", curve_checks, ensemble, scenario,
                         self.sigmas, self.writer)
