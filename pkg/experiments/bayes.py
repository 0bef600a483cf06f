"""
Subcomando filter-bayes: filtro por fórmula de Bayes en cada nodo de los caminos
"""

from experiment_base import Experiment
from fbsfilter.filtering import LOW_NEFF_FRACTION, MonotonePath, ParticleEnsemble, TestFunction, bayes_filter
from fbsfilter.stats import CheckResult
from fbsfilter.suite import run_particles, simulate_truth


def bayes_rows(ensemble: ParticleEnsemble, F: TestFunction, path: MonotonePath) -> list[dict]:
    rows = []
    for m in range(len(path)):
        z = path.corner(m)
        est = bayes_filter(ensemble, F, z)
        rows.append({"z1": z.z1, "z2": z.z2, "sigma": est.sigma, "pi": est.pi, "se": est.se, "n_eff": est.n_eff})
    return rows


class BayesExperiment(Experiment):
    name = "filter-bayes"

    def run_checks(self) -> list[CheckResult]:
        scenario = self.scenario
        truth = self.step("Simulando realización", simulate_truth, scenario)
        ensemble = self.step("Propagando partículas", run_particles, scenario, truth.WY.increments.values,
                             self.settings.jobs)

        checks = []
        for F in scenario.test_functions:
            for label, path in zip(scenario.path_names, scenario.paths):
                rows = bayes_rows(ensemble, F, path)
                self.writer.write_trace(f"trace_bayes_{F.name}_{label}", rows)

        final = bayes_filter(ensemble, scenario.test_functions[0], scenario.grid.top_right)
        min_neff = LOW_NEFF_FRACTION * ensemble.size
        checks.append(CheckResult("bayes_neff_at_T", final.n_eff >= min_neff, final.n_eff, min_neff,
                                  {"n_particles": ensemble.size}))
        return checks
