"""
Subcomando dmz-check: residuo de la ecuación de evolución de dos parámetros
"""

from dataclasses import replace

from experiment_base import Experiment
from fbsfilter.filtering import dmz_2d_residual
from fbsfilter.model import SensorFunction
from fbsfilter.registry import SENSORS, build_function
from fbsfilter.stats import CheckResult, z_check
from fbsfilter.suite import Scenario, refinement_pair


def dmz_checks(scenario: Scenario, sigmas: float, jobs: int = 1, prefix: str = "dmz") -> list[CheckResult]:
    """
    Residuo medio en la grilla del escenario; la tolerancia de discretización es
    la diferencia con el residuo de las mismas partículas en la grilla refinada.
    """
    cases = {
        "full": scenario,
        "reduced": replace(scenario, sensor=SensorFunction(build_function(SENSORS, "zero"), scenario.sensor.holder_order)),
    }
    checks = []
    for case, sc in cases.items():
        fine, coarse = refinement_pair(sc, jobs)
        for F in sc.test_functions:
            r_coarse = dmz_2d_residual(coarse, F, sc.coeffs)
            r_fine = dmz_2d_residual(fine, F, sc.coeffs)
            allowance = abs(r_coarse.residual - r_fine.residual)
            checks.append(z_check(
                f"{prefix}_{case}_{F.name}", r_coarse.residual, 0.0, r_coarse.se, sigmas, allowance,
                terms=list(r_coarse.rhs_terms), lhs=r_coarse.lhs, fine_residual=r_fine.residual,
            ))
    return checks


class DmzExperiment(Experiment):
    name = "dmz-check"

    def run_checks(self) -> list[CheckResult]:
        return self.step("Residuo DMZ", dmz_checks, self.scenario, self.sigmas, self.settings.jobs)
