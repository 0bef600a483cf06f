"""
Subcomando simulate: una realización de señal, ruido y observación
"""

import numpy as np

from experiment_base import Experiment
from fbsfilter.model import a2_surrogate
from fbsfilter.stats import CheckResult, bound_check
from fbsfilter.suite import simulate_truth


class SimulateExperiment(Experiment):
    """Escribe W, X, B, W^B, Y, W^Y y δ de la realización verdadera"""

    name = "simulate"

    def run_checks(self) -> list[CheckResult]:
        scenario = self.scenario
        tol = self.config.tolerances
        truth = self.step("Simulando realización", simulate_truth, scenario)

        formats = self.config.outputs.formats
        for label, sample in (("W", truth.W), ("B", truth.B), ("WB", truth.WB), ("WY", truth.WY)):
            self.writer.write_field(f"field_{label}", sample, formats)
        self.writer.write_point_field("field_X", truth.X)
        self.writer.write_point_field("field_Y", truth.Y)
        self.writer.write_point_field("field_delta", truth.delta.values)
        self.writer.write_point_field("field_logV", truth.likelihood.logV)

        rng = np.random.default_rng(scenario.master_seed)
        interval = tuple(self.config.sde.check_interval)
        lipschitz = scenario.coeffs.lipschitz_check(interval, rng, tol.holder_bound)
        holder = scenario.sensor.holder_check(interval, rng, tol.holder_bound)
        bound = 2 * max(scenario.hurst.alpha, scenario.hurst.beta) - 1

        return [
            CheckResult("condition_a1", scenario.sensor.satisfies_a1(scenario.hurst),
                        scenario.sensor.holder_order, bound),
            CheckResult("sde_lipschitz_surrogate", lipschitz.passed, lipschitz.constant, lipschitz.bound),
            CheckResult("sensor_holder_surrogate", holder.passed, holder.constant, holder.bound,
                        {"order": holder.order}),
            # ∬ δ² de la realización verdadera; las advertencias de estabilidad viajan en details
            bound_check("delta_a2_surrogate", a2_surrogate(truth.delta.values.values, scenario.grid),
                        tol.holder_bound, warnings=list(truth.delta.warnings),
                        v1_v2_gap=truth.likelihood.v1_v2_gap),
        ]
