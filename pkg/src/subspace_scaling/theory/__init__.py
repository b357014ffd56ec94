"""Deterministic scaling limits of the three trackers."""

from .closed_form import (
    cos2_from_P,
    oja_grouse_closed_form,
    oja_grouse_closed_form_general,
    oja_grouse_critical_tau,
    steady_state_cos2,
    z_diagonal,
)
from .integrate import IntegrationBreakdown, integrate, output_times
from .params import OdeParams
from .phase import (
    Informative,
    SolverError,
    Uninformative,
    UnsupportedDimensionError,
    critical_mu_from_snr,
    nullcline_f,
    nullcline_h,
    petrels_critical_mu,
    petrels_fixed_point,
)
from .predict import (
    predict,
    predict_oja_grouse,
    predict_petrels,
    petrels_initial_state,
    predicted_cosines,
)
from .rhs import (
    CompiledRhs,
    oja_grouse_system,
    p_ode_system,
    petrels_full_system,
    petrels_reduced_system,
    phase_system,
    rhs_F,
    rhs_H,
    rhs_petrels_full,
)
from .states import OdeState, OjaGrouse, PetrelsFull, PetrelsReduced, PhasePoint, PState, VectorState

__all__ = [
    "CompiledRhs",
    "Informative",
    "IntegrationBreakdown",
    "OdeParams",
    "OdeState",
    "OjaGrouse",
    "PState",
    "PetrelsFull",
    "PetrelsReduced",
    "PhasePoint",
    "SolverError",
    "Uninformative",
    "UnsupportedDimensionError",
    "VectorState",
    "cos2_from_P",
    "critical_mu_from_snr",
    "integrate",
    "nullcline_f",
    "nullcline_h",
    "oja_grouse_closed_form",
    "oja_grouse_closed_form_general",
    "oja_grouse_critical_tau",
    "oja_grouse_system",
    "output_times",
    "p_ode_system",
    "petrels_critical_mu",
    "petrels_fixed_point",
    "petrels_full_system",
    "petrels_initial_state",
    "petrels_reduced_system",
    "phase_system",
    "predict",
    "predict_oja_grouse",
    "predict_petrels",
    "predicted_cosines",
    "rhs_F",
    "rhs_H",
    "rhs_petrels_full",
    "steady_state_cos2",
    "z_diagonal",
]
