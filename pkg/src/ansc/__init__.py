"""ANSC: probabilistic capacity-health scoring for Clos fabric fleets.

The public surface groups into:

* :mod:`ansc.fabric` -- immutable fleet model
* :mod:`ansc.hazard` -- failure probabilities and loss distributions
* :mod:`ansc.scoring` -- safety margins, scores, colors, aggregation
* :mod:`ansc.calibration` -- fleet-normalized color thresholds and audits
* :mod:`ansc.simulator` -- synthetic fleets and the scenario engine
* :mod:`ansc.whatif` -- remediation what-if evaluation
* :mod:`ansc.storage` -- file formats and the score history store
* :mod:`ansc.service` -- HTTP API
* :mod:`ansc.cli` -- the ``ansc`` command
"""

from .calibration import BudgetConfig, ColorCalibrator, Thresholds, audit, calibrate
from .fabric import (
    CapacityElement,
    ClosLayer,
    Datacenter,
    ElementKind,
    ElementState,
    FabricTopology,
    LayerTier,
    apply_state_change,
    available_capacity,
    validate,
)
from .hazard import (
    ConditionWeights,
    ElementHazard,
    HazardRateEstimator,
    IncidentRecord,
    LossDistribution,
    estimate_failure_prob,
    layer_loss_distribution,
    split_common_cause,
    violation_probability,
)
from .scoring import (
    Color,
    PersistenceState,
    Scope,
    ScoreCard,
    ScoreSeries,
    effective_safety_margin,
    map_color,
    persistence_adjust,
    posture_and_movement,
    raw_score,
    score_datacenter,
    score_region,
)
from .simulator import (
    FleetGenSpec,
    ScenarioConfig,
    export_heatmap,
    generate_fleet,
    generate_history,
    run_scenario,
)
from .whatif import Action, ActionKind, WhatIfResult, evaluate, removal_check

__version__ = "0.1.0"
