"""2D feature-based EKF SLAM: models, filter, perception, simulation, evaluation.

The package estimates a wheeled robot's planar pose (and optionally a map
of point landmarks) from speed, gyro and laser-scan logs.  Submodules:

* :mod:`slam2d.models`     — motion/observation models and their Jacobians
* :mod:`slam2d.filter`     — the EKF over the joint robot+map state
* :mod:`slam2d.perception` — scan segmentation, landmark extraction,
  association and quality tracking
* :mod:`slam2d.ingest`     — sensor log format, bias removal, dead reckoning
* :mod:`slam2d.simulator`  — synthetic scenarios and scan rendering
* :mod:`slam2d.pipeline`   — log-to-runlog estimation runs
* :mod:`slam2d.evaluation` — RMSE/consistency metrics and comparison tables
* :mod:`slam2d.cli`        — ``slam2d simulate|run|compare``
"""

from .models import (
    ControlInput,
    DegenerateGeometryError,
    LandmarkPosition,
    MotionNoiseConfig,
    Observation,
    Pose,
    SensorNoiseConfig,
    inverse_observation_jacobians,
    inverse_observe,
    motion_jacobians,
    motion_step,
    observation_jacobians,
    observe,
    process_noise,
    wrap_angle,
)
from .filter import (
    KnownMap,
    ObservationMode,
    SingularInnovationError,
    SlamState,
    UnknownLandmarkError,
    init_landmark,
    init_state,
    predict,
    remove_landmark,
    update,
    update_known_map,
)
from .perception import (
    AssociationResult,
    LandmarkCandidate,
    LaserScan,
    QualityParams,
    SegmentedObject,
    associate,
    extract_landmarks,
    prefilter,
    segment_scan,
    update_quality,
)
from .ingest import (
    BiasEstimate,
    LogFile,
    LogParseError,
    SensorRecord,
    dead_reckon,
    debias,
    estimate_bias,
    load_log,
    parse_log,
    save_log,
    serialize_log,
)
from .simulator import (
    DynamicObject,
    GroundTruth,
    ScenarioConfig,
    default_scenario,
    load_map,
    load_truth,
    render_scan,
    save_map,
    save_truth,
    simulate,
    slam_scenario,
)
from .evaluation import (
    RunLog,
    RunRow,
    compare,
    consistency,
    load_runlog,
    parse_runlog,
    rmse,
    save_runlog,
    serialize_runlog,
)
from .pipeline import PipelineConfig, PipelineResult, run_batch, run_pipeline

__version__ = "0.1.0"
