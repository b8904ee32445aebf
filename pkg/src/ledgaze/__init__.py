"""LED-only gaze estimation pipeline with a synthetic eye/LED-ring simulator."""

from .core import (
    ADC_MAX,
    CalibrationError,
    CalibrationSet,
    ConfigError,
    DegenerateInputError,
    DimensionError,
    DisplayGeometry,
    EstimationError,
    GazeEstimate,
    InsufficientDataError,
    LedGazeError,
    ScreenPoint,
    SensorFrame,
    WireError,
    angular_error,
)
from .kernels import MeasureSpec, canberra, cosine, manhattan, minkowski, rbf
from .regress import GprModel, SvrModel, augment, grid_search_sigma, similarity_vector
from .calib import CalibrationGridSpec, DwellConfig, aggregate_point, run_calibration, schedule_targets
from .sigproc import CaptureSchedule, ExposureState, IirFilter, adapt_exposure, iir_step, next_capture
from .eyesim import (
    EyeSimulator,
    GazeScript,
    HeadsetShift,
    LedLayout,
    OpticsModel,
    ScriptEvent,
    SessionLog,
    SimConfig,
    SubjectProfile,
    apply_shift,
    run_script,
    sense,
)
from .session import (
    SessionConfig,
    read_session_log,
    run_benchmark_session,
    write_session_log,
)
from .evaluate import (
    AccuracyReport,
    TaskSpec,
    compare_estimators,
    evaluate_accuracy,
    run_scenarios,
    run_task_session,
    sweep,
)

__version__ = "0.1.0"
