"""Blind probabilistic tracking of terminal UI state and pointer location
from intercepted input events, plus input-injection attack procedures,
verified against a ground-truth terminal simulator."""

from .attack import (
    CONFIRMATION_DRIVEN, ELEMENT_DRIVEN, SPEED_PRESETS_MS, AttackError,
    AttackOutcome, AttackSpec, InterposerSession, RegionTooLargeError,
    corner_sweep, run_attack, run_session, value_injection_plan,
)
from .estimator import (
    ELEMENT_AREA, EQUAL_TRANSITIONS, Estimate, Estimator, EstimatorConfig,
    Evidence, Tracker, TrackerOverflowError, classify_window,
)
from .events import (
    ABSOLUTE_TOUCH, RELATIVE_MOUSE, ButtonDown, ButtonUp, InputEvent, Key,
    MouseMove, TouchDown, TouchMove, TouchUp, Trace, TraceError, TraceMeta,
    parse_trace, serialize_trace,
)
from .geometry import (
    Delta, Point, Rect, Region, area, fits_within, intersect, subtract,
    translate_clip, union,
)
from .terminal import (
    TerminalState, apply_event, boot_state, run_trace, slider_value_at,
    state_hash,
)
from .trace import (
    GoalStep, UnreachableGoalError, UserProfile, generate, pacemaker_goal,
    to_touchscreen,
)
from .ui_model import (
    ModelError, ModelSyntaxError, ModelValidationError, UiElement, UiModel,
    UiState, UnknownStateError, ValueDomain, apply_weights,
    bundled_model_path, element_at, load_model, load_model_file,
    serialize_model, validate,
)

__version__ = "0.1.0"
