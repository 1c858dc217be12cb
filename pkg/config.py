"""
Central configuration: domain, solver defaults, sampling bounds, histogram
and network presets, guardrails.
All tunable parameters live here; nothing is hardcoded in modules.
"""
import math
import os

from dotenv import load_dotenv

load_dotenv(override=True)  # .env always wins over any pre-existing shell env vars


# ---------------------------------------------------------------------------
# Threads
# Set before numpy is imported anywhere so BLAS/FFT pools pick it up.
# ---------------------------------------------------------------------------
def _thread_count() -> int:
    raw = os.getenv("CURVDESIGN_THREADS", "")
    try:
        return max(1, int(raw)) if raw else max(1, (os.cpu_count() or 1))
    except ValueError:
        return 1


THREADS: int = _thread_count()

for _var in ("OMP_NUM_THREADS", "MKL_NUM_THREADS", "OPENBLAS_NUM_THREADS"):
    os.environ.setdefault(_var, str(THREADS))

LOG_LEVEL: str = os.getenv("CURVDESIGN_LOG_LEVEL", "WARNING").upper()

# ---------------------------------------------------------------------------
# Domain
# ---------------------------------------------------------------------------
DOMAIN_LENGTH: float = 100.0     # Ω = [0, 100]³

# ---------------------------------------------------------------------------
# Phase-field solver defaults
# ---------------------------------------------------------------------------
GRID: int = 64
EPSILON_FACTOR: float = 2.0      # ε = EPSILON_FACTOR · spacing
MM_NORM: float = 3.0 / (2.0 * math.sqrt(2.0))   # Modica–Mortola normalization for the tanh profile
DT: float = 0.05                 # first step; the flow adapts it afterwards
DT_GROWTH: float = 1.1           # after every accepted step
DT_MAX: float = 5.0
DT_MIN: float = 1e-8             # below this the run is declared divergent
ENERGY_RISE_TOL: float = 1e-3    # a step may raise F by at most this · max(|F|, 1)
SIGMA_C: float = 1.0             # σ = SIGMA_C · MM_NORM · ε · (stiffness of Θ at the grid cutoff)
MAX_STEPS: int = 4000
ENERGY_TOL: float = 1e-4         # relative change over WINDOW steps
WINDOW: int = 50
NOISE_AMP: float = 0.05
GRAD_CLAMP: float = 1e-8
BAND: float = 0.9                # |u| < BAND is the interface band
LEVEL_CLIP: float = 0.999        # curvatures use atanh(u) clipped here
FIELD_SLACK: float = 0.1         # transient overshoot allowed past ±1

# Feasibility ("do not result in phase separation" → rejected)
FEASIBLE_MIN_STD: float = 0.4

# ---------------------------------------------------------------------------
# Design-space sampling bounds (min, max) per component
# ---------------------------------------------------------------------------
DESIGN_COLUMNS: tuple[str, ...] = ("a20", "a11", "a02", "a10", "a01", "a00", "m0")

SAMPLING_BOUNDS: dict[str, tuple[float, float]] = {
    "a20": (0.0, 1.0),
    "a11": (-2.0, 2.0),
    "a02": (0.0, 1.0),
    "a10": (-200.0, 200.0),
    "a01": (-200.0, 200.0),
    "a00": (-5000.0, 5000.0),
    "m0":  (-0.8, -0.15),
}

# Geometric-coordinate bounds used by sample_geometric
GEOMETRIC_BOUNDS: dict[str, tuple[float, float]] = {
    "kappa1_c": (-0.3, 0.3),
    "kappa2_c": (-0.3, 0.3),
    "theta":    (-math.pi / 2, math.pi / 2),
    "alpha":    (-1.0, 1.0),
    "c":        (-0.05, 0.05),
    "g":        (0.1, 1.0),
    "m0":       (-0.8, -0.15),
}

PARABOLIC_RTOL: float = 1e-12    # |det| ≤ PARABOLIC_RTOL · (Σ|eig|)²

# ---------------------------------------------------------------------------
# Curvature histogram
# ---------------------------------------------------------------------------
HIST_BINS: int = 200
HIST_BINS_DESK: int = 40
KAPPA_RANGE: tuple[float, float] = (-0.6, 0.6)

# ---------------------------------------------------------------------------
# Neural networks
# ---------------------------------------------------------------------------
LEARNING_RATE: float = 1e-4
BATCH_SIZE: int = 128
EPOCHS_FNN: int = 220
EPOCHS_INN: int = 600
ADAM_BETA1: float = 0.9
ADAM_BETA2: float = 0.999
ADAM_EPS: float = 1e-8
TRAIN_SEED: int = 0
N_DESIGN_PARAMS: int = 7
INIT_OUTPUT_BIAS: float = 3.0    # ReLU6/6 outputs start at 0.5

# Architecture presets. Hidden widths only; input/output come from the data.
PRESETS: dict[str, dict] = {
    "paper": {
        "bins":       HIST_BINS,
        "fnn_hidden": [50, 150, 300, 600, 1200, 2500, 5000, 10000, 20000],
        "inn_hidden": [5000, 1000, 200, 40],
        "grid":       GRID,
        "n_samples":  18_000,
        "n_test":     2_000,
    },
    "desk": {
        "bins":       HIST_BINS_DESK,
        "fnn_hidden": [64, 256],
        "inn_hidden": [256, 64],
        "grid":       48,
        "n_samples":  2_000,
        "n_test":     200,
    },
}

# Older checkpoints and scripts spell the full-scale preset "full".
PRESET_ALIASES: dict[str, str] = {"full": "paper"}
PRESET_NAMES: tuple[str, ...] = tuple(sorted([*PRESETS, *PRESET_ALIASES]))

# ---------------------------------------------------------------------------
# Dataset generation guardrails
# ---------------------------------------------------------------------------
MIN_FEASIBLE_RATE: float = 0.01
FEASIBILITY_WINDOW: int = 200

# ---------------------------------------------------------------------------
# Benchmarks
# ---------------------------------------------------------------------------
SPINODOID_Q: int = 1000
SPINODOID_BETA: float = 15 * math.pi          # on the unit box, before rescaling
SPINODOID_CONES_DEG: tuple[float, float, float] = (60.0, 30.0, 10.0)
SPINODOID_RHO: float = 0.3
SPINODOID_CONE_MODE: str = "or"               # "or" (union) | "xor"
ERFINV_TOL: float = 1e-12

PNS_PERIOD: float = 10 * math.pi              # joint period of sin(x) and sin(1.8x)
PNS_OFFSET: float = 0.5

BONE_TANH_GAIN: float = 4.0
BENCHMARK_GRID: int = 64

# ---------------------------------------------------------------------------
# Exit codes
# ---------------------------------------------------------------------------
EXIT_OK: int = 0
EXIT_INVALID_INPUT: int = 2
EXIT_DIVERGENCE: int = 3
EXIT_INCOMPATIBLE: int = 4


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def preset(name: str) -> dict:
    """Return a copy of an architecture preset ("paper" | "desk", aliases resolved)."""
    name = PRESET_ALIASES.get(name, name)
    if name not in PRESETS:
        raise KeyError(f"Unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return {k: (list(v) if isinstance(v, list) else v) for k, v in PRESETS[name].items()}


def as_dict() -> dict:
    """All public upper-case settings, for --show-config."""
    return {k: v for k, v in globals().items() if k.isupper() and not k.startswith("_")}
