from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from enum import Enum

import numpy as np

import config
from src.errors import InvalidParameterError


# ---------------------------------------------------------------------------
# Design space
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DesignParams:
    a20: float              # energy·length²
    a11: float
    a02: float
    a10: float              # energy·length
    a01: float
    a00: float              # energy per unit area
    m0: float               # mean phase value, (−1, 1)

    def __post_init__(self) -> None:
        if not -1.0 < self.m0 < 1.0:
            raise InvalidParameterError(f"m0 must lie in (-1, 1), got {self.m0}")

    @property
    def coefficients(self) -> np.ndarray:
        """(a20, a11, a02, a10, a01, a00) as a float64 vector."""
        return np.array([self.a20, self.a11, self.a02, self.a10, self.a01, self.a00])

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, c) for c in config.DESIGN_COLUMNS], dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> DesignParams:
        values = [float(v) for v in values]
        if len(values) != len(config.DESIGN_COLUMNS):
            raise InvalidParameterError(
                f"Expected {len(config.DESIGN_COLUMNS)} design values, got {len(values)}"
            )
        return cls(*values)

    def scaled(self, factor: float) -> DesignParams:
        """Multiply the six energy coefficients by factor; m0 unchanged."""
        c = self.coefficients * factor
        return DesignParams(*c, m0=self.m0)


@dataclass(frozen=True)
class GeometricParams:
    kappa1_c: float         # translation centre, 1/length
    kappa2_c: float
    theta: float            # rotation, [−π/2, π/2)
    alpha: float            # aspect ratio
    c: float                # vertical bias
    g: float                # scale factor > 0
    m0: float

    def __post_init__(self) -> None:
        if not self.g > 0:
            raise InvalidParameterError(f"Scale factor g must be > 0, got {self.g}")


class QuadricClass(str, Enum):
    ELLIPTIC = "Elliptic"
    PARABOLIC = "Parabolic"
    HYPERBOLIC = "Hyperbolic"


# ---------------------------------------------------------------------------
# Phase field
# ---------------------------------------------------------------------------

@dataclass
class PhaseField:
    values: np.ndarray                      # (n, n, n), axis 0 = x
    length: float = config.DOMAIN_LENGTH    # physical edge of the cube
    periodic: bool = True

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3 or len(set(v.shape)) != 1:
            raise InvalidParameterError(f"Phase field must be a cube grid, got shape {v.shape}")
        if self.length <= 0:
            raise InvalidParameterError(f"Domain length must be positive, got {self.length}")
        self.values = v

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def spacing(self) -> float:
        return self.length / self.n

    def mean(self) -> float:
        return float(self.values.mean())

@dataclass
class SolverConfig:
    epsilon: float                  # interface thickness
    dt: float = config.DT
    sigma: float | None = None      # None → sigma_for derives it from Θ and the grid
    max_steps: int = config.MAX_STEPS
    energy_tol: float = config.ENERGY_TOL
    window: int = config.WINDOW
    noise_amp: float = config.NOISE_AMP
    grad_clamp: float = config.GRAD_CLAMP
    band: float = config.BAND

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise InvalidParameterError(f"epsilon must be > 0, got {self.epsilon}")
        if self.dt <= 0:
            raise InvalidParameterError(f"dt must be > 0, got {self.dt}")
        if not 0.0 < self.band < 1.0:
            raise InvalidParameterError(f"band must lie in (0, 1), got {self.band}")
        if self.max_steps < 0 or self.window < 1:
            raise InvalidParameterError("max_steps must be ≥ 0 and window ≥ 1")

    @classmethod
    def for_grid(cls, n: int, length: float = config.DOMAIN_LENGTH, **overrides) -> SolverConfig:
        """Defaults for an n³ grid; ε scales with the spacing."""
        overrides.setdefault("epsilon", config.EPSILON_FACTOR * length / n)
        return cls(**overrides)

    def sigma_for(self, theta: DesignParams, spacing: float) -> float:
        """
        Stabilizer of the |k|⁴ term. The curvature terms of f stiffen the flow
        by up to |k|² (quadratic) and |k| (linear) at the grid cutoff
        |k|² = 12/h², so σ carries those factors on top of the area term.
        """
        if self.sigma is not None:
            return self.sigma
        cutoff = 12.0 / spacing ** 2
        quadratic = np.array([[theta.a20, 0.5 * theta.a11], [0.5 * theta.a11, theta.a02]])
        stiffness = (
            np.abs(np.linalg.eigvalsh(quadratic)).max() * cutoff
            + 0.5 * (abs(theta.a10) + abs(theta.a01)) * math.sqrt(cutoff)
            + abs(theta.a00)
        )
        return config.SIGMA_C * config.MM_NORM * self.epsilon * max(float(stiffness), 1.0)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CurvatureFields:
    k1: np.ndarray          # 1/length, valid only where mask
    k2: np.ndarray
    mask: np.ndarray        # bool
    spacing: float = config.DOMAIN_LENGTH / config.GRID
    periodic: bool = True


@dataclass
class Diagnostics:
    energies: list[float] = field(default_factory=list)
    mean_u: list[float] = field(default_factory=list)
    steps: int = 0
    converged: bool = False
    feasible: bool = False
    reason: str = ""        # why a run was judged infeasible


# ---------------------------------------------------------------------------
# Surfaces
# ---------------------------------------------------------------------------

@dataclass
class TriMesh:
    vertices: np.ndarray    # (V, 3)
    triangles: np.ndarray   # (T, 3) int
    areas: np.ndarray       # (T,)
    centroids: np.ndarray   # (T, 3)

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    def __len__(self) -> int:
        return len(self.triangles)


@dataclass
class CurvatureSamples:
    k1: np.ndarray          # k1 ≥ k2 elementwise
    k2: np.ndarray
    area: np.ndarray

    def __len__(self) -> int:
        return len(self.area)

    @property
    def total_area(self) -> float:
        return float(self.area.sum())


# ---------------------------------------------------------------------------
# Encodings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HistogramSpec:
    bins: int = config.HIST_BINS
    kappa_min: float = config.KAPPA_RANGE[0]
    kappa_max: float = config.KAPPA_RANGE[1]

    def __post_init__(self) -> None:
        if self.bins < 2:
            raise InvalidParameterError(f"bins must be ≥ 2, got {self.bins}")
        if not self.kappa_min < self.kappa_max:
            raise InvalidParameterError(
                f"kappa range must be increasing, got [{self.kappa_min}, {self.kappa_max}]"
            )

    @property
    def k(self) -> int:
        return self.bins * (self.bins + 1) // 2

    @property
    def width(self) -> float:
        return (self.kappa_max - self.kappa_min) / self.bins

    def centers(self) -> np.ndarray:
        return self.kappa_min + (np.arange(self.bins) + 0.5) * self.width

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CurvatureEncoding:
    values: np.ndarray      # length k, sums to 1
    spec: HistogramSpec


@dataclass
class ThetaScaler:
    mins: np.ndarray        # (7,)
    maxs: np.ndarray


@dataclass
class ChiScaler:
    a: float
    b: float
    c: float
    m: float                # median over components of the per-component dataset max
    identity: bool = False  # fallback when m ≥ 0.5


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    learning_rate: float = config.LEARNING_RATE
    batch_size: int = config.BATCH_SIZE
    epochs: int = config.EPOCHS_FNN
    adam_beta1: float = config.ADAM_BETA1
    adam_beta2: float = config.ADAM_BETA2
    adam_eps: float = config.ADAM_EPS
    seed: int = config.TRAIN_SEED
    shuffle: bool = True            # reshuffle every epoch

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise InvalidParameterError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise InvalidParameterError(f"batch_size must be ≥ 1, got {self.batch_size}")


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)
    test_loss: list[float] = field(default_factory=list)    # NaN when no test set
    wall_time: float = 0.0
    checksum: str = ""


# ---------------------------------------------------------------------------
# Benchmarks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpinodoidParams:
    beta: float = config.SPINODOID_BETA
    Q: int = config.SPINODOID_Q
    theta1: float = math.radians(config.SPINODOID_CONES_DEG[0])
    theta2: float = math.radians(config.SPINODOID_CONES_DEG[1])
    theta3: float = math.radians(config.SPINODOID_CONES_DEG[2])
    rho: float = config.SPINODOID_RHO
    seed: int = 0

    def __post_init__(self) -> None:
        if self.Q < 1:
            raise InvalidParameterError(f"Q must be ≥ 1, got {self.Q}")
        if not 0.0 < self.rho < 1.0:
            raise InvalidParameterError(f"rho must lie in (0, 1), got {self.rho}")
        for t in (self.theta1, self.theta2, self.theta3):
            if not 0.0 <= t < math.pi / 2:
                raise InvalidParameterError(f"cone angles must lie in [0, π/2), got {t}")

    @property
    def cones(self) -> tuple[float, float, float]:
        return (self.theta1, self.theta2, self.theta3)


@dataclass
class VoxelImage:
    data: np.ndarray                                  # grayscale, any dims
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3:
            raise InvalidParameterError(f"Voxel image must be 3D, got {self.data.ndim}D")
        if not np.all(np.isfinite(self.data)):
            raise InvalidParameterError("Voxel image contains non-finite values")


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------

@dataclass
class DatasetManifest:
    count: int
    hist_spec: HistogramSpec
    solver: dict                        # SolverConfig fields (+ grid)
    bounds: dict[str, tuple[float, float]]
    seed: int
    workers: int
    attempts: int = 0
    statuses: list[dict] = field(default_factory=list)   # per attempt: index, status, reason, offset

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bounds"] = {k: list(v) for k, v in self.bounds.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> DatasetManifest:
        return cls(
            count=int(d["count"]),
            hist_spec=HistogramSpec(**d["hist_spec"]),
            solver=dict(d["solver"]),
            bounds={k: (float(v[0]), float(v[1])) for k, v in d["bounds"].items()},
            seed=int(d["seed"]),
            workers=int(d["workers"]),
            attempts=int(d.get("attempts", 0)),
            statuses=list(d.get("statuses", [])),
        )


@dataclass
class JobSpec:
    command: str
    inputs: dict[str, str] = field(default_factory=dict)
    output: str = ""
    overrides: dict = field(default_factory=dict)
    seed: int = 0
    workers: int = 1
