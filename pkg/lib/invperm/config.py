import json
import math
from typing import *

from pydantic import BaseModel, root_validator, validator

from .qcount import EXACT_CELL_BUDGET, max_inversions
from .rng import MASK64
from .utils import read_key_values, split_list, write_csv, write_jsonl, write_text

VERSION = "0.1.0"

EXPERIMENT_KINDS = (
    "pattern_census",
    "gap_sweep",
    "tail_weakcomp",
    "tail_density",
    "exact_vs_asym",
    "eq1_equivalence",
    "adjacent_descents",
)

_REQUIRED = {
    "pattern_census": ("n",),
    "gap_sweep": ("n",),
    "tail_weakcomp": ("t", "s", "epsilon"),
    "tail_density": ("k", "theta"),
    "exact_vs_asym": (),
    "eq1_equivalence": ("n", "m", "k"),
    "adjacent_descents": ("n",),
}


class ExperimentSpec(BaseModel):
    kind: Literal[
        "pattern_census",
        "gap_sweep",
        "tail_weakcomp",
        "tail_density",
        "exact_vs_asym",
        "eq1_equivalence",
        "adjacent_descents",
    ]
    n: Optional[int] = None
    m: Optional[int] = None
    # m(n) = ceil(m_c * n ** m_gamma) when m is not given
    m_c: Optional[float] = None
    m_gamma: Optional[float] = None
    n_grid: List[int] = []
    k: Optional[int] = None
    k_grid: List[int] = []
    ell: Optional[int] = None
    beta: Optional[float] = None
    rho: Optional[float] = None
    tau: Optional[str] = None
    position: Union[int, str] = 1
    samples: int = 1000
    seed: int = 0
    streams: int = 1
    sampler: Literal["dp", "tilted", "auto"] = "auto"
    census: Literal["full", "single", "exact"] = "full"
    alpha_rule: Literal["finite", "asymptotic"] = "finite"
    exact_budget: int = EXACT_CELL_BUDGET
    se_tolerance: float = 3.0
    rel_tolerance: float = 0.05
    far_alpha: float = 5.0
    far_ceiling: float = 0.05
    level: float = 0.95
    t: Optional[int] = None
    s: Optional[int] = None
    epsilon: Optional[float] = None
    theta: Optional[float] = None
    r_grid: List[int] = []
    band_low: float = 0.43
    band_high: float = 0.49
    svg: Optional[str] = None

    @validator("n_grid", "k_grid", "r_grid", pre=True)
    def comma_list(cls, v):
        return split_list(v)

    @validator("position", pre=True)
    def position_value(cls, v):
        if isinstance(v, str):
            v = v.strip()
            if v.isdigit():
                return int(v)
            if v != "random":
                raise ValueError("position must be a positive integer or 'random'")
            return v
        if v < 1:
            raise ValueError("position must be >= 1")
        return v

    @validator("samples", "streams")
    def at_least_one(cls, v, field):
        if v < 1:
            raise ValueError(f"{field.name} must be >= 1")
        return v

    @validator("n", "m", "k", "ell", "t", "s", "seed", "exact_budget")
    def nonnegative(cls, v, field):
        if v is not None and v < 0:
            raise ValueError(f"{field.name} must be nonnegative")
        return v

    @validator("seed")
    def seed_fits(cls, v):
        if v > MASK64:
            raise ValueError("seed must fit in 64 bits")
        return v

    @validator("rho")
    def unit_interval(cls, v):
        if v is not None and not 0 <= v <= 1:
            raise ValueError("rho must lie in [0, 1]")
        return v

    @root_validator(skip_on_failure=True)
    def kind_parameters(cls, values):
        kind = values["kind"]
        missing = [name for name in _REQUIRED[kind] if values.get(name) is None]
        if missing:
            raise ValueError(f"{kind} needs {', '.join(missing)}")

        if kind in ("pattern_census", "gap_sweep", "adjacent_descents", "exact_vs_asym"):
            if values.get("m") is None and values.get("m_c") is None:
                raise ValueError(f"{kind} needs m or an m_c/m_gamma schedule")
        if kind == "exact_vs_asym" and values.get("n") is None and not values.get("n_grid"):
            raise ValueError("exact_vs_asym needs n or n_grid")
        if kind == "exact_vs_asym":
            if values.get("k") is None and not values.get("k_grid"):
                raise ValueError("exact_vs_asym needs k or k_grid")
            wants_k = [name for name in ("beta", "ell", "tau") if values.get(name) is not None]
            if values.get("k") is None and wants_k:
                raise ValueError(f"exact_vs_asym needs k for {', '.join(wants_k)}")
            if values.get("k_grid") and values.get("rho") is None:
                raise ValueError("exact_vs_asym k_grid rows need rho")

        n = values.get("n")
        if kind == "pattern_census":
            k = values.get("k")
            tau = values.get("tau")
            if k is None and tau is None:
                raise ValueError("pattern_census needs k or tau")
            if k is not None and k > n:
                raise ValueError(f"pattern length k={k} exceeds n={n}")
            if values["census"] in ("full", "exact") and k is not None and k > 8 and tau is None:
                raise ValueError("full census is limited to k <= 8 (k! cells)")
        if kind == "gap_sweep":
            ks = values.get("k_grid") or ([values["k"]] if values.get("k") is not None else [])
            if not ks:
                raise ValueError("gap_sweep needs k or k_grid")
            bad = [k for k in ks if not 1 <= int(k) <= n - 1]
            if bad:
                raise ValueError(f"gap lengths {bad} outside [1, {n - 1}]")
        if kind == "eq1_equivalence":
            k = values["k"]
            if k > n:
                raise ValueError(f"k={k} exceeds n={n}")
            bad = [r for r in values.get("r_grid") or [] if not k <= int(r) <= n]
            if bad:
                raise ValueError(f"r values {bad} outside [{k}, {n}]")
        if kind == "tail_weakcomp" and values["t"] < 2:
            raise ValueError("tail_weakcomp needs t >= 2")
        return values

    def n_values(self) -> List[int]:
        return [int(n) for n in self.n_grid] if self.n_grid else [self.n]

    def k_values(self) -> List[int]:
        return [int(k) for k in self.k_grid] if self.k_grid else [self.k]

    def r_values(self) -> List[int]:
        return [int(r) for r in self.r_grid] if self.r_grid else list(range(self.k, self.n + 1))

    def m_for(self, n: int) -> int:
        if self.m is not None:
            return self.m
        gamma = 1.0 if self.m_gamma is None else self.m_gamma
        m = math.ceil(self.m_c * n**gamma)
        return min(max(m, 0), max_inversions(n))


class ReportRow(BaseModel):
    # field order is the CSV column order
    kind: str
    label: str = ""
    n: Optional[int] = None
    m: Optional[int] = None
    k: Optional[int] = None
    position: Optional[str] = None
    param: Optional[str] = None
    trials: Optional[int] = None
    successes: Optional[int] = None
    estimate: Optional[float] = None
    exact: Optional[float] = None
    prediction: Optional[float] = None
    reference: Optional[float] = None
    se: Optional[float] = None
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    deviation: Optional[float] = None
    count: Optional[int] = None
    count_check: Optional[int] = None
    approximate: bool = False
    passed: Optional[bool] = None
    note: str = ""

    @root_validator(skip_on_failure=True)
    def valid_interval(cls, values):
        low, high = values.get("ci_low"), values.get("ci_high")
        if low is not None and high is not None and not 0 <= low <= high <= 1:
            raise ValueError(f"invalid confidence interval [{low}, {high}]")
        return values


REPORT_COLUMNS = list(ReportRow.__fields__)


class ExperimentReport(BaseModel):
    spec: ExperimentSpec
    rows: List[ReportRow] = []
    sampler: str = ""
    version: str = VERSION
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(row.passed is not False for row in self.rows)

    @property
    def approximate(self) -> bool:
        return any(row.approximate for row in self.rows)

    def to_csv(self, out: Optional[str] = None, header: bool = True) -> str:
        return write_csv([row.dict() for row in self.rows], REPORT_COLUMNS, out, header)

    def to_jsonl(self, out: Optional[str] = None) -> str:
        return write_jsonl([row.json() for row in self.rows], out)

    def metadata(self) -> Dict[str, Any]:
        return {
            "version": self.version,
            "seed": self.spec.seed,
            "sampler": self.sampler,
            "approximate": self.approximate,
            "passed": self.passed,
            "spec": self.spec.dict(exclude_none=True),
        }

    def to_meta_json(self, out: Optional[str] = None) -> str:
        return write_text(json.dumps(self.metadata(), indent=2) + "\n", out)


def load_spec(path: str, **overrides) -> ExperimentSpec:
    values: Dict[str, Any] = read_key_values(path)
    values.update({key: value for key, value in overrides.items() if value is not None})
    return ExperimentSpec.parse_obj(values)
