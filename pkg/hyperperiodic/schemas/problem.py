from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import List, Literal, Optional
import numpy as np

from hyperperiodic.exceptions import ProblemValidationError

PROBLEM_SCHEMA = "hyperperiodic.problem/1"
MAX_COMPONENTS = 16


def check_breakpoints(v: List[float]) -> List[float]:
    if len(v) < 2:
        raise ValueError("a partition needs at least two breakpoints")
    if v[0] != 0.0 or v[-1] != 1.0:
        raise ValueError("breakpoints must start at 0 and end at 1")
    if any(right <= left for left, right in zip(v, v[1:])):
        raise ValueError("breakpoints must be strictly increasing")
    return v


class Partition(BaseModel):
    """Ordered breakpoints 0 = x_0 < x_1 < ... < x_N = 1."""
    model_config = ConfigDict(frozen=True)

    breakpoints: List[float]

    @field_validator("breakpoints")
    @classmethod
    def validate_breakpoints(cls, v: List[float]) -> List[float]:
        return check_breakpoints(v)

    @property
    def cells(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def nodes(self) -> np.ndarray:
        return np.asarray(self.breakpoints, dtype=float)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    def refined(self, splits: int) -> "Partition":
        """Split every cell into `splits` equal parts."""
        nodes = self.nodes
        fine = [nodes[0]]
        for left, right in zip(nodes[:-1], nodes[1:]):
            fine.extend(left + (right - left) * k / splits for k in range(1, splits))
            fine.append(right)
        fine[-1] = 1.0
        return Partition(breakpoints=[float(x) for x in fine])


class PiecewiseConstantFn(BaseModel):
    """One real value per cell of a partition."""
    model_config = ConfigDict(frozen=True)

    partition: Partition
    values: List[float]

    @model_validator(mode="after")
    def check_value_count(self) -> "PiecewiseConstantFn":
        if len(self.values) != self.partition.cells:
            raise ValueError(
                f"expected {self.partition.cells} cell values, got {len(self.values)}"
            )
        return self

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def integral(self) -> float:
        return float(np.dot(self.array, self.partition.widths))


class RandomWalkData(BaseModel):
    """Speeds and turning rates of a correlated random walk."""
    model_config = ConfigDict(frozen=True)

    breakpoints: List[float]
    a_plus: List[float]
    a_minus: List[float]
    mu_plus: List[float]
    mu_minus: List[float]

    @field_validator("breakpoints")
    @classmethod
    def validate_breakpoints(cls, v: List[float]) -> List[float]:
        return check_breakpoints(v)

    @model_validator(mode="after")
    def check_lengths(self) -> "RandomWalkData":
        cells = len(self.breakpoints) - 1
        for name in ("a_plus", "a_minus", "mu_plus", "mu_minus"):
            if len(getattr(self, name)) != cells:
                raise ValueError(f"{name} must have {cells} cell values")
        return self

    def functions(self) -> dict:
        partition = Partition(breakpoints=self.breakpoints)
        return {
            name: PiecewiseConstantFn(partition=partition, values=getattr(self, name))
            for name in ("a_plus", "a_minus", "mu_plus", "mu_minus")
        }


class ProblemData(BaseModel):
    """Coefficients of the n×n system on a shared partition plus the reflection matrices."""
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=2, le=MAX_COMPONENTS)
    m: int = Field(ge=1)
    partition: Partition
    a: List[List[float]]
    b: List[List[List[float]]]
    r0: List[List[float]]
    r1: List[List[float]]
    origin: Optional[RandomWalkData] = None

    @model_validator(mode="after")
    def check_shapes(self) -> "ProblemData":
        n, m, cells = self.n, self.m, self.partition.cells
        if not 1 <= m < n:
            raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
        if len(self.a) != n or any(len(row) != cells for row in self.a):
            raise ValueError(f"a must be {n} lists of {cells} cell values")
        if len(self.b) != n or any(len(row) != n for row in self.b):
            raise ValueError(f"b must be an {n}x{n} array of cell-value lists")
        if any(len(entry) != cells for row in self.b for entry in row):
            raise ValueError(f"every b entry must have {cells} cell values")
        if len(self.r0) != m or any(len(row) != n - m for row in self.r0):
            raise ValueError(f"r0 must be {m}x{n - m}")
        if len(self.r1) != n - m or any(len(row) != m for row in self.r1):
            raise ValueError(f"r1 must be {n - m}x{m}")

        zero = [(j, c) for j, row in enumerate(self.a) for c, v in enumerate(row) if v == 0.0]
        if zero:
            j, c = zero[0]
            raise ProblemValidationError(
                f"speed a_{j + 1} vanishes on cell {c}",
                {"field": "a", "component": j + 1, "cell": c},
            )
        return self

    @property
    def cells(self) -> int:
        return self.partition.cells

    @property
    def widths(self) -> np.ndarray:
        return self.partition.widths

    @property
    def a_values(self) -> np.ndarray:
        """Speeds, shape (n, cells)."""
        return np.asarray(self.a, dtype=float)

    @property
    def b_values(self) -> np.ndarray:
        """Coupling coefficients, shape (n, n, cells)."""
        return np.asarray(self.b, dtype=float)

    @property
    def r0_matrix(self) -> np.ndarray:
        return np.asarray(self.r0, dtype=float).reshape(self.m, self.n - self.m)

    @property
    def r1_matrix(self) -> np.ndarray:
        return np.asarray(self.r1, dtype=float).reshape(self.n - self.m, self.m)

    def speed(self, j: int) -> PiecewiseConstantFn:
        return PiecewiseConstantFn(partition=self.partition, values=self.a[j])

    def coupling(self, j: int, k: int) -> PiecewiseConstantFn:
        return PiecewiseConstantFn(partition=self.partition, values=self.b[j][k])

    def with_coefficients(self, a: Optional[np.ndarray] = None, b: Optional[np.ndarray] = None) -> "ProblemData":
        """Copy with replaced coefficient arrays (same partition and reflections)."""
        a_new = self.a if a is None else np.asarray(a, dtype=float).tolist()
        b_new = self.b if b is None else np.asarray(b, dtype=float).tolist()
        return ProblemData(
            n=self.n, m=self.m, partition=self.partition,
            a=a_new, b=b_new, r0=self.r0, r1=self.r1,
        )

    def refined(self, splits: int) -> "ProblemData":
        """Same coefficients on a partition whose cells are split into equal parts."""
        if splits < 1:
            raise ProblemValidationError("splits must be a positive integer")
        a = np.repeat(self.a_values, splits, axis=-1)
        b = np.repeat(self.b_values, splits, axis=-1)
        return ProblemData(
            n=self.n, m=self.m, partition=self.partition.refined(splits),
            a=a.tolist(), b=b.tolist(), r0=self.r0, r1=self.r1,
        )


class ProblemFile(BaseModel):
    """On-disk problem document."""
    schema_: Literal["hyperperiodic.problem/1"] = Field(alias="schema")
    n: Optional[int] = Field(default=None, ge=2, le=MAX_COMPONENTS)
    m: Optional[int] = None
    breakpoints: Optional[List[float]] = None
    a: Optional[List[List[float]]] = None
    b: Optional[List[List[List[float]]]] = None
    r0: Optional[List[List[float]]] = None
    r1: Optional[List[List[float]]] = None
    random_walk: Optional[RandomWalkData] = None

    @field_validator("breakpoints")
    @classmethod
    def validate_breakpoints(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        return v if v is None else check_breakpoints(v)

    @model_validator(mode="after")
    def check_form(self) -> "ProblemFile":
        explicit = ("n", "m", "breakpoints", "a", "b", "r0", "r1")
        if self.random_walk is None:
            missing = [name for name in explicit if getattr(self, name) is None]
            if missing:
                raise ValueError(f"missing fields: {', '.join(missing)}")
        elif any(getattr(self, name) is not None for name in explicit):
            raise ValueError("give either explicit coefficients or a random_walk block, not both")
        return self
