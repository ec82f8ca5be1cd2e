from pydantic import BaseModel, Field, model_validator
from typing import List, Literal, Optional, Tuple

FORCING_SCHEMA = "hyperperiodic.forcing/1"


class ModeBlock(BaseModel):
    """One mode s >= 0 of one component; s < 0 follows by conjugation."""
    s: int = Field(ge=0)
    component: int = Field(ge=1)
    constant: Optional[Tuple[float, float]] = None
    values: Optional[List[Tuple[float, float]]] = None

    @model_validator(mode="after")
    def check_profile(self) -> "ModeBlock":
        if (self.constant is None) == (self.values is None):
            raise ValueError("give exactly one of 'constant' or 'values'")
        return self


class SampleBlock(BaseModel):
    """Real samples at t_k = 2πk/T, shape T × n × (N·R+1)."""
    times: int = Field(ge=1)
    values: List[List[List[float]]]

    @model_validator(mode="after")
    def check_count(self) -> "SampleBlock":
        if len(self.values) != self.times:
            raise ValueError(f"expected {self.times} time samples, got {len(self.values)}")
        return self


class ForcingFile(BaseModel):
    """On-disk forcing document."""
    schema_: Literal["hyperperiodic.forcing/1"] = Field(alias="schema")
    truncation: int = Field(ge=0)
    subdivisions: int = Field(ge=1)
    modes: Optional[List[ModeBlock]] = None
    samples: Optional[SampleBlock] = None

    @model_validator(mode="after")
    def check_form(self) -> "ForcingFile":
        if (self.modes is None) == (self.samples is None):
            raise ValueError("give exactly one of 'modes' or 'samples'")
        if self.modes is not None:
            for block in self.modes:
                if block.s > self.truncation:
                    raise ValueError(f"mode s={block.s} exceeds truncation {self.truncation}")
        return self
