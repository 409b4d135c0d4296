"""
Pydantic model for experiment configuration.
"""
from itertools import product
from typing import Iterator, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from twr_beamform.utils.errors import ConfigError

MethodTag = Literal["anomax", "rr", "err", "had_hosvd", "had_hosvd_ls", "had_altmax"]
FdTarget = Literal["anomax", "rr", "err"]

FD_METHODS = ("anomax", "rr", "err")
HAD_METHODS = ("had_hosvd", "had_hosvd_ls", "had_altmax")
DEFAULT_METHODS = ["anomax", "rr", "err", "had_hosvd", "had_altmax"]


class ExperimentConfig(BaseModel):
    """
    One Monte Carlo experiment: system dimensions, methods, and sweep axes.
    Scalar fields define a single design point; the optional ``*_values`` lists
    turn a field into a sweep axis.
    """
    # System dimensions
    m_rs: int = Field(default=64, ge=1, description="Relay antennas")
    m1: int = Field(default=4, ge=1)
    m2: int = Field(default=4, ge=1)
    k: int = Field(default=32, ge=1, description="Subcarriers")
    ns: int = Field(default=4, ge=1, description="Streams per MS")
    n_rs: int = Field(default=8, ge=1, description="Relay RF chains")
    l: int = Field(default=6, ge=1, description="Channel paths")
    d: int = Field(default=8, ge=1, description="Delay taps")
    r: int = Field(default=2, ge=1, description="ERR-ANOMAX singular-vector count")

    # Power and noise
    snr_db_grid: List[float] = Field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0])
    p_rs: float = Field(default=1.0, gt=0)
    p_ue: float = Field(default=1.0, gt=0)

    # Methods
    methods: List[MethodTag] = Field(default_factory=lambda: list(DEFAULT_METHODS))
    had_target: FdTarget = "err"

    # Monte Carlo
    trials: int = Field(default=200, ge=1)
    base_seed: int = 0

    # Flags
    half_prelog: bool = True
    literal_waterfill: bool = False
    altmax_deflation: bool = True
    outer_refine: bool = False
    unit_energy: bool = True
    altmax_tol: float = Field(default=1e-8, gt=0)
    altmax_max_iter: int = Field(default=200, ge=1)

    # Sweep axes
    r_values: Optional[List[int]] = None
    ns_values: Optional[List[int]] = None
    n_rs_values: Optional[List[int]] = None
    k_values: Optional[List[int]] = None
    had_target_values: Optional[List[FdTarget]] = None

    class Config:
        extra = "forbid"

    @field_validator("snr_db_grid", "methods")
    @classmethod
    def non_empty(cls, v):
        if not v:
            raise ValueError("must not be empty")
        return v

    @model_validator(mode="after")
    def check_invariants(self) -> "ExperimentConfig":
        problems = []
        fields = []

        def fail(name: str, message: str):
            fields.append(name)
            problems.append(f"{name}: {message}")

        m_min = min(self.m1, self.m2)
        for ns in self.ns_values or [self.ns]:
            if ns > m_min:
                fail("ns", f"Ns={ns} exceeds min(M1, M2)={m_min}")
            if "rr" in self._needed_fd_methods() and 2 * ns > self.m_rs:
                fail("ns", f"2*Ns={2 * ns} exceeds M_rs={self.m_rs} (RR-ANOMAX)")
        for n_rs in self.n_rs_values or [self.n_rs]:
            if n_rs > self.m_rs:
                fail("n_rs", f"N_rs={n_rs} exceeds M_rs={self.m_rs}")
        r_max = min(2 * self.m1 * self.m2, self.m_rs ** 2)
        for r in self.r_values or [self.r]:
            if not 1 <= r <= r_max:
                fail("r", f"R={r} outside [1, {r_max}]")
        for name in ("r_values", "ns_values", "n_rs_values", "k_values", "had_target_values"):
            values = getattr(self, name)
            if values is not None and len(values) == 0:
                fail(name, "sweep axis must not be empty")
        for k in self.k_values or []:
            if k < 1:
                fail("k_values", f"K={k} must be positive")

        if problems:
            raise ConfigError("; ".join(problems), sorted(set(fields)))
        return self

    def _needed_fd_methods(self) -> set:
        needed = {m for m in self.methods if m in FD_METHODS}
        if any(m in HAD_METHODS for m in self.methods):
            needed.update(self.had_target_values or [self.had_target])
        return needed

    def points(self) -> Iterator["ExperimentConfig"]:
        """
        Expand the sweep axes into single-point configs (SNR grid kept whole).

        A method only runs at axis values that change its output. Fully-digital
        designs ignore the HAD target and N_RS; of them only ERR reads R.
        Hybrid designs see R only through the ERR target. Otherwise the method
        runs once, at the first value of the axis.
        """
        targets = self.had_target_values or [self.had_target]
        n_rs_axis = self.n_rs_values or [self.n_rs]
        r_axis = self.r_values or [self.r]
        axes = product(targets, self.k_values or [self.k], n_rs_axis, self.ns_values or [self.ns], r_axis)
        for had_target, k, n_rs, ns, r in axes:
            methods = []
            for method in self.methods:
                if method in HAD_METHODS:
                    if r != r_axis[0] and had_target != "err":
                        continue
                else:
                    if had_target != targets[0] or n_rs != n_rs_axis[0]:
                        continue
                    if r != r_axis[0] and method != "err":
                        continue
                methods.append(method)
            if not methods:
                continue
            yield self.model_copy(update={
                "had_target": had_target, "k": k, "n_rs": n_rs, "ns": ns, "r": r,
                "methods": methods,
                "r_values": None, "ns_values": None, "n_rs_values": None,
                "k_values": None, "had_target_values": None,
            })

    def method_label(self, method: str) -> str:
        """CSV label; HAD rows on a non-default target carry the target name."""
        if method in HAD_METHODS and self.had_target != "err":
            return f"{method}:{self.had_target}"
        return method
