"""Run records: per-iteration history, certificates, JSON round-tripping."""

import dataclasses
import json
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

SCHEMA_VERSION = 1

STATUS_CONVERGED = "converged"
STATUS_TAU_CAP = "tau_cap_reached"
STATUS_ITER_CAP = "iteration_cap"
STATUS_NUMERICAL = "numerical_failure"
STATUS_TIME_LIMIT = "time_limit"


@dataclass
class History:
    """Per-outer-iteration scalars; vector iterates only when kept."""

    tau: list = field(default_factory=list)
    delta: list = field(default_factory=list)
    inner_iterations: list = field(default_factory=list)
    descent_steps: list = field(default_factory=list)
    projections: list = field(default_factory=list)  # cumulative
    objective_x: list = field(default_factory=list)
    objective_y: list = field(default_factory=list)
    coupling_residual: list = field(default_factory=list)
    constraint_residual: list = field(default_factory=list)
    inner_stop: list = field(default_factory=list)
    inner_q: list = field(default_factory=list)  # list of per-outer q sequences
    x_iterates: Optional[list] = None
    y_iterates: Optional[list] = None


@dataclass
class Certificate:
    """Stationarity certificate sequences (norms per outer iteration).

    eps is the x-gradient of the penalty at the accepted pair, lambda/mu the
    induced multiplier estimates, z the constraint slack; the identity
    residual tracks || eps - (grad f + G'* lambda + mu) || at each iteration.
    """

    eps_norm: list = field(default_factory=list)
    z_norm: list = field(default_factory=list)
    lambda_norm: list = field(default_factory=list)
    mu_norm: list = field(default_factory=list)
    identity_residual: list = field(default_factory=list)
    final_eps: Optional[list] = None
    final_z: Optional[list] = None
    final_lambda: Optional[list] = None
    final_mu: Optional[list] = None
    eps_vectors: Optional[list] = None
    z_vectors: Optional[list] = None
    lambda_vectors: Optional[list] = None
    mu_vectors: Optional[list] = None


def _tolist(v):
    if v is None:
        return None
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, list):
        return [_tolist(item) for item in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


@dataclass(eq=False)
class RunRecord:
    solver: str
    problem: dict
    params: dict
    status: str
    f: float
    x: np.ndarray
    y: np.ndarray
    coupling_residual: float
    constraint_residual: float
    history: History
    certificate: Certificate
    counters: dict
    wall_time_s: float
    feasibility_diagnosis: Optional[dict] = None
    error: Optional[str] = None
    schema_version: int = SCHEMA_VERSION

    def to_dict(self):
        return {
            "schema_version": self.schema_version,
            "solver": self.solver,
            "problem": self.problem,
            "params": _tolist(self.params),
            "status": self.status,
            "f": self.f,
            "final": {
                "x": _tolist(self.x),
                "y": _tolist(self.y),
                "coupling_residual": self.coupling_residual,
                "constraint_residual": self.constraint_residual,
            },
            "history": {f.name: _tolist(getattr(self.history, f.name)) for f in fields(History)},
            "certificate": {
                f.name: _tolist(getattr(self.certificate, f.name)) for f in fields(Certificate)
            },
            "counters": dict(self.counters),
            "timings": {"wall_time_s": self.wall_time_s},
            "feasibility_diagnosis": self.feasibility_diagnosis,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d):
        hist = History(**d["history"])
        cert = Certificate(**d["certificate"])
        return cls(
            solver=d["solver"],
            problem=d["problem"],
            params=d["params"],
            status=d["status"],
            f=d["f"],
            x=np.asarray(d["final"]["x"], dtype=float),
            y=np.asarray(d["final"]["y"], dtype=float),
            coupling_residual=d["final"]["coupling_residual"],
            constraint_residual=d["final"]["constraint_residual"],
            history=hist,
            certificate=cert,
            counters=d["counters"],
            wall_time_s=d["timings"]["wall_time_s"],
            feasibility_diagnosis=d.get("feasibility_diagnosis"),
            error=d.get("error"),
            schema_version=d.get("schema_version", SCHEMA_VERSION),
        )

    def __eq__(self, other):
        if not isinstance(other, RunRecord):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def final_feasibility(record):
    """Combined residual ||x - y|| + dist_C(G(x)) at the final pair."""
    return record.coupling_residual + record.constraint_residual


def params_to_dict(obj):
    """Recursively turn a parameter dataclass into a JSON-safe dict."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: params_to_dict(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: params_to_dict(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [params_to_dict(v) for v in obj]
    return obj
