"""Run configuration shared by the verdict engine and the CLI."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace


@dataclass(frozen=True)
class RunConfig:
    """Resolved numerical knobs for one run.

    Attributes
    ----------
    horizon : int
        Number of simulated samples N.
    hyp_tol : float
        Tolerance for algebraic hypotheses (peripheral location).
    concl_tol : float
        Tolerance of the c0 test applied to conclusions.
    res_tol : float
        Absolute threshold below which a sequence Abel residue counts as
        zero. Larger than ``concl_tol`` because the residue estimate reads
        the sequence earlier than the c0 tail window does.
    op_res_tol : float
        Relative threshold for operator residues, scaled by ``1 + ||x0||``.
    quad_tol : float
        Relative slack allowed in quadrature-based inequality checks.
    j_min, j_max : int
        Ray grid ``r_j = 1 + 2^-j``.
    nodes : int
        Contour quadrature nodes.
    window : float
        Tail fraction used for limsup estimates in reports.
    bound_cap : float
        Orbits with sup norm above this count as unbounded.
    power_n_max : int
        Powers inspected by the power-bound estimate.
    seed : int
        Seed for randomized sweeps.
    out : str or None
        Output path; ``None`` writes to stdout.
    """

    horizon: int = 2000
    hyp_tol: float = 1e-8
    concl_tol: float = 1e-3
    res_tol: float = 1e-2
    op_res_tol: float = 1e-6
    quad_tol: float = 1e-6
    j_min: int = 2
    j_max: int = 14
    nodes: int = 256
    window: float = 0.5
    bound_cap: float = 1e6
    power_n_max: int = 1000
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if not 2 <= self.horizon <= 10**7:
            raise ValueError("horizon must lie in [2, 1e7]")
        for name in ("hyp_tol", "concl_tol", "res_tol", "op_res_tol", "quad_tol"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if not (1 <= self.j_min and self.j_min + 2 <= self.j_max <= 30):
            raise ValueError("need 1 <= j_min, j_min + 2 <= j_max <= 30")
        if not 64 <= self.nodes <= 4096:
            raise ValueError("nodes must lie in [64, 4096]")
        if not 0 < self.window <= 1:
            raise ValueError("window must lie in (0, 1]")
        if not self.bound_cap > 0:
            raise ValueError("bound_cap must be positive")
        if not 1 <= self.power_n_max <= 10**6:
            raise ValueError("power_n_max must lie in [1, 1e6]")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        return cls(**obj)

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})
