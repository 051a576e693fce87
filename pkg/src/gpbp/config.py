"""Solver configuration shared by the exact and approximate solvers."""

from dataclasses import dataclass, asdict

MODES = ("gpbp", "alsmp")


@dataclass
class SolverConfig:
    """Parameters of one solver run.

    Attributes
    ----------
    rank : int
        Factor dimension R.
    lam : float
        Ridge parameter (lambda >= 0; 0 is allowed only when every cavity
        system stays nonsingular).
    mode : str
        ``"gpbp"`` keeps the alpha uncertainty coefficients; ``"alsmp"``
        drops them (outer_scale = 1), the alternating-least-squares
        reduction.
    gamma : float
        Damping weight in [0, 1] on previous-sweep contributions.
    max_sweeps, conv_tol : int, float
        Sweep budget and relative node-mean change threshold.
    init_scale : float
        Standard deviation of the random initialization.
    seed : int
        Initialization seed.
    refresh_interval : int
        Node inverses are rebuilt by direct factorization every this many
        sweeps; in between they are accumulated by Sherman-Morrison
        updates.  1 means always direct.
    divergence_cap : float
        Ceiling on |mean| entries before the run aborts as diverged.
    force_zero_alpha : bool
        Store zero for every alpha (reduction check: gpbp with forced
        zero alphas must match alsmp sweep for sweep).
    """

    rank: int
    lam: float
    mode: str = "gpbp"
    gamma: float = 0.0
    max_sweeps: int = 1000
    conv_tol: float = 1e-8
    init_scale: float = 1.0
    seed: int = 0
    refresh_interval: int = 25
    divergence_cap: float = 1e8
    force_zero_alpha: bool = False

    def validate(self):
        if self.rank < 1:
            raise ValueError("rank must be at least 1")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        if self.conv_tol <= 0:
            raise ValueError("conv_tol must be positive")
        if self.init_scale < 0:
            raise ValueError("init_scale must be nonnegative")
        if self.refresh_interval < 1:
            raise ValueError("refresh_interval must be at least 1")
        if self.divergence_cap <= 0:
            raise ValueError("divergence_cap must be positive")
        return self

    @property
    def use_alpha(self):
        return self.mode == "gpbp"

    def replace(self, **kwargs):
        data = asdict(self)
        data.update(kwargs)
        return SolverConfig(**data)

    def to_dict(self):
        return asdict(self)
