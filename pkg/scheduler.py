import math


class WarmupCosineStep(object):
    """
    Upper bound on the gradient-flow time step: a linear warmup between warmup_start and
    base_step followed by a cosine annealing between base_step and eta_min.
    The flow adapts its step by backtracking below this cap; the cap only limits growth.
    Args:
        base_step (float): Peak step after warmup.
        warmup_steps (int): Number of sweeps of linear warmup.
        max_steps (int): Sweep at which the cosine reaches eta_min; the cap stays there afterwards.
        warmup_start (float): Step cap at sweep 0. Default: base_step / 10.
        eta_min (float): Final step cap. Default: base_step / 10.
    Example:
        >>> schedule = WarmupCosineStep(1e-4, warmup_steps=20, max_steps=2000)
        >>> schedule.cap(0) < schedule.cap(20) > schedule.cap(1000)
        True
    """

    def __init__(self, base_step, warmup_steps=20, max_steps=2000, warmup_start=None, eta_min=None):
        if not base_step > 0:
            raise ValueError(f"base_step must be positive, got {base_step}")
        self.base_step = float(base_step)
        self.warmup_steps = int(warmup_steps)
        self.max_steps = max(int(max_steps), self.warmup_steps + 1)
        self.warmup_start = self.base_step / 10 if warmup_start is None else float(warmup_start)
        self.eta_min = self.base_step / 10 if eta_min is None else float(eta_min)

    @classmethod
    def for_grid(cls, grid, epsilon, warmup_steps=20, max_steps=2000, safety=0.25):
        """Cap at the explicit stability limit safety * min(h^2, eps^2)."""
        return cls(safety * min(grid.h ** 2, epsilon ** 2), warmup_steps=warmup_steps, max_steps=max_steps)

    def cap(self, step):
        if step < self.warmup_steps:
            return self.warmup_start + step * (self.base_step - self.warmup_start) / max(self.warmup_steps - 1, 1)
        if step >= self.max_steps:
            return self.eta_min
        return self.eta_min + 0.5 * (self.base_step - self.eta_min) * (
            1 + math.cos(math.pi * (step - self.warmup_steps) / (self.max_steps - self.warmup_steps)))

    def to_dict(self):
        return {"base_step": self.base_step, "warmup_steps": self.warmup_steps, "max_steps": self.max_steps,
                "warmup_start": self.warmup_start, "eta_min": self.eta_min}
