import numpy as np

from cddmpy.errors import TrainingError

BETA1_DEFAULT: float = 0.9
BETA2_DEFAULT: float = 0.999
EPSILON_DEFAULT: float = 1e-8
DECAY_MILESTONES: tuple[float, ...] = (0.6, 0.85)
DECAY_FACTOR: float = 0.5


def adam_update(
    params: np.ndarray,
    first_moment: np.ndarray,
    second_moment: np.ndarray,
    step_count: np.ndarray,
    grad: np.ndarray,
    lr: float,
    *,
    beta1: float = BETA1_DEFAULT,
    beta2: float = BETA2_DEFAULT,
    eps: float = EPSILON_DEFAULT,
    stage: str = "optimizer",
) -> None:
    """In-place adaptive-moment step on flat arrays."""
    if grad.shape != params.shape:
        raise ValueError(f"`grad` shape {grad.shape} != `params` {params.shape}.")
    if not np.all(np.isfinite(grad)):
        raise TrainingError(
            "non-finite gradient", stage=stage, step=int(step_count[0])
        )

    step_count[0] += 1
    step: int = int(step_count[0])
    first_moment *= beta1
    first_moment += (1.0 - beta1) * grad
    second_moment *= beta2
    second_moment += (1.0 - beta2) * np.square(grad)

    first_hat: np.ndarray = first_moment / (1.0 - beta1**step)
    second_hat: np.ndarray = second_moment / (1.0 - beta2**step)
    params -= lr * first_hat / (np.sqrt(second_hat) + eps)


def learning_rate_at(step: int, total_steps: int, base_lr: float) -> float:
    """Step decay: halve at 60% and again at 85% of training."""
    lr: float = base_lr
    for milestone in DECAY_MILESTONES:
        if step >= milestone * total_steps:
            lr *= DECAY_FACTOR
    return lr
