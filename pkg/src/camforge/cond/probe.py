"""Linear information-flow probe: recover the continuous camera axes from
the modulated time embedding.

The probe freezes a randomly initialized stack (non-safe-start, so the
time pathway carries signal), computes t_ctx for a mini dataset of
(camera vector, directive text, content text) samples, standardizes the
features, and fits a linear readout of the six continuous vector entries
by plain gradient descent.  The gate is forced to 1 so the probe isolates
the parameter pathway; the gate head is exercised by its own tests.

The camera plane holds three broadcast channels, so at most three
continuous axes are recoverable at once; the bundled dataset varies
exposure, cct and zoom, which project onto distinct channels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..calibration import CameraVector, StyleRegistry, calibrate, load_registry
from ..directive import parse_directive
from ..errors import DivergenceError
from .params import CondParams, init_cond_params
from .stack import forward

PROBE_SAMPLE_COUNT = 64
PROBE_STEPS = 2000
PROBE_LR = 1.0  # in units of the inverse gradient Lipschitz constant

_WORDS = (
    "street market dusk bridge harbor lantern cyclist alley fog neon cafe "
    "rooftop river tram kiosk plaza statue awning gull cobble"
).split()


@dataclass
class ProbeSample:
    vector: CameraVector
    directive_text: str
    content_text: str


@dataclass
class ProbeResult:
    losses: list[float]
    final_mse: float
    oracle_mse: float  # closed-form least squares on the same features
    steps: int


def make_probe_dataset(
    count: int = PROBE_SAMPLE_COUNT,
    seed: int = 0,
    registry: StyleRegistry | None = None,
) -> list[ProbeSample]:
    """Directive-derived samples varying exposure, cct and zoom."""
    registry = registry or load_registry()
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(count):
        ev = round(float(rng.uniform(-3.0, 3.0)), 2)
        kelvin = int(rng.integers(2000, 10001))
        zoom = round(float(rng.uniform(1.0, 4.0)), 2)
        text = f"[CONTROL: exposure={ev:+g}EV, cct={kelvin}K, zoom={zoom:g}x]"
        directive = parse_directive(text)
        vector = calibrate(directive, registry)
        scene = " ".join(rng.choice(_WORDS, 8))
        samples.append(ProbeSample(vector, text, f"photo of a {scene}"))
    return samples


def probe_features(
    samples: list[ProbeSample], params: CondParams, force_gate: float | None = 1.0
) -> np.ndarray:
    """t_ctx for every sample with t = 0, batched through one forward."""
    t = np.zeros((len(samples), params.config.d_time))
    ctx = forward(
        [s.vector for s in samples],
        [s.directive_text for s in samples],
        [s.content_text for s in samples],
        t,
        params,
        gate_override=force_gate,
        retain_tape=False,
    )
    return ctx.t_ctx


def _standardize(features: np.ndarray) -> np.ndarray:
    mu = features.mean(axis=0, keepdims=True)
    sd = features.std(axis=0, keepdims=True)
    return (features - mu) / np.maximum(sd, 1e-8)


def probe_train(
    samples: list[ProbeSample],
    params: CondParams | None = None,
    steps: int = PROBE_STEPS,
    lr: float = PROBE_LR,
    seed: int = 0,
    shuffle_labels: bool = False,
) -> ProbeResult:
    """Gradient-descend a linear readout t_ctx -> continuous s entries.

    The step size is ``lr`` in units of the inverse gradient Lipschitz
    constant (top eigenvalue of the feature Gram matrix), so the descent
    is stable for lr < 2 regardless of feature correlation.
    ``shuffle_labels`` runs the permuted-label control on the same
    features.  Raises DivergenceError if the loss leaves the reals.
    """
    if len(samples) < 64:
        raise ValueError(f"probe needs >= 64 samples, got {len(samples)}")
    params = params or init_cond_params(seed=seed, safe_start=False)
    x = _standardize(probe_features(samples, params))
    y = np.stack([s.vector.continuous() for s in samples])
    if shuffle_labels:
        perm = np.random.default_rng(seed + 1).permutation(len(samples))
        y = y[perm]

    n, d = x.shape
    k = y.shape[1]
    lipschitz = 2.0 * float(np.linalg.eigvalsh(x.T @ x)[-1]) / (n * k)
    step = lr / lipschitz
    w = np.zeros((k, d))
    b = np.zeros(k)
    losses = []
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(steps):
            pred = x @ w.T + b
            err = pred - y
            loss = float(np.mean(err * err))
            if not np.isfinite(loss):
                raise DivergenceError(f"probe loss diverged at step {len(losses)}")
            losses.append(loss)
            scale = 2.0 / (n * k)
            w -= step * scale * (err.T @ x)
            b -= step * scale * err.sum(axis=0)

    # closed-form least squares on the identical frozen features
    design = np.concatenate([x, np.ones((n, 1))], axis=1)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = design @ coef - y
    oracle = float(np.mean(resid * resid))
    return ProbeResult(
        losses=losses, final_mse=losses[-1], oracle_mse=oracle, steps=steps
    )
