"""End-to-end training of phase layers through the optical stack.

Gradients are computed by the adjoint method: the loss sensitivity at the
detector plane is pulled back through each propagation stage with the
conjugated transfer function and through each phase layer with the
conjugated modulation, turning cached forward fields into exact per-pixel
phase derivatives. Optimization is Adam with a cosine learning-rate
schedule over epochs.

All batch reductions run in a fixed sample order, so a (seed, config,
data) triple reproduces a run bit for bit on one platform.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import kernels
from .fields import ComplexField, EncodeSpec, GridSpec
from .network import OpticalNetwork, random_init
from .propagation import adjoint_propagate_array, cached_transfer_function, propagate_array
from .readout import DegenerateScoresError, DetectorLayout, batch_class_scores

TWO_PI = 2.0 * np.pi

# Encoding used when none is supplied: 28x28 inputs upsampled 3x and
# centered, leaving a zero border that damps periodic wrap-around.
DEFAULT_ENCODE = EncodeSpec(upsample=3)


@dataclass
class AdamState:
    """First/second-moment accumulators and step counter, one pair per layer."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros(cls, net: OpticalNetwork) -> "AdamState":
        shape = net.grid.shape
        return cls(
            m=[np.zeros(shape) for _ in net.layers],
            v=[np.zeros(shape) for _ in net.layers],
            t=0,
        )

    def copy(self) -> "AdamState":
        return AdamState([a.copy() for a in self.m], [a.copy() for a in self.v], self.t)


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 128
    base_lr: float = 0.02
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    temperature: float = 0.1
    normalize_scores: bool = True
    phase_noise_sigma: float = 0.0
    seed: int = 0
    eval_every: int = 1

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.base_lr <= 0:
            raise ValueError("base_lr must be positive")
        if self.phase_noise_sigma < 0:
            raise ValueError("phase_noise_sigma must be >= 0")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    lr: float
    test_accuracy: float | None
    seconds: float


@dataclass
class MetricsLog:
    rows: list[EpochRecord] = dc_field(default_factory=list)

    CSV_HEADER = "epoch,loss,lr,test_accuracy,seconds"

    def append(self, row: EpochRecord) -> None:
        if self.rows and row.epoch <= self.rows[-1].epoch:
            raise ValueError("epochs must be strictly increasing")
        self.rows.append(row)

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            acc = "" if r.test_accuracy is None else f"{r.test_accuracy:.6f}"
            lines.append(f"{r.epoch},{r.loss:.10g},{r.lr:.10g},{acc},{r.seconds:.3f}")
        return "\n".join(lines) + "\n"


@dataclass
class TrainResult:
    network: OpticalNetwork
    metrics: MetricsLog
    optimizer_state: AdamState
    epoch: int


def cosine_lr(epoch: int, total_epochs: int, base_lr: float) -> float:
    """Half-cosine decay from ``base_lr`` at epoch 0 to 0 at ``total_epochs``."""
    if not 0 <= epoch <= total_epochs:
        raise ValueError(f"epoch {epoch} outside [0, {total_epochs}]")
    return base_lr * 0.5 * (1.0 + np.cos(np.pi * epoch / total_epochs))


# ---------------------------------------------------------------------------
# batched forward / adjoint engine (arrays shaped (batch, ny, nx))
# ---------------------------------------------------------------------------


def encode_batch(
    images: np.ndarray, grid: GridSpec, spec: EncodeSpec
) -> np.ndarray:
    """Vectorized square-root encoding of a stack of images in [0, 1].

    Mirrors :func:`donn.fields.encode_input` sample by sample; every
    output field is normalized to ``spec.target_power``.
    """
    imgs = np.asarray(images, dtype=np.float64)
    if imgs.ndim != 3:
        raise ValueError(f"expected (batch, h, w) images, got {imgs.shape}")
    if imgs.max() > 1.0 or imgs.min() < 0.0:
        raise ValueError("image values must lie in [0, 1]")
    if spec.upsample > 1:
        imgs = np.repeat(np.repeat(imgs, spec.upsample, axis=1), spec.upsample, axis=2)
    b, h, w = imgs.shape
    if spec.offset is None:
        x0 = (grid.nx - w) // 2
        y0 = (grid.ny - h) // 2
    else:
        x0, y0 = spec.offset
    if x0 < 0 or y0 < 0 or x0 + w > grid.nx or y0 + h > grid.ny:
        raise ValueError("image footprint exceeds grid")
    amp = np.sqrt(imgs)
    power = np.einsum("bij,bij->b", amp, amp)
    if np.any(power == 0.0):
        raise ValueError("degenerate input: zero total power")
    amp *= np.sqrt(spec.target_power / power)[:, None, None]
    values = np.zeros((b, grid.ny, grid.nx), dtype=np.complex128)
    values[:, y0 : y0 + h, x0 : x0 + w] = amp * np.exp(1j * spec.phase)
    return values


def _forward_batch(
    net: OpticalNetwork,
    values: np.ndarray,
    keep_post: bool,
    noise_sigma: float = 0.0,
    noise_rng: np.random.Generator | None = None,
):
    """Run a batch through the stack.

    Returns ``(output, post_fields, eff_phases)`` where ``post_fields``
    holds the field right after each modulation (what the phase gradient
    needs) and ``eff_phases`` the phase actually applied per layer, which
    differs from the stored parameters only under noise injection.
    """
    grid = net.grid
    if net.input_distance > 0.0:
        values = propagate_array(
            values, cached_transfer_function(grid, net.input_distance)
        )
    post_fields: list[np.ndarray] = []
    eff_phases: list[np.ndarray] = []
    for layer, dist in zip(net.layers, net.distances):
        if noise_sigma > 0.0:
            eff = layer.phase[None, :, :] + noise_sigma * noise_rng.standard_normal(
                values.shape
            )
            values = kernels.apply_phase_per_sample(values, eff, 1.0)
        else:
            eff = layer.phase
            values = kernels.apply_phase(values, eff, 1.0)
        if keep_post:
            post_fields.append(values)
            eff_phases.append(eff)
        values = propagate_array(values, cached_transfer_function(grid, dist))
    return values, post_fields, eff_phases


def _batch_cross_entropy(
    scores: np.ndarray, labels: np.ndarray, temperature: float, normalize: bool
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized loss and exact d(loss)/d(scores), shapes (B,) and (B, C)."""
    b = scores.shape[0]
    rows = np.arange(b)
    if normalize:
        totals = scores.sum(axis=1)
        if np.any(totals <= 0.0):
            raise DegenerateScoresError(
                "degenerate scores: no detector region received energy"
            )
        s_hat = scores / totals[:, None]
    else:
        s_hat = scores
    z = s_hat / temperature
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=1, keepdims=True)
    losses = -np.log(p[rows, labels])
    grad = p.copy()
    grad[rows, labels] -= 1.0
    grad /= temperature
    if normalize:
        grad = (grad - np.einsum("bc,bc->b", grad, s_hat)[:, None]) / totals[:, None]
    return losses, grad


def _pixel_sensitivity(
    dl_dscores: np.ndarray, layout: DetectorLayout, shape: tuple[int, ...]
) -> np.ndarray:
    """Spread per-class score sensitivities over their detector pixels."""
    g = np.zeros(shape)
    for c, (x0, y0, x1, y1) in enumerate(layout.regions):
        g[:, y0 : y1 + 1, x0 : x1 + 1] = dl_dscores[:, c, None, None]
    return g


def _loss_and_gradients_batch(
    net: OpticalNetwork,
    values: np.ndarray,
    labels: np.ndarray,
    layout: DetectorLayout,
    temperature: float,
    normalize: bool,
    noise_sigma: float = 0.0,
    noise_rng: np.random.Generator | None = None,
) -> tuple[float, list[np.ndarray], np.ndarray]:
    """Mean loss, mean per-layer phase gradients, and raw scores for a batch."""
    out, post_fields, eff_phases = _forward_batch(
        net, values, keep_post=True, noise_sigma=noise_sigma, noise_rng=noise_rng
    )
    b = values.shape[0]
    intensity = kernels.intensity(out)
    scores = batch_class_scores(intensity, layout)
    losses, dl_ds = _batch_cross_entropy(scores, labels, temperature, normalize)

    # Seed of the adjoint pass: dL/dU* = (dL/dI) * U at the detector plane.
    adjoint = _pixel_sensitivity(dl_ds, layout, out.shape) * out

    grads: list[np.ndarray] = [None] * net.depth
    for idx in range(net.depth - 1, -1, -1):
        tf = cached_transfer_function(net.grid, net.distances[idx])
        adjoint = adjoint_propagate_array(adjoint, tf)
        grads[idx] = kernels.phase_gradient(post_fields[idx], adjoint) / b
        if idx > 0:
            eff = eff_phases[idx]
            if eff.ndim == 3:
                adjoint = kernels.apply_phase_per_sample(adjoint, eff, -1.0)
            else:
                adjoint = kernels.apply_phase(adjoint, eff, -1.0)
    return float(losses.mean()), grads, scores


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def loss_and_gradients(
    net: OpticalNetwork,
    field: ComplexField,
    label: int,
    layout: DetectorLayout,
    temperature: float = 0.1,
    normalize: bool = True,
) -> tuple[float, list[np.ndarray]]:
    """Loss and exact d(loss)/d(phase) for one sample.

    The returned per-layer arrays are the derivative of the cross-entropy
    loss with respect to each stored phase value; they match central
    finite differences of the same loss.
    """
    if field.grid != net.grid or layout.grid != net.grid:
        raise ValueError("field, layout, and network must share one grid")
    loss, grads, _ = _loss_and_gradients_batch(
        net,
        field.values[None, :, :],
        np.array([label]),
        layout,
        temperature,
        normalize,
    )
    return loss, grads


def adam_step(
    net: OpticalNetwork,
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[OpticalNetwork, AdamState]:
    """One bias-corrected Adam update; phases re-wrap to [0, 2*pi).

    Functional: returns a new network and state, leaving the inputs
    untouched.
    """
    if lr <= 0:
        raise ValueError("lr must be positive")
    if len(grads) != net.depth:
        raise ValueError(f"{len(grads)} gradients for {net.depth} layers")
    new_state = state.copy()
    new_state.t += 1
    phases = []
    for i, layer in enumerate(net.layers):
        g = np.asarray(grads[i], dtype=np.float64)
        if g.shape != net.grid.shape:
            raise ValueError(f"gradient {i} shape {g.shape} != {net.grid.shape}")
        p = layer.phase.copy()
        kernels.adam_update(
            p, g, new_state.m[i], new_state.v[i], new_state.t, lr, beta1, beta2, eps
        )
        phases.append(p)
    return net.with_phases(phases), new_state


def evaluate(
    net: OpticalNetwork,
    images: np.ndarray,
    labels: np.ndarray,
    layout: DetectorLayout,
    encode: EncodeSpec = DEFAULT_ENCODE,
    batch_size: int = 256,
) -> tuple[float, np.ndarray]:
    """Accuracy and per-class confusion counts over a dataset.

    ``confusion[i, j]`` counts samples of true class i predicted as j.
    """
    n = len(labels)
    if n == 0:
        raise ValueError("empty dataset")
    n_classes = layout.n_classes
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    correct = 0
    for start in range(0, n, batch_size):
        stop = min(start + batch_size, n)
        values = encode_batch(_to_unit(images[start:stop]), net.grid, encode)
        out, _, _ = _forward_batch(net, values, keep_post=False)
        scores = batch_class_scores(kernels.intensity(out), layout)
        pred = np.argmax(scores, axis=1)
        truth = np.asarray(labels[start:stop], dtype=np.int64)
        correct += int((pred == truth).sum())
        np.add.at(confusion, (truth, pred), 1)
    return correct / n, confusion


def _to_unit(images: np.ndarray) -> np.ndarray:
    """Map uint8 images to [0, 1]; pass float images through."""
    images = np.asarray(images)
    if images.dtype == np.uint8:
        return images.astype(np.float64) / 255.0
    return images


def train(
    net: OpticalNetwork,
    train_images: np.ndarray,
    train_labels: np.ndarray,
    test_images: np.ndarray | None,
    test_labels: np.ndarray | None,
    layout: DetectorLayout,
    config: TrainConfig,
    encode: EncodeSpec = DEFAULT_ENCODE,
    initial_state: AdamState | None = None,
    start_epoch: int = 0,
    log_fn=None,
) -> TrainResult:
    """Train a network for ``config.epochs`` epochs of mini-batch Adam.

    The batch gradient is the arithmetic mean over the batch, accumulated
    in a fixed order. When ``phase_noise_sigma > 0``, fresh Gaussian
    phase perturbations are injected into every training forward pass
    (regularization against fabrication error); the stored parameters and
    evaluation passes are never perturbed. A non-finite loss aborts with
    a diagnostic rather than being skipped.
    """
    n = len(train_labels)
    if n == 0:
        raise ValueError("empty training dataset")
    ss = np.random.SeedSequence(config.seed)
    shuffle_ss, noise_ss = ss.spawn(2)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    noise_rng = np.random.default_rng(noise_ss)

    state = initial_state.copy() if initial_state is not None else AdamState.zeros(net)
    metrics = MetricsLog()
    current = net
    train_images = _to_unit(train_images)
    labels_arr = np.asarray(train_labels, dtype=np.int64)

    for epoch in range(start_epoch, config.epochs):
        t0 = time.perf_counter()
        lr = cosine_lr(epoch, config.epochs, config.base_lr)
        perm = shuffle_rng.permutation(n)
        losses = []
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            values = encode_batch(train_images[idx], current.grid, encode)
            loss, grads, _ = _loss_and_gradients_batch(
                current,
                values,
                labels_arr[idx],
                layout,
                config.temperature,
                config.normalize_scores,
                noise_sigma=config.phase_noise_sigma,
                noise_rng=noise_rng,
            )
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss {loss!r} at epoch {epoch}, "
                    f"step {state.t}: aborting"
                )
            current, state = adam_step(
                current, grads, state, lr, config.beta1, config.beta2, config.eps
            )
            losses.append(loss)

        acc = None
        last = epoch == config.epochs - 1
        if test_labels is not None and len(test_labels) and (
            (epoch + 1) % config.eval_every == 0 or last
        ):
            acc, _ = evaluate(current, test_images, test_labels, layout, encode)
        row = EpochRecord(
            epoch=epoch,
            loss=float(np.mean(losses)),
            lr=lr,
            test_accuracy=acc,
            seconds=time.perf_counter() - t0,
        )
        metrics.append(row)
        if log_fn is not None:
            log_fn(row)
    return TrainResult(current, metrics, state, config.epochs)


def depth_sweep(
    depths: list[int],
    train_images: np.ndarray,
    train_labels: np.ndarray,
    test_images: np.ndarray,
    test_labels: np.ndarray,
    layout: DetectorLayout,
    config: TrainConfig,
    grid: GridSpec,
    layer_distance: float,
    network_seed: int = 0,
    encode: EncodeSpec = DEFAULT_ENCODE,
    log_fn=None,
) -> list[tuple[int, float]]:
    """Train one network per depth under identical budgets; report accuracy.

    The trend is reported, not asserted: extra mixing stages usually help
    less and less once the output pattern is organized.
    """
    if not depths:
        raise ValueError("depths must be nonempty")
    table = []
    for depth in depths:
        net = random_init(grid, depth, [layer_distance] * depth, network_seed)
        result = train(
            net,
            train_images,
            train_labels,
            test_images,
            test_labels,
            layout,
            config,
            encode,
            log_fn=log_fn,
        )
        acc, _ = evaluate(result.network, test_images, test_labels, layout, encode)
        table.append((depth, acc))
    return table
