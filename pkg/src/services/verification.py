"""Self-check suite behind ``snapdiff verify``."""

import time
from collections.abc import Callable
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import orjson
import structlog

from src.diffusion.config import DiffusionConfig, FrameworkVariant
from src.diffusion.framework import (
    Scalings,
    denoise,
    forward_process,
    loss_d,
    loss_f,
    scalings,
    train_target,
)
from src.models.fit.accounting import forward_macs
from src.models.fit.config import FitConfig, PatchGeometry
from src.models.fit.network import FitNetwork
from src.sampling.config import SamplerConfig
from src.sampling.denoisers import GaussianOracleDenoiser
from src.sampling.sampler import sample
from src.sampling.schedule import karras_schedule
from src.snr.lab import snr_grid
from src.tensor import ops
from src.tensor.context import precision, serial_mode
from src.tensor.gradcheck import grad_check
from src.tensor.tensor import Tensor
from src.utils.metrics import CsvWriter

logger = structlog.get_logger(__name__)

CHECK_COLUMNS = ("name", "passed", "value", "threshold", "seconds", "detail")

SCALING_NAMES = ("c_in", "c_skip", "c_nrm", "w", "lam")
INJECTED_SIGMA_IN_FACTOR = 1.5


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    seconds: float = 0.0
    detail: str = ""


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-300)
    return float(np.max(np.abs(a - b) / denom))


def sigma_grid(points: int = 100, low: float = 0.002, high: float = 80.0) -> np.ndarray:
    return np.geomspace(low, high, points)


def reference_edm_heun(
    denoiser: Callable[[np.ndarray, float], np.ndarray], x: np.ndarray, sigmas: np.ndarray
) -> np.ndarray:
    """Karras et al.'s deterministic second-order sampler, unscaled."""
    for sigma, sigma_next in zip(sigmas[:-1], sigmas[1:]):
        d = (x - denoiser(x, sigma)) / sigma
        x_next = x + (sigma_next - sigma) * d
        if sigma_next > 0:
            d_next = (x_next - denoiser(x_next, sigma_next)) / sigma_next
            x_next = x + (sigma_next - sigma) * 0.5 * (d + d_next)
        x = x_next
    return x


def check_framework_reduction() -> CheckResult:
    """At sigma_in = 1 every quantity matches the reference EDM formulation."""
    sigma = sigma_grid()
    scaled = DiffusionConfig(sigma_in=1.0)
    edm = DiffusionConfig(sigma_in=1.0, variant=FrameworkVariant.EDM)
    ref = Scalings.for_reference_edm(sigma, scaled.sigma_data)
    errors = []
    for cfg in (scaled, edm):
        sc = scalings(sigma, cfg)
        errors += [rel_err(getattr(sc, name), getattr(ref, name)) for name in SCALING_NAMES]
        errors.append(rel_err(np.abs(sc.c_out), ref.c_out))

    rng = np.random.default_rng(0)
    x = rng.standard_normal((100, 4))
    eps = rng.standard_normal((100, 4))
    f = rng.standard_normal((100, 4))
    x_sigma = forward_process(x, sigma, eps, scaled)
    errors.append(rel_err(x_sigma, x + sigma[:, None] * eps))
    errors.append(rel_err(train_target(x, eps, sigma, scaled), -train_target(x, eps, sigma, edm)))
    # The two columns disagree on the sign of c_out, hence of F.
    d_ref = ref.c_skip[:, None] * x_sigma + ref.c_out[:, None] * f
    errors.append(rel_err(denoise(-f, x_sigma, sigma, scaled), d_ref))
    errors.append(rel_err(denoise(f, x_sigma, sigma, edm), d_ref))
    lam_ref = ref.lam[:, None]
    ref_loss = float(np.mean(np.sum(lam_ref * (d_ref - x) ** 2, axis=1)))
    errors.append(rel_err(loss_d(d_ref, x, sigma, scaled), ref_loss))
    errors.append(rel_err(loss_f(-f, x, eps, sigma, scaled), ref_loss))

    oracle = GaussianOracleDenoiser(scaled)
    sigmas = karras_schedule(16, scaled.sigma_min, scaled.sigma_max)
    x0 = rng.standard_normal(64) * sigmas[0]
    ours = sample(oracle, None, SamplerConfig(steps=16, threshold_percentile=None), scaled, x0.shape, x_init=x0)
    theirs = reference_edm_heun(lambda x, s: oracle(x, s)[0], x0, sigmas)
    errors.append(rel_err(ours, theirs))

    value = max(errors)
    return CheckResult("framework_reduction", value <= 1e-12, value, 1e-12)


def check_loss_equivalence(inject_bug: bool = False, tuples: int = 1000) -> CheckResult:
    """lambda ||D - x||^2 equals w ||F - c_nrm F_tgt||^2 for arbitrary F."""
    rng = np.random.default_rng(1)
    worst = 0.0
    for sigma_in in (1.0, 2.0, 4.0, 32.0):
        cfg = DiffusionConfig(sigma_in=sigma_in)
        d_cfg = cfg.model_copy(update={"sigma_in": sigma_in * INJECTED_SIGMA_IN_FACTOR}) if inject_bug else cfg
        sigma = np.exp(rng.uniform(np.log(cfg.sigma_min), np.log(cfg.sigma_max), tuples))
        x = rng.standard_normal((tuples, 3))
        eps = rng.standard_normal((tuples, 3))
        f = rng.standard_normal((tuples, 3))
        x_sigma = forward_process(x, sigma, eps, cfg)
        d = denoise(f, x_sigma, sigma, d_cfg)
        sc = scalings(sigma, cfg)
        lhs = sc.lam * np.sum((d - x) ** 2, axis=1)
        target = sc.c_nrm[:, None] * train_target(x, eps, sigma, cfg)
        rhs = sc.w * np.sum((f - target) ** 2, axis=1)
        worst = max(worst, rel_err(lhs, rhs))
    detail = "sigma_in perturbed in D" if inject_bug else ""
    return CheckResult("loss_equivalence", worst <= 1e-8, worst, 1e-8, detail=detail)


def check_v_prediction() -> CheckResult:
    """With sigma_data = 1, F_tgt = eps - sigma x and lambda = 1 + 1/sigma^2."""
    cfg = DiffusionConfig(sigma_in=4.0)
    sigma = sigma_grid()
    rng = np.random.default_rng(2)
    x = rng.standard_normal((sigma.size, 5))
    eps = rng.standard_normal((sigma.size, 5))
    exact_target = float(np.max(np.abs(train_target(x, eps, sigma, cfg) - (eps - sigma[:, None] * x))))
    lam_err = rel_err(scalings(sigma, cfg).lam, 1.0 + 1.0 / sigma**2)
    value = max(exact_target, lam_err)
    return CheckResult("v_prediction", value <= 1e-15, value, 1e-15)


def check_spurious_term() -> CheckResult:
    """The naive EDM target explodes at small sigma under input scaling; ours stays bounded."""
    edm = DiffusionConfig(sigma_in=4.0, variant=FrameworkVariant.EDM)
    scaled = DiffusionConfig(sigma_in=4.0)
    x = np.ones(1)
    zero = np.zeros(1)
    ratio = float(
        np.abs(train_target(x, zero, 1e-3, edm)[0]) / np.abs(train_target(x, zero, 0.1, edm)[0])
    )
    sigma = sigma_grid(200, scaled.sigma_min, scaled.sigma_max)
    ones = np.ones((sigma.size, 1))
    bounded = np.abs(train_target(ones, ones, sigma, scaled)[:, 0])
    limit = scaled.sigma_data**2 + scaled.sigma_max * 1.0
    ok = ratio >= 70.0 and bool(np.all(bounded <= limit))
    return CheckResult("spurious_term", ok, ratio, 70.0, detail=f"max bounded target {bounded.max():.3f}")


def check_unit_variance(samples: int = 1_000_000) -> CheckResult:
    rng = np.random.default_rng(3)
    cfg = DiffusionConfig(sigma_in=4.0)
    worst = 0.0
    for sigma in (0.01, 0.5, 5.0):
        x = cfg.sigma_data * rng.standard_normal(samples)
        eps = rng.standard_normal(samples)
        sc = scalings(sigma, cfg)
        var_in = float(np.var(sc.c_in * forward_process(x, sigma, eps, cfg)))
        var_tgt = float(np.var(sc.c_nrm * train_target(x, eps, sigma, cfg)))
        worst = max(worst, abs(var_in - 1.0), abs(var_tgt - 1.0))
    return CheckResult("unit_variance", worst <= 0.02, worst, 0.02)


def check_snr_law(trials: int = 100) -> CheckResult:
    rows = snr_grid((1, 4, 16), (1, 2), sigma=1.0, trials=trials, seed=0)
    law = max(abs(r.ratio / r.predicted_ratio - 1.0) for r in rows if not r.scaled)
    restored = max(abs(r.snr_avg / r.snr_reference - 1.0) for r in rows if r.scaled)
    ok = law <= 0.05 and restored <= 0.10
    return CheckResult("snr_law", ok, law, 0.05, detail=f"scaled vs reference {restored:.3f} (limit 0.10)")


def _primitive_cases(rng: np.random.Generator) -> dict[str, tuple[Callable[[Tensor], Tensor], np.ndarray]]:
    a = rng.standard_normal((3, 4))
    b = Tensor(rng.standard_normal((3, 4)))
    m = Tensor(rng.standard_normal((4, 5)))
    r34 = rng.standard_normal((3, 4))
    gain = Tensor(rng.standard_normal(4))
    bias = Tensor(rng.standard_normal(4))
    table = rng.standard_normal((5, 4))
    idx = np.array([0, 2, 2, 4])

    def weighted(t: Tensor) -> Tensor:
        return (t * rng_weights(t.shape)).sum()

    return {
        "add": (lambda t: weighted(ops.ewise("add", t, b)), a),
        "sub": (lambda t: weighted(ops.ewise("sub", t, b)), a),
        "mul": (lambda t: weighted(ops.ewise("mul", t, b)), a),
        "scale": (lambda t: weighted(ops.ewise("scale", t, 1.7)), a),
        "gelu": (lambda t: weighted(ops.gelu(t)), a),
        "div": (lambda t: weighted(t / (b * b + 1.0)), a),
        "exp": (lambda t: weighted(t.exp()), a),
        "tanh": (lambda t: weighted(t.tanh()), a),
        "matmul": (lambda t: weighted(ops.matmul(t, m)), a),
        "softmax": (lambda t: weighted(ops.softmax(t, axis=-1)), a),
        "layer_norm": (lambda t: weighted(ops.layer_norm(t, gain, bias)), a),
        "mean": (lambda t: weighted(t.mean(axis=0)), a),
        "transpose": (lambda t: weighted(t.reshape(2, 6).transpose(1, 0)), a),
        "broadcast_to": (lambda t: weighted(t.reshape(1, 3, 4).broadcast_to((2, 3, 4))), a),
        "concat": (lambda t: weighted(ops.concat([t, b * t], axis=0)), a),
        "take": (lambda t: weighted(ops.take(t, idx)), table),
        "dropout": (
            lambda t: weighted(ops.dropout(t, 0.3, np.random.default_rng(7), training=True)),
            r34,
        ),
    }


def rng_weights(shape: tuple[int, ...]) -> np.ndarray:
    """Fixed pseudo-random weights so each reduction has nonzero, uneven gradients."""
    return np.random.default_rng(list(shape) + [11]).uniform(0.5, 1.5, shape)


def sample_coordinates(sizes: dict[str, int], count: int, seed: int = 0) -> dict[str, list[int]]:
    """Seeded uniform draw of flat coordinates across all named tensors, grouped by name."""
    names = list(sizes)
    offsets = np.cumsum([0] + [sizes[n] for n in names])
    total = int(offsets[-1])
    picks = np.sort(np.random.default_rng(seed).choice(total, size=min(count, total), replace=False))
    chosen: dict[str, list[int]] = {}
    for flat in picks:
        k = int(np.searchsorted(offsets, flat, side="right")) - 1
        chosen.setdefault(names[k], []).append(int(flat - offsets[k]))
    return chosen


def check_primitive_gradients() -> CheckResult:
    """Every coordinate of every primitive case against central differences."""
    worst, worst_name = 0.0, ""
    with precision("float64"), serial_mode():
        for name, (f, x) in _primitive_cases(np.random.default_rng(4)).items():
            err = grad_check(f, Tensor(x, dtype=np.float64), h=1e-5)
            if err > worst:
                worst, worst_name = err, name
    return CheckResult("grad_primitives", worst <= 1e-5, worst, 1e-5, detail=f"worst: {worst_name}")


def toy_fit_config() -> FitConfig:
    """Two-block network small enough for finite differences."""
    return FitConfig(
        input_shape=(2, 8, 8, 1),
        patch=(1, 4, 4),
        group=(2, 1, 1),
        patch_channels=8,
        latent_count=4,
        latent_channels=8,
        blocks=2,
        global_layers=1,
        patch_head_channels=4,
        latent_head_channels=4,
        ffn_mult=2,
        cond_channels=8,
        n_classes=2,
        dropout=0.0,
        zero_init=False,
    )


def fit_loss_closure(
    cfg: FitConfig, name: str, seed: int = 0
) -> tuple[Callable[[Tensor], Tensor], Tensor]:
    """Loss of the toy network as a function of one parameter tensor (float64)."""
    network = FitNetwork(cfg)
    base = network.init(seed).tensors(dtype=np.float64)
    dcfg = DiffusionConfig(sigma_in=2.0)
    rng = np.random.default_rng(seed + 1)
    T, H, W, C = cfg.input_shape
    x = rng.standard_normal((2, T, C, H, W))
    eps = rng.standard_normal(x.shape)
    sigma = np.array([0.3, 2.0])
    x_in = scalings(sigma, dcfg).c_in[:, None, None, None, None] * forward_process(x, sigma, eps, dcfg)
    nu = np.array([8.0, np.inf])
    resolution = np.array([[H, W], [H, W]], dtype=np.float64)
    cond_id = np.array([1, 0])

    def f(t: Tensor) -> Tensor:
        p = dict(base)
        p[name] = t
        out, _ = network.forward(p, x_in, sigma, nu, resolution, cond_id)
        return loss_f(out, x, eps, sigma, dcfg)

    return f, Tensor(base[name].data, dtype=np.float64)


FIT_CHECKED_COORDINATES = 64


def check_fit_gradients(count: int = FIT_CHECKED_COORDINATES, seed: int = 0) -> CheckResult:
    """A seeded random subset of all toy-network parameters against central differences."""
    worst, worst_name = 0.0, ""
    cfg = toy_fit_config()
    sizes = {name: int(a.size) for name, a in FitNetwork(cfg).init(0).items()}
    with precision("float64"), serial_mode():
        for name, indices in sample_coordinates(sizes, count, seed).items():
            f, point = fit_loss_closure(cfg, name)
            err = grad_check(f, point, h=1e-5, indices=indices)
            if err > worst:
                worst, worst_name = err, name
    return CheckResult("grad_fit", worst <= 1e-4, worst, 1e-4, detail=f"worst: {worst_name}")


def check_gaussian_oracle(samples: int = 10_000) -> CheckResult:
    dcfg = DiffusionConfig(sigma_in=4.0)
    oracle = GaussianOracleDenoiser(dcfg)
    x0 = np.random.default_rng(5).standard_normal(samples) * dcfg.sigma_max
    exact = oracle.exact_flow(x0, 0.0) * dcfg.sigma_in
    errors = {}
    for steps in (64, 256):
        scfg = SamplerConfig(steps=steps, threshold_percentile=None)
        out = sample(oracle, None, scfg, dcfg, x0.shape, x_init=x0)
        errors[steps] = float(np.max(np.abs(out - exact)))
        if steps == 64:
            mean, var = float(np.mean(out)), float(np.var(out))
    var_err = abs(var / dcfg.sigma_data**2 - 1.0)
    ok = abs(mean) < 0.05 and var_err <= 0.05 and errors[256] <= errors[64]
    detail = f"mean={mean:.4f} err64={errors[64]:.2e} err256={errors[256]:.2e}"
    return CheckResult("gaussian_oracle", ok, var_err, 0.05, detail=detail)


def check_token_arithmetic() -> CheckResult:
    first = PatchGeometry((16, 40, 64, 3), (1, 4, 4)).num_tokens
    largest = PatchGeometry((16, 288, 512, 3), (1, 4, 4)).num_tokens
    grouped = PatchGeometry((16, 40, 64, 3), (1, 4, 4), (16, 5, 4))
    ok = first == 2560 and largest == 147_456 and grouped.num_groups == 8 and grouped.tokens_per_group == 320
    return CheckResult("token_arithmetic", ok, float(first), 2560.0, detail=f"largest={largest}")


def check_mac_scaling() -> CheckResult:
    base = FitConfig(input_shape=(2, 16, 16, 1), group=(2, 2, 2), latent_count=16, blocks=1, global_layers=1)
    wide = FitConfig(**{**base.model_dump(), "input_shape": (2, 16, 32, 1)})
    growth = forward_macs(wide) / forward_macs(base)
    return CheckResult("mac_scaling", growth < 2.2, growth, 2.2)


class VerificationService:
    """Runs every self-check and reports a pass/fail table."""

    def __init__(self, inject_bug: bool = False):
        self.inject_bug = inject_bug

    def checks(self) -> list[Callable[[], CheckResult]]:
        return [
            check_framework_reduction,
            lambda: check_loss_equivalence(self.inject_bug),
            check_v_prediction,
            check_spurious_term,
            check_unit_variance,
            check_snr_law,
            check_primitive_gradients,
            check_fit_gradients,
            check_gaussian_oracle,
            check_token_arithmetic,
            check_mac_scaling,
        ]

    def run(self) -> list[CheckResult]:
        results = []
        for check in self.checks():
            started = time.perf_counter()
            result = check()
            result.seconds = time.perf_counter() - started
            logger.info("check_done", name=result.name, passed=result.passed, value=result.value)
            results.append(result)
        return results


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check'.ljust(width)}  status  {'value':>12}  {'threshold':>10}  seconds"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(
            f"{r.name.ljust(width)}  {status:6}  {r.value:12.4e}  {r.threshold:10.3g}  {r.seconds:7.2f}"
            + (f"  {r.detail}" if r.detail else "")
        )
    return "\n".join(lines)


def write_results_csv(results: list[CheckResult], path: str | Path) -> None:
    with CsvWriter(path, CHECK_COLUMNS) as writer:
        for r in results:
            writer.write(asdict(r))


def write_results_json(results: list[CheckResult], path: str | Path) -> None:
    Path(path).write_bytes(orjson.dumps([asdict(r) for r in results], option=orjson.OPT_INDENT_2))
