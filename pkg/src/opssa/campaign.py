"""Randomized verification campaigns and the extremal-state search.

Every trial is a pure function of ``(config, trial_index)``: its random
stream is seeded from ``trial_seed(master_seed, trial_index)``, so running
trials in parallel or in a different order yields the same records.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, TextIO

import numpy as np

from . import modular
from .modular import HermiticityAnomaly, SupportViolation
from .perspective import XLOGX, NEGLOG, SQUARE, convex_function, joint_convexity_trial, power
from .states import (
    StateSpec,
    format_real,
    generate,
    haar_state_vector,
    induced_state,
    make_rng,
    pure_to_state,
    random_projector,
    read_state,
    trial_seed,
    weyl_basis,
    write_state,
)
from .tensor import DEFAULT_TOL, DensityMatrix, ToleranceConfig, check_dims, min_eigenvalue

COMMANDS = (
    "verify-ssa",
    "verify-convexity",
    "verify-twirl",
    "sweep-projectors",
    "witness-nonhermitian",
    "search-extremal",
    "fixtures",
)
CONVEX_FUNCTIONS = (XLOGX, NEGLOG, SQUARE, power(1.5))

# A/B-only partial traces count as non-Hermitian above this defect.
GENERICITY_THRESHOLD = 1e-6
# Lowest value the extremal search may report without flagging a violation.
EXTREMAL_FLOOR = -1e-8


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CampaignConfig:
    command: str
    dims: tuple[int, ...] = (2, 2, 2)
    trials: int = 100
    master_seed: int = 0
    tolerances: ToleranceConfig = DEFAULT_TOL
    output_path: str | None = None
    kind: str | None = None
    function: str | None = None
    projectors: int = 10
    restarts: int = 20
    steps: int = 200
    ancilla: int = 1
    state_in: str | None = None
    state_out: str | None = None
    jobs: int = 1
    timing: bool = False

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; choose from {COMMANDS}")
        try:
            object.__setattr__(self, "dims", check_dims(self.dims))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.command == "search-extremal":
            if self.restarts < 1:
                raise ConfigError(f"restarts must be >= 1, got {self.restarts}")
            if self.steps < 0:
                raise ConfigError(f"steps must be >= 0, got {self.steps}")
        if self.command in ("verify-ssa", "verify-twirl", "sweep-projectors",
                            "witness-nonhermitian", "search-extremal") and len(self.dims) != 3:
            raise ConfigError(f"{self.command} needs three subsystems, got dims {list(self.dims)}")
        if self.kind is not None and self.kind not in SSA_KINDS:
            raise ConfigError(f"unknown state kind {self.kind!r}; choose from {tuple(SSA_KINDS)}")
        if self.function is not None:
            try:
                convex_function(self.function)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        if self.projectors < 1:
            raise ConfigError(f"projectors must be >= 1, got {self.projectors}")
        if self.ancilla < 1:
            raise ConfigError(f"ancilla must be >= 1, got {self.ancilla}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")


@dataclass
class TrialReport:
    trial_index: int
    seed: int
    dims: tuple[int, ...]
    state_kind: str
    scalars: dict[str, float] = field(default_factory=dict)
    verdict: str = "pass"
    anomaly: str | None = None
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def record(self, timing: bool = False) -> dict[str, Any]:
        out: dict[str, Any] = {
            "trial_index": self.trial_index,
            "seed": self.seed,
            "dims": list(self.dims),
            "state_kind": self.state_kind,
            "scalars": self.scalars,
            "verdict": self.verdict,
        }
        if self.anomaly is not None:
            out["anomaly"] = self.anomaly
        if timing:
            out["elapsed"] = self.elapsed
        return out


def dumps(obj: Any) -> str:
    """Compact JSON with every float written to 17 significant digits."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f'"{k}": {dumps(v)}' for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return {True: "true", False: "false", None: "null"}[obj]
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite scalar {obj!r} in report")
        return format_real(obj)
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# -- state selection -----------------------------------------------------

def _half(total: int) -> int:
    return max(1, total // 2)


SSA_KINDS: dict[str, Callable[[tuple[int, ...], int], StateSpec]] = {
    "haar-pure": lambda dims, seed: StateSpec("haar-pure", dims, seed),
    "induced-half": lambda dims, seed: StateSpec("induced-mixed", dims, seed, rank=_half(math.prod(dims))),
    "induced-full": lambda dims, seed: StateSpec("induced-mixed", dims, seed, rank=math.prod(dims)),
    "classical-diagonal": lambda dims, seed: StateSpec("classical-diagonal", dims, seed),
    "product-AB-C": lambda dims, seed: StateSpec("product-AB-C", dims, seed),
    "product-A-BC": lambda dims, seed: StateSpec("product-A-BC", dims, seed),
}
DEFAULT_CYCLE = ("haar-pure", "induced-half", "induced-full", "classical-diagonal")


def _trial_state(config: CampaignConfig, index: int, seed: int,
                 cycle: tuple[str, ...] = DEFAULT_CYCLE) -> tuple[str, DensityMatrix]:
    if config.state_in is not None:
        return "file", read_state(config.state_in, config.tolerances)
    kind = config.kind or cycle[index % len(cycle)]
    return kind, generate(SSA_KINDS[kind](config.dims, seed), config.tolerances)


# -- per-command trials ----------------------------------------------------

def ssa_scalars(rho: DensityMatrix, tol: ToleranceConfig) -> tuple[dict[str, float], bool]:
    t = modular.ssa_operator(rho, tol)
    cmi = modular.conditional_mutual_information(rho, tol)
    lo = min_eigenvalue(t)
    scalars = {
        "min_eigenvalue": lo,
        "tc_norm": float(np.linalg.norm(t.matrix)),
        "cmi": cmi,
        "trace_gap": float(np.trace(t.matrix).real) - cmi,
        "hermiticity_defect": t.defect,
    }
    ok = (lo >= -tol.psd_slack(t.matrix)
          and abs(scalars["trace_gap"]) <= tol.match_tol
          and cmi >= -tol.psd_tol
          and t.defect <= tol.hermiticity_tol)
    return scalars, ok


def _ssa_trial(config: CampaignConfig, index: int, seed: int) -> tuple[str, dict, bool]:
    kind, rho = _trial_state(config, index, seed)
    scalars, ok = ssa_scalars(rho, config.tolerances)
    return kind, scalars, ok


def _convexity_trial(config: CampaignConfig, index: int, seed: int) -> tuple[str, dict, bool]:
    tol = config.tolerances
    n = math.prod(config.dims)
    f = convex_function(config.function) if config.function else CONVEX_FUNCTIONS[index % len(CONVEX_FUNCTIONS)]
    rng = make_rng(seed)
    # ancilla 2n keeps sigma well conditioned for the x^2/sigma-type perspectives
    r1, s1, r2, s2 = (induced_state(n, 2 * n, rng) for _ in range(4))
    o = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    o /= np.linalg.norm(o)
    c = float(rng.uniform())
    margin = joint_convexity_trial((r1, s1), (r2, s2), c, o, f, tol)
    return f"convex-{f.name}", {"c": c, "convexity_margin": margin}, margin >= -tol.convexity_tol


def _twirl_trial(config: CampaignConfig, index: int, seed: int) -> tuple[str, dict, bool]:
    kind, rho = _trial_state(config, index, seed, ("induced-full", "induced-half", "haar-pure"))
    residual = float(np.linalg.norm(modular.twirl_A(rho).matrix - modular.maximally_mixed_A(rho).matrix))
    basis = weyl_basis(config.dims[0])
    gram = np.array([[np.trace(u @ v.conj().T) for v in basis.elements] for u in basis.elements])
    ortho = float(np.max(np.abs(gram - basis.d * np.eye(len(basis.elements)))))
    scalars = {"twirl_residual": residual, "basis_orthogonality_defect": ortho}
    return kind, scalars, residual <= config.tolerances.match_tol and ortho <= config.tolerances.match_tol


def _projector_trial(config: CampaignConfig, index: int, seed: int) -> tuple[str, dict, bool]:
    tol = config.tolerances
    kind, rho = _trial_state(config, index, seed)
    dc = config.dims[2]
    rng = make_rng(seed ^ 0x5EED)
    worst, gap, imag, count = math.inf, 0.0, 0.0, 0
    for rank in range(dc + 1):
        reps = config.projectors if 0 < rank < dc else 1
        for _ in range(reps):
            step = modular.proof_step_check(rho, random_projector(dc, rank, rng), tol)
            worst = min(worst, step.margin)
            gap = max(gap, abs(step.lhs - step.lhs_original))
            imag = max(imag, step.imag)
            count += 1
    scalars = {"worst_margin": worst, "lhs_gap": gap, "max_imag": imag, "projectors": count}
    ok = worst >= -tol.convexity_tol and gap <= tol.match_tol and imag <= tol.match_tol
    return kind, scalars, ok


def _witness_trial(config: CampaignConfig, index: int, seed: int) -> tuple[str, dict, bool]:
    tol = config.tolerances
    kind, rho = _trial_state(config, index, seed, ("induced-full", "induced-half", "haar-pure"))
    scalars = {}
    for traced in ("A", "B", "AB"):
        _, defect = modular.restricted_trace_witness(rho, traced, tol)
        scalars[f"defect_trace_{traced}"] = defect
    return kind, scalars, scalars["defect_trace_AB"] <= tol.hermiticity_tol


TRIALS = {
    "verify-ssa": _ssa_trial,
    "verify-convexity": _convexity_trial,
    "verify-twirl": _twirl_trial,
    "sweep-projectors": _projector_trial,
    "witness-nonhermitian": _witness_trial,
}


def run_trial(config: CampaignConfig, index: int) -> TrialReport:
    seed = trial_seed(config.master_seed, index)
    start = time.perf_counter()
    report = TrialReport(index, seed, config.dims, "")
    try:
        kind, scalars, ok = TRIALS[config.command](config, index, seed)
        report.state_kind = kind
        report.scalars = {k: float(v) for k, v in scalars.items()}
        report.verdict = "pass" if ok else "fail"
        if not all(math.isfinite(v) for v in report.scalars.values()):
            report.verdict, report.anomaly = "fail", "non-finite scalar"
            report.scalars = {k: v for k, v in report.scalars.items() if math.isfinite(v)}
    except (SupportViolation, HermiticityAnomaly) as exc:
        report.verdict = "fail"
        report.anomaly = f"{type(exc).__name__}: {exc}"
    report.elapsed = time.perf_counter() - start
    return report


# -- fixtures ------------------------------------------------------------

def fixture_reports(config: CampaignConfig) -> list[TrialReport]:
    """Closed-form checks: GHZ, Markov product states, maximally mixed."""
    tol = config.tolerances
    dims = config.dims
    d = dims[0] if len(set(dims)) == 1 else 2
    cases = [
        ("ghz", StateSpec("ghz", (d, d, d))),
        ("product-AB-C", StateSpec("product-AB-C", dims, trial_seed(config.master_seed, 1))),
        ("product-A-BC", StateSpec("product-A-BC", dims, trial_seed(config.master_seed, 2))),
        ("maximally-mixed", StateSpec("maximally-mixed", dims)),
    ]
    reports = []
    for index, (name, spec) in enumerate(cases):
        start = time.perf_counter()
        rho = generate(spec, tol)
        scalars, ok = ssa_scalars(rho, tol)
        t = modular.ssa_operator(rho, tol).matrix
        if name == "ghz":
            # T_C = (log d / d) 1 and I(A:C|B) = log d
            expected = math.log(d) / d * np.eye(d)
            scalars["tc_entry_error"] = float(np.max(np.abs(t - expected)))
            scalars["cmi_error"] = abs(scalars["cmi"] - math.log(d))
            ok = ok and scalars["tc_entry_error"] <= tol.match_tol and scalars["cmi_error"] <= tol.match_tol
        else:
            ok = ok and scalars["tc_norm"] <= 1e-10
        reports.append(TrialReport(index, spec.seed, spec.dims, name, scalars,
                                   "pass" if ok else "fail", None, time.perf_counter() - start))
    return reports


# -- extremal search -------------------------------------------------------

def _objective(psi: np.ndarray, dims: tuple[int, ...], tol: ToleranceConfig) -> tuple[float, DensityMatrix]:
    rho = DensityMatrix(pure_to_state(psi, math.prod(dims)), dims, tol)
    return min_eigenvalue(modular.ssa_operator(rho, tol)), rho


def _descent(config: CampaignConfig, index: int) -> tuple[TrialReport, np.ndarray]:
    """One random restart of accept-if-better perturbation descent.

    Perturbs the purifying amplitude vector by a complex Gaussian step,
    renormalizes, and keeps the move only if the smallest eigenvalue of T_C
    drops. The step grows on success and shrinks on failure.
    """
    tol = config.tolerances
    total = math.prod(config.dims)
    ancilla = config.ancilla
    seed = trial_seed(config.master_seed, index)
    rng = make_rng(seed)
    start = time.perf_counter()

    psi = haar_state_vector(total * ancilla, rng)
    best, _ = _objective(psi, config.dims, tol)
    step, accepted, rejected_anomalies = 0.1, 0, 0
    for _ in range(config.steps):
        trial = psi + step * (rng.standard_normal(psi.shape) + 1j * rng.standard_normal(psi.shape)) / math.sqrt(2 * psi.size)
        trial /= np.linalg.norm(trial)
        try:
            value, _ = _objective(trial, config.dims, tol)
        except (SupportViolation, HermiticityAnomaly):
            rejected_anomalies += 1
            step *= 0.5
            continue
        if value < best:
            psi, best, accepted = trial, value, accepted + 1
            step = min(step * 1.5, 1.0)
        else:
            step = max(step * 0.8, 1e-6)
    scalars = {"min_eigenvalue": best, "accepted_steps": accepted,
               "anomalous_steps": rejected_anomalies, "final_step": step}
    report = TrialReport(index, seed, config.dims, f"purified(ancilla={ancilla})", scalars,
                         "pass" if best >= EXTREMAL_FLOOR else "fail", None, time.perf_counter() - start)
    return report, psi


def search_extremal(config: CampaignConfig) -> tuple[list[TrialReport], int, np.ndarray]:
    """Run every restart; return the per-restart reports, the index of the
    best one, and its state matrix."""
    if config.command != "search-extremal":
        raise ConfigError("search_extremal needs command 'search-extremal'")
    results = _map(config, _descent, range(config.restarts))
    reports = [r for r, _ in results]
    best = min(range(len(reports)), key=lambda i: reports[i].scalars["min_eigenvalue"])
    psi = results[best][1]
    return reports, best, pure_to_state(psi, math.prod(config.dims))


# -- driver ----------------------------------------------------------------

def _map(config: CampaignConfig, fn, indices) -> list:
    indices = list(indices)
    if config.jobs == 1 or len(indices) == 1:
        return [fn(config, i) for i in indices]
    with ProcessPoolExecutor(max_workers=config.jobs) as pool:
        # map() yields in submission order: the merge is deterministic
        return list(pool.map(fn, [config] * len(indices), indices,
                             chunksize=max(1, len(indices) // (4 * config.jobs))))


@dataclass
class CampaignResult:
    config: CampaignConfig
    reports: list[TrialReport]
    summary: dict[str, Any]

    @property
    def failures(self) -> int:
        return sum(not r.passed for r in self.reports)

    @property
    def exit_status(self) -> int:
        return 0 if self.failures == 0 else 1


def _worst(command: str, reports: list[TrialReport]) -> dict[str, Any]:
    values = lambda key: [r.scalars[key] for r in reports if key in r.scalars]  # noqa: E731
    if command in ("verify-ssa", "fixtures"):
        return {"worst_min_eigenvalue": min(values("min_eigenvalue"), default=None),
                "worst_trace_gap": max(map(abs, values("trace_gap")), default=None)}
    if command == "verify-convexity":
        return {"worst_convexity_margin": min(values("convexity_margin"), default=None)}
    if command == "verify-twirl":
        return {"worst_twirl_residual": max(values("twirl_residual"), default=None)}
    if command == "sweep-projectors":
        return {"worst_margin": min(values("worst_margin"), default=None)}
    if command == "witness-nonhermitian":
        out: dict[str, Any] = {"worst_defect_trace_AB": max(values("defect_trace_AB"), default=None)}
        for label in ("A", "B"):
            vals = values(f"defect_trace_{label}")
            out[f"generic_fraction_trace_{label}"] = (
                sum(v > GENERICITY_THRESHOLD for v in vals) / len(vals) if vals else None)
        return out
    return {"best_min_eigenvalue": min(values("min_eigenvalue"), default=None)}


def run(config: CampaignConfig, stream: TextIO | None = None) -> CampaignResult:
    """Execute a campaign; write one JSON line per trial to ``config.output_path``
    (or ``stream``) and return the reports with a summary."""
    extra: dict[str, Any] = {}
    if config.command == "fixtures":
        reports = fixture_reports(config)
    elif config.command == "search-extremal":
        reports, best, state = search_extremal(config)
        extra["best_restart"] = best
        if config.state_out is not None:
            write_state(state, config.state_out, config.dims)
            extra["state_out"] = config.state_out
    else:
        reports = _map(config, run_trial, range(config.trials))

    lines = [dumps(r.record(config.timing)) + "\n" for r in reports]
    if config.output_path is not None:
        with open(config.output_path, "w") as fh:
            fh.writelines(lines)
    elif stream is not None:
        stream.writelines(lines)

    summary = {"command": config.command, "dims": list(config.dims), "trials": len(reports),
               "failures": sum(not r.passed for r in reports),
               "anomalies": sum(r.anomaly is not None for r in reports)}
    summary.update(_worst(config.command, reports))
    summary.update(extra)
    return CampaignResult(config, reports, summary)
