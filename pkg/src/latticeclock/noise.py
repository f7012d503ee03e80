"""Local-oscillator noise synthesis: power-law FM processes plus linear drift.

Traces are fractional frequency, uniformly sampled. Flicker FM is generated
by frequency-domain shaping (amplitudes proportional to f^-1/2 with
randomized phases, inverse transformed); random-walk FM by cumulative
summation of white increments. Phase traces, when needed, are cumulative
sums of these.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .rng import RngStream

MAX_SAMPLES = 2**24  # keeps a single trace desk-scale in time and memory

TRACE_SCHEMA = "latticeclock/frequency-trace/1"


@dataclass(frozen=True)
class NoiseSpec:
    """Power-law coefficients of the one-sided PSD S_y(f) plus a drift term.

    white_fm_h0:      S_y = h0 (1/Hz)
    flicker_fm_hm1:   S_y = h-1 / f (dimensionless)
    random_walk_hm2:  S_y = h-2 / f^2 (Hz)
    linear_drift:     deterministic fractional frequency slope (1/s)
    flicker_floor_sigma: record of the Allan plateau the flicker term encodes
    """

    white_fm_h0: float = 0.0
    flicker_fm_hm1: float = 0.0
    random_walk_hm2: float = 0.0
    linear_drift: float = 0.0
    flicker_floor_sigma: float = 0.0

    def __post_init__(self) -> None:
        for name in ("white_fm_h0", "flicker_fm_hm1", "random_walk_hm2",
                     "flicker_floor_sigma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class FrequencyTrace:
    samples: np.ndarray  # fractional frequency
    dt: float  # s
    seed: int = 0
    stream_id: int = 0
    label: str = ""

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or len(samples) < 1:
            raise ValueError("samples must be a 1-D array with length >= 1")
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.dt


def flicker_floor_spec(floor: float) -> NoiseSpec:
    """NoiseSpec fragment whose flicker term plateaus at the given Allan floor.

    Inverts sigma_flicker = sqrt(2 ln2 h-1), so h-1 = floor^2 / (2 ln2).
    """
    if floor < 0:
        raise ValueError(f"floor must be >= 0, got {floor}")
    return NoiseSpec(flicker_fm_hm1=floor**2 / (2 * math.log(2)),
                     flicker_floor_sigma=floor)


def white_h0_for_sigma(sigma: float, tau: float = 1.0) -> float:
    """h0 giving a white-FM Allan deviation of sigma at averaging time tau."""
    if sigma < 0 or tau <= 0:
        raise ValueError("sigma must be >= 0 and tau > 0")
    return 2 * sigma**2 * tau


def _shaped_component(psd_scale: float, exponent: float, n: int, dt: float,
                      gen: np.random.Generator) -> np.ndarray:
    """Real time series with one-sided PSD psd_scale * f**exponent.

    Spectral amplitudes are drawn so the periodogram convention
    S(f_k) = (2 dt / n) |Y_k|^2 holds in expectation.
    """
    freqs = np.fft.rfftfreq(n, dt)
    amp = np.zeros_like(freqs)
    amp[1:] = np.sqrt(n * psd_scale * freqs[1:] ** exponent / (2 * dt))
    re = gen.standard_normal(len(freqs))
    im = gen.standard_normal(len(freqs))
    spectrum = amp * (re + 1j * im) / math.sqrt(2)
    spectrum[0] = 0.0
    if n % 2 == 0:
        spectrum[-1] = amp[-1] * re[-1]  # Nyquist bin must stay real
    return np.fft.irfft(spectrum, n)


def synthesize(spec: NoiseSpec, n: int, dt: float, rng: RngStream,
               label: str = "") -> FrequencyTrace:
    """Sum the configured noise components into one fractional-frequency trace.

    Parameters
    ----------
    spec : NoiseSpec
        Power-law coefficients and drift.
    n : int
        Number of samples, 1 <= n <= 2**24.
    dt : float
        Sample interval in seconds.
    rng : RngStream
        Stream identity; equal streams reproduce the trace bit for bit.

    Notes
    -----
    White FM uses independent Gaussians of variance h0/(2 dt), matching the
    white-FM Allan relation sigma_y^2(tau) = h0/(2 tau). Random-walk FM
    cumulatively sums increments of variance 2 pi^2 h-2 dt. Component draws
    happen in a fixed order so a spec with a coefficient set to zero still
    consumes no samples for that component.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n > MAX_SAMPLES:
        raise ValueError(f"n = {n} exceeds the {MAX_SAMPLES} sample guard")
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    gen = rng.generator()
    y = np.zeros(n)
    if spec.white_fm_h0 > 0:
        y += math.sqrt(spec.white_fm_h0 / (2 * dt)) * gen.standard_normal(n)
    if spec.flicker_fm_hm1 > 0:
        y += _shaped_component(spec.flicker_fm_hm1, -1.0, n, dt, gen)
    if spec.random_walk_hm2 > 0:
        increments = math.sqrt(2 * math.pi**2 * spec.random_walk_hm2 * dt) \
            * gen.standard_normal(n)
        y += np.cumsum(increments)
    if spec.linear_drift != 0.0:
        y += spec.linear_drift * (np.arange(n) * dt)
    return FrequencyTrace(y, dt, seed=rng.seed, stream_id=rng.stream_id, label=label)


def write_trace(trace: FrequencyTrace, csv_path: str | Path,
                spec: NoiseSpec | None = None, header_note: str = "") -> None:
    """Persist a trace as (index, y) CSV plus a JSON sidecar with provenance."""
    csv_path = Path(csv_path)
    with open(csv_path, "w") as f:
        if header_note:
            f.write(f"# {header_note}\n")
        f.write("index,y\n")
        for i, y in enumerate(trace.samples):
            f.write(f"{i},{float(y)!r}\n")
    sidecar = {
        "schema": TRACE_SCHEMA,
        "label": trace.label,
        "dt": trace.dt,
        "seed": trace.seed,
        "stream_id": trace.stream_id,
        "n": len(trace),
        "noise_spec": asdict(spec) if spec is not None else None,
    }
    with open(csv_path.with_suffix(".json"), "w") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)
        f.write("\n")


def read_trace(csv_path: str | Path, dt: float | None = None) -> FrequencyTrace:
    """Load a trace CSV; dt comes from the sidecar unless given explicitly."""
    csv_path = Path(csv_path)
    if not csv_path.exists():
        raise FileNotFoundError(f"trace file {csv_path} does not exist")
    meta: dict = {}
    sidecar = csv_path.with_suffix(".json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
    if dt is None:
        dt = meta.get("dt")
    if dt is None:
        raise ValueError(f"no sidecar next to {csv_path}; pass dt explicitly")
    samples = _load_y(csv_path)
    return FrequencyTrace(
        samples,
        float(dt),
        seed=int(meta.get("seed", 0)),
        stream_id=int(meta.get("stream_id", 0)),
        label=str(meta.get("label", "")),
    )


def _load_y(csv_path: Path) -> np.ndarray:
    ys = []
    with open(csv_path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("index"):
                continue
            ys.append(float(line.split(",")[1]))
    return np.asarray(ys)
