"""Operating-point calibration.

The default network is meant to sit in a stable asynchronous-irregular
regime around 3.2 Hz.  Every structural constant (in-degree, weight ratio,
adaptation) is fixed; the one free knob is the external efficacy ``j_ext``.
Mean rate is monotone in ``j_ext`` over the working range, so a bisection
on the 10 s mean rate finds the band quickly.

Because the in-degree does not grow with network size, the calibrated value
transfers across sizes; ``python3 -m spikebench.calibration`` re-derives it
and checks the transfer, which is how the value frozen in
:mod:`spikebench.defaults` was produced.
"""

from __future__ import annotations

from spikebench import defaults
from spikebench.engine import make_config, run
from spikebench.errors import ConfigError


def measure_rate(j_ext: float, n_neurons: int = 2048,
                 duration_ms: int = 10_000, seed: int = defaults.SEED,
                 backend: str | None = None) -> float:
    """Population mean rate (Hz) of a default network at a given j_ext."""
    config = make_config(n_neurons, duration_ms, seed=seed, j_ext=j_ext,
                         record_raster=False, record_step_profiles=False,
                         backend=backend)
    report = run(config)
    return report.mean_rate_hz


def calibrate_j_ext(lo: float = 0.3, hi: float = 1.5,
                    band: tuple[float, float] = defaults.TARGET_RATE_HZ,
                    n_neurons: int = 2048, duration_ms: int = 10_000,
                    seed: int = defaults.SEED, backend: str | None = None,
                    max_iter: int = 24,
                    verbose: bool = False) -> tuple[float, float]:
    """Bisect j_ext until the mean rate enters the target band.

    Returns:
        (j_ext, measured rate).

    Raises:
        ConfigError: if the bracket does not straddle the band or the
            bisection fails to land inside it.
    """
    target_mid = 0.5 * (band[0] + band[1])
    r_lo = measure_rate(lo, n_neurons, duration_ms, seed, backend)
    r_hi = measure_rate(hi, n_neurons, duration_ms, seed, backend)
    if verbose:
        print(f"bracket: j_ext={lo} -> {r_lo:.3f} Hz, "
              f"j_ext={hi} -> {r_hi:.3f} Hz")
    if r_lo > band[1] or r_hi < band[0]:
        raise ConfigError(
            f"bracket [{lo}, {hi}] -> [{r_lo:.3f}, {r_hi:.3f}] Hz does not "
            f"straddle the band {band}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        rate = measure_rate(mid, n_neurons, duration_ms, seed, backend)
        if verbose:
            print(f"j_ext={mid:.6f} -> {rate:.4f} Hz")
        if band[0] <= rate <= band[1] and abs(rate - target_mid) <= 0.1:
            return mid, rate
        if rate < target_mid:
            lo = mid
        else:
            hi = mid
    raise ConfigError(f"no j_ext in [{lo}, {hi}] reached the band {band} "
                      f"within {max_iter} bisection steps")


def _main() -> None:
    j_ext, rate = calibrate_j_ext(verbose=True)
    print(f"\ncalibrated j_ext = {j_ext:.6f} ({rate:.4f} Hz at 2048)")
    for n in (2048, 20480):
        for seed in (defaults.SEED, defaults.SEED + 1):
            r = measure_rate(j_ext, n_neurons=n, seed=seed)
            print(f"  transfer check: n={n} seed={seed}: {r:.4f} Hz")
    print(f"\nfreeze this as J_EXT in spikebench/defaults.py")


if __name__ == "__main__":
    _main()
