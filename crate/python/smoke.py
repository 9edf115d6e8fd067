"""Smoke test for the vibromix Python bindings.

    pip install --no-build-isolation -e crates/py
    python python/smoke.py

Checks the bindings against numpy/scipy where an independent answer exists.
"""

import json
import math
import sys

import numpy as np
import vibromix_py as vm

RATE = 8000.0


def check(name, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {name} {detail}")
    return ok


def main():
    results = []
    rng = np.random.default_rng(7)

    sections = vm.bandpass_sections(RATE)
    x = rng.standard_normal(8000)
    y = np.asarray(vm.bandpass(x.tolist(), RATE))
    try:
        from scipy import signal

        sos = signal.butter(4, [80, 1000], "bandpass", fs=RATE, output="sos")
        ref = signal.sosfilt(sos, x)
        err = float(np.max(np.abs(ref - y)))
        results.append(check("bandpass matches scipy butter", err < 1e-9, f"max err {err:.1e}"))
    except ImportError:
        results.append(check("bandpass sections", len(sections) == 4, f"{len(sections)} sections"))

    t = np.arange(16000) / RATE
    sine = np.sin(2 * math.pi * 100 * t)
    e = vm.ase(sine.tolist(), [0.0] * len(t), [0.0] * len(t), RATE)
    results.append(check("ase of unit sine", abs(e[0] - 1.0) < 0.01, f"{e[0]:.4f} (expect 1.0)"))
    z = vm.zcr(sine.tolist(), RATE)
    results.append(check("zcr of 100 Hz sine", abs(z - 200) <= 1, f"{z:.1f} Hz"))
    gated = vm.gate((0.2 * np.ones(100)).tolist(), 0.3)
    results.append(check("gate below threshold", not any(gated)))
    r = vm.rms([3.0, -3.0, 3.0, -3.0])
    results.append(check("rms", abs(r - 3.0) < 1e-12, f"{r}"))

    axes = tuple(rng.standard_normal(4000).tolist() for _ in range(3))
    half = tuple((0.5 * np.asarray(a)).tolist() for a in axes)
    ratio = vm.e_ratio(half, axes, RATE)
    results.append(check("e_ratio of half amplitude", abs(ratio - 0.25) < 1e-12, f"{ratio}"))

    shifted = np.concatenate([np.zeros(37), x[:-37]])
    lag = vm.xcorr_lag(x.tolist(), shifted.tolist(), RATE)
    results.append(check("xcorr lag", lag == 37, f"{lag}"))

    script = {
        "rate": RATE,
        "duration": 2.0,
        "seed": 3,
        "noise_floor": 0.005,
        "tools": ["left", "right"],
        "events": [
            {"t0": 0.1 + 0.2 * i, "tool": "left" if i % 2 == 0 else "right",
             "kind": "contact", "amplitude": 2.0, "frequency": 250.0, "decay": 0.04}
            for i in range(9)
        ],
    }
    rendered = vm.render(json.dumps(script))
    results.append(check("render tools", sorted(rendered["tools"]) == ["left", "right"]))

    config = {
        "rate": RATE,
        "channels": [
            {"id": tool, "sink_lane": lane,
             "source": {"kind": "synth", "script": script, "tool": tool},
             "strip": {"mode": "F3"}}
            for lane, tool in enumerate(["left", "right"])
        ],
    }
    out = vm.run_offline(json.dumps(config))
    lanes = out["lanes"]
    results.append(check("pipeline lanes", len(lanes) == 2 and len(lanes[0]) == len(rendered["tools"]["left"][0])))
    report = vm.fidelity(rendered["tools"]["left"], lanes[0], RATE)
    latency = out["latency_s"] * RATE
    results.append(check(
        "loopback fidelity",
        report["r"] >= 0.95 and abs(report["lag_samples"] - latency) <= 64,
        f"r {report['r']:.3f}, lag {report['lag_samples']} vs latency {latency:.1f}",
    ))

    if not all(results):
        sys.exit(1)
    print("smoke: all checks passed")


if __name__ == "__main__":
    main()
