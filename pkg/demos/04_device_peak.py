"""Draft a device spec for this machine.

A DeviceSpec models peak throughput as 2 FLOPs x fma_lanes x clock. For a
CPU, lanes = cores x SIMD float32 width x FMA ports — but the honest way to
pick numbers is to measure what dense float32 matrix multiplication
actually achieves and work backwards. This script does that and prints a
ready-to-use JSON file.
"""
import json

from gatherconv import probe_achievable_peak

print("measuring float32 GEMM throughput (best of 5)...")
measured = max(probe_achievable_peak() for _ in range(5))
print(f"achievable: {measured / 1e9:.1f} GFLOP/s")

# Express the measurement as lanes x clock. Any factorization with an
# honest label works; one lane at half the measured rate keeps it simple.
spec = {
    "label": f"this machine, anchored to measured GEMM peak {measured / 1e9:.0f} GFLOP/s",
    "fma_lanes": 1,
    "clock_hz": measured / 2.0,
}
print("\ndevice spec (save as my-machine.json, then bench with --device-spec):")
print(json.dumps(spec, indent=2))
print("\nCE against this spec reads as 'fraction of what my BLAS can do',")
print("which is the most meaningful baseline a portable kernel can have.")
