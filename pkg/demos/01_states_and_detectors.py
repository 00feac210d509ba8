#!/usr/bin/env python3
"""Walk through the state toolbox: Bell pairs, probes, and detector statistics."""
import numpy as np

from qisac import states
from qisac.linalg import expectation

print("The four Bell states (amplitudes over |00>,|01>,|10>,|11>):")
for label in states.BellState:
    print(f"  {label.name:10s} {np.round(states.bell(label), 4)}")

theta, n_passes = 0.8 * np.pi, 4
print(f"\nEncoded probes after N={n_passes} sensing passes at theta={theta:.4f}:")
for bit in (0, 1):
    ket = states.probe_state(bit, n_passes, theta)
    print(f"  bit {bit}: {np.round(ket, 4)}")

print("\nDetector response probabilities (Born rule on the observable eigenstates):")
for bit in (0, 1):
    ket = states.probe_state(bit, n_passes, theta)
    for obs in ("O1", "O2"):
        probs = states.detector_distribution(ket, obs)
        print(f"  bit {bit}, {obs}: {np.round(probs, 4)}")

rho = states.mixed_probe(n_passes, theta)
print("\nExpectation values on the random-bit mixture:")
print(f"  <O1> = {expectation(rho, states.observable('O1').matrix):+.6f}"
      f"   (-cos N theta = {-np.cos(n_passes * theta):+.6f})")
print(f"  <O2> = {expectation(rho, states.observable('O2').matrix):+.6f}"
      f"   (-sin N theta = {-np.sin(n_passes * theta):+.6f})")

print("\nPhase accumulation: N applications of the one-pass unitary")
u = states.phase_unitary(theta)
acc = np.linalg.matrix_power(u, n_passes)
print(f"  ||U^4 - U(4 theta)|| = {np.abs(acc - states.phase_unitary(n_passes * theta)).max():.2e}")

print("\nEvery probe is the encode-then-sense circuit applied to a fresh pair:")
op = states.phase_unitary(n_passes * theta) @ states.encoding_unitary(1)
circuit = np.kron(op, np.eye(2)) @ states.bell(states.BellState.PSI_MINUS)
overlap = abs(np.vdot(circuit, states.probe_state(1, n_passes, theta)))
print(f"  |<circuit|probe>| = {overlap:.12f}")
