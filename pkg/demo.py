#!/usr/bin/env python3
"""
qjump Demo Script
Walks through the main results for two driven, dipole-interacting atoms
"""

import math

import numpy as np

from app.models.physics import Direction, PhysicalParams, PureState
from app.services.dynamics_service import dipole_coupling
from app.services.emission_service import total_emission_rate
from app.services.master_service import analytic_populations, build_liouvillian, steady_state_numeric
from app.services.observables_service import (
    AngularGrid,
    count_fringe_maxima,
    fringe_visibility,
    g2_zero,
    interference_criterion,
    interference_pattern,
    maximal_bunching_direction,
    neglected_coupling_params,
)
from app.services.trajectory_service import TrajectoryService


def banner(title: str):
    print("\n" + "=" * 60)
    print(title)
    print("=" * 60)


def demo_coupling():
    """Demo: dipole-dipole coupling against distance"""
    banner("DEMO 1: Dipole-dipole coupling C(r)")
    for r in (0.1, 1.0 / math.pi, 0.5, 1.0, 10.0):
        C = dipole_coupling(PhysicalParams(separation_r=r)).value_C
        print(f"r = {r:7.4f} wavelengths   Re C = {C.real:+.5f}   Im C = {C.imag:+.5f}")


def demo_steady_state():
    """Demo: steady state, numeric and closed form"""
    banner("DEMO 2: Steady state at Omega = 0.3 A, r = wavelength/pi")
    params = PhysicalParams.driven(0.3, 1.0 / math.pi)
    rho = steady_state_numeric(build_liouvillian(params))
    print(f"Closed-form populations: {analytic_populations(params).as_dict()}")
    print(f"Total emission rate: {total_emission_rate(rho, params):.6f} A")


def demo_interference():
    """Demo: fringes and which-way information"""
    banner("DEMO 3: Interference fringes at r = 10 wavelengths")
    params = neglected_coupling_params(PhysicalParams.driven(0.3, 10.0))
    rho = steady_state_numeric(build_liouvillian(params))
    ring = interference_pattern(rho, params, AngularGrid.ring(math.pi / 2, np.linspace(0, math.pi, 2001)))
    print(f"Maxima for phi in [0, pi]: {count_fringe_maxima(ring.values[0])}")
    print(f"Visibility: {fringe_visibility(rho, params, math.pi / 2):.6f}")
    for label, state in (("s", PureState.dicke("s")), ("21", PureState.basis("21"))):
        value, coherent = interference_criterion(state)
        print(f"|{label}>: <S+2 S-1> = {value.real:+.3f}, fringes possible: {coherent}")


def demo_bunching():
    """Demo: photon bunching in selected directions"""
    banner("DEMO 4: g2(0) at theta = pi/2")
    params = neglected_coupling_params(PhysicalParams.driven(0.3, 10.0))
    rho = steady_state_numeric(build_liouvillian(params))
    peak = maximal_bunching_direction(params, math.pi / 2)
    print(f"Maximal bunching at phi = {peak.phi:.5f}: g2 = {g2_zero(rho, params, peak):.4f}")
    print(f"Along the atom axis: g2 = {g2_zero(rho, params, Direction(theta=math.pi / 2)):.4f}")


def demo_trajectories():
    """Demo: a few quantum-jump histories"""
    banner("DEMO 5: Quantum-jump trajectories")
    params = PhysicalParams.driven(0.3, 1.0 / math.pi)
    stats = TrajectoryService().run_ensemble(
        params, PureState.basis("11"), 20.0, 1e-3, 20, base_seed=1, window_start=5.0, keep_records=True
    )
    for record in stats.records[:3]:
        times = ", ".join(f"{t:.2f}" for t in record.jump_times[:6])
        print(f"trajectory {record.index}: {len(record.jumps)} photons, at t = {times}")
    rate, stderr = stats.mean_jump_rate()
    print(f"Mean photon rate after t = 5/A: {rate:.4f} +/- {stderr:.4f} A")


def main():
    """Run all demos"""
    print("\n" + "=" * 60)
    print("qjump - quantum jumps of two interacting atoms")
    print("=" * 60)

    demo_coupling()
    demo_steady_state()
    demo_interference()
    demo_bunching()
    demo_trajectories()

    print("\nNext steps:")
    print("  python -m app.main pattern --preset fig4 -o fig4.csv")
    print("  python -m app.main g2 --preset fig5 -o fig5.csv")
    print("  python -m app.main validate")


if __name__ == "__main__":
    main()
