"""
A cavity holding one photon exchanges it with a resonant qubit. Left alone,
the excitation swaps back and forth and returns after about pi/g. When the
qubit is sporadically reset to its ground state, each reset carries away
whatever excitation it had taken, and the cavity drains.
"""

from bayesosc.cavity_sim import (
    CavityModel,
    QubitSpec,
    ResetProcess,
    SimConfig,
    basis,
    product_state,
    run_ensemble,
    run_mean_evolution,
)

g = 0.05
model = CavityModel(d=3, omega_r=1.0, qubits=(QubitSpec(delta=1.0, g=g),))
rho0 = product_state(basis(3, 1), basis(2, 0))
cfg = SimConfig(dt=0.02, t_max=100.0, record_stride=250, max_top_population=1e-2, n_trajectories=300, seed=5)

closed = run_mean_evolution(model, ResetProcess(0.0), rho0, cfg)
opened = run_mean_evolution(model, ResetProcess(0.1), rho0, cfg)
sampled = run_ensemble(model, ResetProcess(0.1), rho0, cfg)

print("cavity excited population (1 - P(n=0))")
print("    t   no resets   resets (mean)   resets (300 paths)")
for i, t in enumerate(closed.times):
    se = sampled.stderr["qudit_populations"][i, 0]
    print(
        f"{t:5.0f}   {closed.qudit_excited()[i]:9.3f}   {opened.qudit_excited()[i]:13.3f}"
        f"   {sampled.qudit_excited()[i]:8.3f} +- {se:.3f}"
    )
