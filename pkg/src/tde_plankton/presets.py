"""Named parameter presets, one per reproduced figure panel.

Each preset is a flat configuration overlay (see :mod:`tde_plankton.config`).
Sweep presets (fig1-*) feed the ``equilibria`` subcommand, boundary presets
(fig2-*, fig4-*) feed ``trace-boundary`` (their frequency profiles are the
companion-panel data), and time-series presets (fig6-*, fig7, extinction)
feed ``simulate``.
"""

from __future__ import annotations

#: total biomass halfway below the phytoplankton threshold, for the
#: extinction scenario (f_inverse(lambda/mu)/2 at the default rates)
_EXTINCTION_NT = "1.444841067482577e-03"

PRESETS: dict[str, dict[str, str]] = {
    # equilibrium sweeps vs total biomass
    "fig1-left": {
        "model.response": "michaelis",
        "model.l": "0.159",
        "model.delta0": "0.0",
        "equilibria.m_list": "0,5,10,15,19.7",
    },
    "fig1-right": {
        "model.response": "michaelis",
        "model.l": "0.159",
        "model.delta0": "0.17",
        "equilibria.m_list": "0,5,10,15,19.7",
    },
    # stability boundaries, constant growth response
    "fig2-left": {
        "model.response": "constant",
        "model.delta0": "0.0",
        "model.m": "1.0",
        "continuation.m_seeds": "1.0",
        "continuation.nt_min": "0.05",
        "continuation.nt_max": "3.0",
        "continuation.m_max": "19.7",
        "continuation.max_steps": "4000",
    },
    "fig2-right": {
        "model.response": "constant",
        "model.delta0": "0.17",
        "model.m": "1.0",
        "continuation.m_seeds": "1.0,6.0,12.0,18.0",
        "continuation.nt_min": "0.05",
        "continuation.nt_max": "100.0",
        "continuation.max_steps": "4000",
    },
    # stability boundaries, saturating growth response
    "fig4-l0.01-d0": {
        "model.response": "michaelis",
        "model.l": "0.01",
        "model.delta0": "0.0",
        "model.m": "1.0",
        "continuation.m_seeds": "0.5,1.5,3.0,6.0",
        "continuation.omega_windows": "auto",
        "continuation.nt_min": "0.05",
        "continuation.nt_max": "100.0",
        "continuation.m_max": "19.7",
        "continuation.max_steps": "4000",
    },
    "fig4-l0.159-d0": {
        "model.response": "michaelis",
        "model.l": "0.159",
        "model.delta0": "0.0",
        "model.m": "1.0",
        "continuation.m_seeds": "0.5,1.5,3.0,6.0",
        "continuation.omega_windows": "auto",
        "continuation.nt_min": "0.05",
        "continuation.nt_max": "100.0",
        "continuation.m_max": "19.7",
        "continuation.max_steps": "4000",
    },
    "fig4-l1.00-d0": {
        "model.response": "michaelis",
        "model.l": "1.0",
        "model.delta0": "0.0",
        "model.m": "0.5",
        "continuation.m_seeds": "0.25,0.75,1.5,3.0",
        "continuation.omega_windows": "auto",
        "continuation.nt_min": "0.05",
        "continuation.nt_max": "100.0",
        "continuation.m_max": "19.7",
        "continuation.max_steps": "4000",
    },
    "fig4-l0.159-dd": {
        "model.response": "michaelis",
        "model.l": "0.159",
        "model.delta0": "0.17",
        "model.m": "6.0",
        "continuation.m_seeds": "2.0,6.0,10.0,14.0",
        "continuation.nt_min": "0.2",
        "continuation.nt_max": "100.0",
        "continuation.max_steps": "4000",
    },
    # time-domain runs
    "fig6-stable": {
        "model.response": "michaelis",
        "model.l": "0.159",
        "model.delta0": "0.17",
        "model.m": "6.0",
        "model.n_total": "3.0903",  # 10**0.49
        "run.history": "equilibrium",
        "run.eps_p": "1e-3",
        "run.eps_z": "1e-3",
        "run.horizon_hat": "1500.0",
    },
    "fig6-unstable": {
        "model.response": "michaelis",
        "model.l": "0.159",
        "model.delta0": "0.17",
        "model.m": "6.0",
        "model.n_total": "3.2359",  # 10**0.51
        "run.history": "equilibrium",
        "run.eps_p": "1e-3",
        "run.eps_z": "1e-3",
        "run.horizon_hat": "1500.0",
    },
    "fig7": {
        "model.response": "michaelis",
        "model.l": "0.159",
        "model.delta0": "0.17",
        "model.m": "8.0",
        "model.n_total": "5.3703",  # 10**0.73
        "run.history": "equilibrium",
        "run.eps_p": "1e-2",
        "run.eps_z": "1e-2",
        "run.dt_panels": "400",
        "run.horizon_hat": "2000.0",
    },
    "extinction": {
        "model.response": "michaelis",
        "model.l": "0.159",
        "model.delta0": "0.17",
        "model.m": "6.0",
        "model.n_total": _EXTINCTION_NT,
        "run.history": "constant",
        "run.p0": "4.334523202447731e-04",  # 0.3 * n_total
        "run.z0": "1.444841067482577e-04",  # 0.1 * n_total
        "run.dt_panels": "20000",
        "run.horizon_hat": "120.0",
    },
}


def preset_values(name: str) -> dict[str, str]:
    try:
        return dict(PRESETS[name])
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise KeyError(f"unknown preset {name!r}; known presets: {known}") from None
