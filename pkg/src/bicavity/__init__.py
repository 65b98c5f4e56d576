"""Steady-state physics of two incoherently pumped quantum dots coupled to a
bimodal cavity, with exciton-phonon effects treated in the polaron frame.

Modules: operators (sparse state-space algebra), phonons (bath kernels and
scattering integrals), liouvillian (master-equation builders), sectors
(excitation-difference blocking), dynamics (steady states, propagation,
spectra), observables (photon statistics, radiance witness, rate
decomposition), sweeps/presets/config/cli (experiment layer).
"""

__version__ = "0.1.0"
