import os

import numpy as np
import pytest

from nsfsim import (FieldState, Mesh1D, SolverConfig, TransportSpec, iconic_eos,
                    make_boundary, run, tabulated_eos)

SEED = int(os.environ.get("NSF_SEED", "20260810"))


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture(scope="session")
def eos():
    return iconic_eos()


@pytest.fixture(scope="session")
def eos_a0():
    return iconic_eos(a=0.0)


def make_table_eos(third_law: bool):
    z = np.geomspace(0.02, 400, 25)
    p = z + z ** (5.0 / 3.0) + z ** (5.0 / 3.0) / (1.0 + z)
    return tabulated_eos(z, p, p_inf=1.0, a=1.0, third_law=third_law)


@pytest.fixture(scope="session")
def eos_table():
    return make_table_eos(third_law=True)


@pytest.fixture(scope="session")
def eos_table_nolaw():
    return make_table_eos(third_law=False)


@pytest.fixture(scope="session")
def transport():
    return TransportSpec()


@pytest.fixture(scope="session")
def closed_box_traj(eos, transport):
    """Small insulated-box relaxation shared by solver/budget tests."""
    mesh = Mesh1D(0.0, 1.0, 48)
    x = mesh.centers
    cfg = SolverConfig(t_end=0.04)
    initial = FieldState(rho=1 + 0.1 * np.cos(np.pi * x), u=np.zeros(48),
                         theta=1 + 0.1 * np.cos(np.pi * x))
    return run(mesh, eos, transport, cfg, make_boundary(), initial,
               output_times=[0.0, 0.01, 0.02, 0.03, 0.04])


@pytest.fixture(scope="session")
def throughflow_setup(eos):
    """Inflow/outflow channel at modest resolution for module tests."""
    from nsfsim.thermo import specific_internal_energy

    mesh = Mesh1D(0.0, 1.0, 48)
    x = mesh.centers
    u_in = 0.5
    f_ib = -u_in * float(specific_internal_energy(eos, 1.0, 1.0))
    bspec = make_boundary(u_b_left=u_in, u_b_right=u_in, rho_b_left=1.0,
                          F_ib_left=f_ib)
    ts = TransportSpec(mu_scale=0.1, kappa_scale=0.2)
    cfg = SolverConfig(t_end=0.05)
    initial = FieldState(rho=np.ones(48), u=u_in * np.ones(48),
                         theta=1 + 0.2 * x ** 2 * (3 - 2 * x))
    return mesh, ts, cfg, bspec, initial


@pytest.fixture(scope="session")
def throughflow_traj(eos, throughflow_setup):
    mesh, ts, cfg, bspec, initial = throughflow_setup
    return run(mesh, eos, ts, cfg, bspec, initial,
               output_times=[0.0, 0.025, 0.05])
