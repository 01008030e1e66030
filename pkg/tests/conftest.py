import numpy as np
import pytest

from homint.drift import DriftSpec, PeriodicDrift


@pytest.fixture(scope="session")
def zero_spec():
    return DriftSpec(left=PeriodicDrift(), right=PeriodicDrift(),
                     eta=0.5, interface_kind="zero")


@pytest.fixture(scope="session")
def asym_spec():
    """Free diffusion on the left, b(u) = -2 pi sin(2 pi u) on the right."""
    return DriftSpec(left=PeriodicDrift(), right=PeriodicDrift(sin=(-2.0 * np.pi,)),
                     eta=0.5, interface_kind="zero")


@pytest.fixture(scope="session")
def sym_spec():
    return DriftSpec(left=PeriodicDrift(sin=(-2.0 * np.pi,)),
                     right=PeriodicDrift(sin=(-2.0 * np.pi,)),
                     eta=0.5, interface_kind="zero")


def random_periodic(rng, n_modes=3, amp=1.5):
    return PeriodicDrift(sin=tuple(rng.uniform(-amp, amp, n_modes)),
                         cos=tuple(rng.uniform(-amp, amp, n_modes)))
