import math

import numpy as np
import pytest

from maasslab.arith import primes_up_to
from maasslab.forms import MaassForm, SpectralBasis


def synthetic_form(mu: float, seed: int, P: int = 2000, omega: float | None = 1.0) -> MaassForm:
    """A form with random prime eigenvalues in [-1.8, 1.8], extended by Hecke."""
    rng = np.random.default_rng(seed)
    primes = primes_up_to(P)
    values = dict(zip(primes, rng.uniform(-1.8, 1.8, len(primes))))
    return MaassForm.from_primes(mu, values, omega=omega)


def record_text(mu: float, coeffs: dict[int, float], omega: float | None = 2.5, extra: str = "") -> str:
    lines = ["format maass-v1", "parity even", f"spectral_parameter {mu!r}"]
    if omega is not None:
        lines.append(f"omega {omega!r}")
    if extra:
        lines.append(extra)
    lines += [f"coeff {n} {v!r}" for n, v in sorted(coeffs.items())]
    return "\n".join(lines) + "\n"


def hecke_coeffs(form: MaassForm, N: int) -> dict[int, float]:
    lam = form.lam_array(N)
    return {n: float(lam[n]) for n in range(1, N + 1)}


@pytest.fixture(scope="session")
def form_a():
    return synthetic_form(9.5, seed=1)


@pytest.fixture(scope="session")
def form_b():
    return synthetic_form(12.25, seed=2)


@pytest.fixture(scope="session")
def two_form_text(form_a, form_b):
    # written in reverse order so the loader has to sort
    return record_text(form_b.mu, hecke_coeffs(form_b, 60)) + "\n" + record_text(form_a.mu, hecke_coeffs(form_a, 60))


@pytest.fixture(scope="session")
def tiny_basis(form_a, form_b):
    return SpectralBasis((form_a, form_b), t_max=20.0)


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


__all__ = ["synthetic_form", "record_text", "hecke_coeffs", "close", "math"]
