from pathlib import Path

import mpmath
import pytest
from hypothesis import HealthCheck, settings

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def mp_kummer(a, b, z, terms=500, dps=60):
    """Brute-force ``1F1`` oracle: fixed 500-term series summed in extended precision."""
    with mpmath.workdps(dps):
        a, b, z = mpmath.mpf(a), mpmath.mpf(b), mpmath.mpf(z)
        t = mpmath.mpf(1)
        out = [t]
        for k in range(terms - 1):
            if t == 0:
                break
            t = t * (a + k) / (b + k) * z / (k + 1)
            out.append(t)
        return float(mpmath.fsum(out))


def mp_laguerre(n, alpha, x, dps=60):
    """Explicit binomial sum for ``L_n^alpha(x)`` in extended precision."""
    with mpmath.workdps(dps):
        alpha, x = mpmath.mpf(alpha), mpmath.mpf(x)
        return float(
            mpmath.fsum(mpmath.binomial(n + alpha, n - j) * (-x) ** j / mpmath.factorial(j) for j in range(n + 1))
        )


@pytest.fixture
def fixtures_dir():
    return FIXTURES
