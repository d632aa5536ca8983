import numpy as np
import pytest

from shippower.baseline import PowerCurve, SeaTrialBaseline


def rel_err(a, b, floor=1e-12):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))


@pytest.fixture
def demo_baseline():
    return SeaTrialBaseline(
        ballast_curve=PowerCurve(c=1.5, n=3.0),
        laden_curve=PowerCurve(c=2.5, n=3.0),
        t_ballast=5.0,
        t_laden=12.0,
    )


@pytest.fixture
def mixed_baseline():
    # distinct exponents, so draft interpolation actually mixes two shapes
    return SeaTrialBaseline(
        ballast_curve=PowerCurve(c=1.8, n=3.05),
        laden_curve=PowerCurve(c=2.6, n=3.1),
        t_ballast=6.5,
        t_laden=12.5,
    )
