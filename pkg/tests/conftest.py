import pytest

import mixtrial as mt

# Worked example used throughout: staircase with corners (2,.2), (1,.4), (.7,.6)
REFERENCE_MU = (2.0, 1.0, 0.7)
REFERENCE_P = (0.2, 0.4, 0.6)

# Per-center type II target for a 4-center trial at family-wise beta_max 0.2
BETA_M4 = 1.0 - 0.8**0.25


@pytest.fixture(scope="session")
def region():
    return mt.StrongEffectRegion.from_vectors(REFERENCE_MU, REFERENCE_P)


@pytest.fixture(scope="session")
def single_design():
    """Single-center two-stage reference design (n1=55, alpha0=0.7)."""
    return mt.make_design(55, 0.7, 0.026, 38, 0.05)


@pytest.fixture(scope="session")
def center4_design():
    """Per-center design of the 4-center reference trial (n1=100, alpha0=0.7)."""
    return mt.make_design(100, 0.7, 0.026, 65, 0.05)


@pytest.fixture(scope="session")
def mc_design(center4_design):
    return mt.MulticenterDesign(
        procedure=mt.StepUpProcedure.hochberg(4, 0.05),
        center_design=center4_design,
        beta_M_se=BETA_M4,
    )
