from fractions import Fraction

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

positive_fractions = st.builds(Fraction, st.integers(1, 60), st.integers(1, 24))
fractions = st.builds(Fraction, st.integers(-60, 60), st.integers(1, 24))
