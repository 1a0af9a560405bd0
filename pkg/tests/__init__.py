import os

from hypothesis import settings

# "full" generates 10000 messages per codec property, "quick" keeps local runs short.
settings.register_profile("full", max_examples=10000, deadline=None)
settings.register_profile("quick", max_examples=200, deadline=None)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "full"))
