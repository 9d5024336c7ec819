import os

import pytest


def pytest_collection_modifyitems(config, items):
    run_slow = os.environ.get("EVOUNITS_RUN_SLOW") == "1"
    run_full = os.environ.get("EVOUNITS_FULL_SCALE") == "1"
    skip_slow = pytest.mark.skip(reason="desk-scale training; set EVOUNITS_RUN_SLOW=1")
    skip_full = pytest.mark.skip(reason="full paper schedule; set EVOUNITS_FULL_SCALE=1")
    for item in items:
        if "full_scale" in item.keywords and not run_full:
            item.add_marker(skip_full)
        elif "slow" in item.keywords and not (run_slow or run_full):
            item.add_marker(skip_slow)
