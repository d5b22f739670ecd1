import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from bestow.runtime import ActorSystem  # noqa: E402


@pytest.fixture(params=["deterministic", "threaded"])
def system(request):
    sys_ = ActorSystem(workers=4, deterministic=request.param == "deterministic", seed=7, default_timeout=20)
    yield sys_
    sys_.shutdown()
