import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hypercongruence.scenes import load_bundled  # noqa: E402
from hypercongruence.surface import ImmersionPatch  # noqa: E402


def bundled_patch(scene, surface="base"):
    sc = load_bundled(scene)
    return ImmersionPatch.from_spec(sc.space, sc.surfaces[surface])


def random_points(patch, count, seed=0, margin=0.1):
    rng = np.random.default_rng(seed)
    lo = np.array([a for a, _ in patch.domain])
    hi = np.array([b for _, b in patch.domain])
    w = hi - lo
    return lo + margin * w + (1 - 2 * margin) * w * rng.random((count, patch.n))


@pytest.fixture
def patch_of():
    return bundled_patch


def scene_with_motion(dim, sig, components, domain, motion, extra=""):
    """Scene text with surfaces base and moved = motion(base) and maps motion/back."""
    from hypercongruence.scenes import map_section, moved_components, surface_section

    n = dim - 1
    cv = [f"u{i + 1}" for i in range(n)]
    return (
        f"[space] dim={dim} signature={sig}\n"
        + surface_section("base", cv, components, domain)
        + surface_section("moved", cv, moved_components(components, motion), domain)
        + map_section("motion", "base", "moved", cv)
        + map_section("back", "moved", "base", cv)
        + extra
    )
