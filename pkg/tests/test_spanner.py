import numpy as np
import pytest

from envelope_dnn.disk_graphs import random_sites
from envelope_dnn.geometry import Site
from envelope_dnn.spanner import build_spanner, cone_count, spanner_audit, yao_reference


def test_two_sites():
    sites = [Site(0, 0, 0, 1), Site(1, 1.5, 0, 1)]
    h = build_spanner(sites, 0.5)
    assert h.id_edges() == [(0, 1)]
    assert spanner_audit(sites, h, np.random.default_rng(0))["max_stretch"] == 1.0


def test_cone_count():
    assert cone_count(0.5) == 26
    assert cone_count(1.0, aperture=np.pi / 2) == 4


@pytest.mark.parametrize("eps", [0.25, 1.0])
def test_both_routes_are_spanners(eps):
    rng = np.random.default_rng(1)
    sites = random_sites(rng, 300, 2.0, 22.0)
    for h in (build_spanner(sites, eps), yao_reference(sites, eps)):
        a = spanner_audit(sites, h, np.random.default_rng(2))
        assert a["non_edges"] == 0 and a["disconnected"] == 0
        assert a["max_stretch"] <= 1 + eps + 1e-6
        assert len(h) <= h.k * len(sites)


def test_unit_disks():
    rng = np.random.default_rng(3)
    sites = random_sites(rng, 400, 1.0, 18.0)
    a = spanner_audit(sites, build_spanner(sites, 0.5), np.random.default_rng(4))
    assert a["max_stretch"] <= 1.5 + 1e-6
