import numpy as np
import pytest

from locplex.model import (CostParams, Instance, Network, ValidationError, check_network, demand_shares,
                           validate_instance)


def test_instance_arrays_are_read_only(line_instance):
    with pytest.raises(ValueError):
        line_instance.demand[0] = 5.0
    with pytest.raises(ValueError):
        line_instance.dist[0, 1] = 5.0


def test_validation_lists_every_problem():
    dist = np.array([[1.0, -2.0], [2.0, 0.0]])
    with pytest.raises(ValidationError) as exc:
        validate_instance(Instance(np.array([-1.0, 1.0]), dist))
    text = " | ".join(exc.value.problems)
    assert "diagonal" in text and "negative demand" in text and "negative distance" in text


def test_non_square_matrix_rejected():
    with pytest.raises(ValidationError, match="square"):
        validate_instance(Instance(np.ones(2), np.zeros((2, 3))))


def test_network_requires_self_allocation():
    with pytest.raises(ValidationError, match="itself"):
        Network((0, 1), {0: 1, 1: 1, 2: 1})
    with pytest.raises(ValidationError, match="closed"):
        Network((0,), {0: 0, 1: 3})


def test_network_groups_and_cover():
    net = Network((3, 0), {0: 0, 1: 0, 2: 3, 3: 3})
    assert net.facilities == (0, 3)
    assert net.groups() == {0: [0, 1], 3: [2, 3]}
    assert net.covered == (0, 1, 2, 3)


def test_check_network_full_cover(line_instance):
    net = Network((0,), {0: 0, 1: 0})
    check_network(line_instance, net)
    with pytest.raises(ValidationError, match="uncovered"):
        check_network(line_instance, net, full=True)


@pytest.mark.parametrize("kw", [dict(r=0, gamma=1), dict(r=1, gamma=-1), dict(r=1, gamma=1, rho=1),
                                dict(r=1, gamma=1, rho=2), dict(r=1, gamma=1, alpha=1.0),
                                dict(r=1, gamma=1, alpha=-0.1)])
def test_cost_params_invariants(kw):
    with pytest.raises(ValidationError):
        CostParams(**kw)


def test_cost_params_per_node_vectors():
    p = CostParams(r=1, gamma=1, phi=[1, 2, 3], alpha=0.1)
    assert p.phi_vector(3).tolist() == [1, 2, 3]
    assert p.alpha_vector(3).tolist() == [0.1] * 3
    with pytest.raises(ValidationError):
        p.phi_vector(4)


def test_demand_shares_sum_to_one(line_instance):
    s = demand_shares(line_instance, [0, 2, 4])
    assert s.sum() == pytest.approx(1.0)
    assert s.tolist() == pytest.approx([1 / 3] * 3)
