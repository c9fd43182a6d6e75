#!/usr/bin/env python
# Copyright 2026 clasp developers
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
from clasp.model import *
from clasp.exact import brute_logz
from clasp.exception import InputError, UnsupportedError
from model_fixtures import *

import numpy as np
import pytest
from scipy.special import logsumexp


def test_validation():
    with pytest.raises(InputError):
        PairwiseModel([1, 2], [[0.0], [0.0, 0.0]])
    with pytest.raises(InputError):
        PairwiseModel([2], [[0.0, 0.0, 0.0]])
    with pytest.raises(InputError):
        PairwiseModel([2, 2], [[0, 0], [0, 0]], {(0, 0): np.zeros((2, 2))})
    with pytest.raises(InputError):
        PairwiseModel([2, 2], [[0, 0], [0, 0]], {(0, 1): np.zeros((2, 2)),
                                                 (1, 0): np.zeros((2, 2))})
    with pytest.raises(InputError):
        PairwiseModel([2, 2], [[0, np.inf], [0, 0]])
    with pytest.raises(InputError):
        PairwiseModel([2, 2], [[0, 0], [0, 0]], var_names=['a', 'a'])


def test_orientation():
    table = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    m = PairwiseModel([3, 2], [np.zeros(3), np.zeros(2)], {(1, 0): table})
    assert m.edges == ((0, 1),)
    np.testing.assert_array_equal(m.pairwise[0], table.T)
    np.testing.assert_array_equal(m.edge_table(1, 0), table)
    with pytest.raises(ValueError):
        m.theta[0][0] = 1.0


def test_energy(edge_model):
    assert energy(edge_model, (0, 0)) == -1.0
    assert energy(edge_model, (1, 1)) == -1.0
    assert energy(edge_model, (0, 1)) == 0
    with pytest.raises(InputError):
        energy(edge_model, (0, 2))


def test_binary_view(multilabel):
    m = random_binary(6, 1)
    view, const = m.binary_view()
    again = from_binary(view.theta, view.as_dict())
    assert brute_logz(m) == pytest.approx(brute_logz(again) + const, abs=1e-12)
    with pytest.raises(UnsupportedError):
        multilabel.binary_view()


def test_clamp_sums_to_z(multilabel):
    for var in range(multilabel.n):
        parts = []
        for label in range(multilabel.labels[var]):
            child, cmap = clamp(multilabel, var, label)
            assert child.n == multilabel.n - 1
            assert multilabel.var_names[var] not in child.var_names
            parts.append(brute_logz(child) + cmap.log_constant)
        assert logsumexp(parts) == pytest.approx(brute_logz(multilabel), abs=1e-10)


def test_clamp_many_composes():
    m = random_binary(5, 2)
    child, cmap = clamp_many(m, [(3, 1), (0, 0)])
    assert child.var_names == (1, 2, 4)
    assert cmap.assignments == ((3, 1), (0, 0))
    assert cmap.index_map == (1, 2, 4)
    step1, c1 = clamp(m, 3, 1)
    step2, c2 = clamp(step1, 0, 0)
    assert step2 == child
    assert cmap.log_constant == pytest.approx(c1.log_constant + c2.log_constant)


def test_delete_variables(path_model):
    m = delete_variables(path_model, [1])
    assert m.var_names == (0, 2)
    assert m.edges == ()


def test_flip_keeps_logz():
    m = random_binary(6, 4)
    flipped = flip(m, {0, 3})
    assert brute_logz(flipped) == pytest.approx(brute_logz(m), abs=1e-12)
    view, _ = m.binary_view()
    fview, _ = flipped.binary_view()
    for (i, j), w in view.as_dict().items():
        sign = -1 if (i in {0, 3}) != (j in {0, 3}) else 1
        assert fview.weight(i, j) == pytest.approx(sign * w)


def test_balance(triangle):
    cycle = symmetric_model(4, -6.0, 'cycle')
    cert = balance_certificate(cycle)
    assert isinstance(cert, Balanced)
    assert is_attractive(flip(cycle, cert.subset))

    cert = balance_certificate(triangle)
    assert isinstance(cert, Frustrated)
    assert sorted(cert.cycle) == [0, 1, 2]
    assert not is_balanced(triangle)
    assert not is_balanced(symmetric_model(3, -1.0, 'cycle'))


def test_balance_weight_floor():
    m = from_binary([0.0] * 3, {(0, 1): 4.0, (1, 2): 4.0, (0, 2): -0.01})
    assert not is_balanced(m)
    assert is_balanced(m, weight_floor=0.1)


def test_graph(lamp):
    g = lamp.graph()
    assert g.number_of_nodes() == 10
    assert g.number_of_edges() == 12
    assert lamp.degree(5) == 5
