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
from clasp.select import *
from clasp.exception import ExhaustionError, InputError, UnsupportedError
from clasp.model import clamp, flip
from clasp.gen import symmetric_model
from clasp.trw import trw_optimize
from model_fixtures import *

import networkx as nx
import numpy as np
import pandas as pd
import pytest


def series_oracle(model, terms=200):
    '''Closed walks minus back-and-forth excursions, summed term by term'''
    _, index = strip_to_core(model.graph())
    view, _ = model.binary_view()
    w = view.matrix()[np.ix_(index, index)]
    m = mpower_matrix(w)
    s = np.diag(m @ m)
    walks = np.zeros(len(index))
    power = np.eye(len(index))
    for _ in range(terms):
        power = power @ m
        walks += np.diag(power)
    excursions = sum(s ** k for k in range(1, terms + 1))
    return walks - excursions


def test_strip_to_core(lamp):
    _, index = strip_to_core(lamp.graph())
    assert index == (0, 1, 2, 3)
    _, index = strip_to_core(random_tree(10, 1).graph())
    assert index == ()
    _, index = strip_to_core(nx.cycle_graph(6))
    assert index == tuple(range(6))


def test_maxw_path(path_model):
    score = score_maxw(path_model)
    assert score.fallback
    np.testing.assert_allclose(score.scores, [2, 5, 3])
    assert score.best() == 1


def test_maxw_lamp(lamp):
    assert score_maxw(lamp, strip=False).best() == 5
    assert score_maxw(lamp).best() in (0, 1, 2, 3)
    assert np.isneginf(score_maxw(lamp).scores[4:]).all()


def test_mpower_triangle():
    m = symmetric_model(3, 4.0, 'complete')
    score = score_mpower(m)
    np.testing.assert_allclose(score.scores, series_oracle(m), atol=1e-6)
    assert np.all(score.scores > 0)


def test_mpower_acyclic_centre(path_model):
    # the path strips to nothing and is scored whole; all walks from the
    # centre are excursions
    assert score_mpower(path_model).scores[1] == pytest.approx(0.0, abs=1e-12)


def test_mpower_strong_triangle():
    w = {(0, 1): 8.0, (1, 2): 8.0, (0, 2): 8.0, (3, 4): 1.0, (4, 5): 1.0, (3, 5): 1.0}
    m = from_binary([0.0] * 6, w)
    assert score_mpower(m).best() in (0, 1, 2)


@pytest.mark.parametrize('seed', range(8))
def test_mpower_oracle(seed):
    m = random_binary(7, seed)
    score = score_mpower(m)
    _, index = strip_to_core(m.graph())
    if not index:
        pytest.skip('no core')
    np.testing.assert_allclose(score.scores[list(index)], series_oracle(m), atol=1e-6)
    assert np.all(score.scores[list(index)] >= -1e-12)


def test_cycles_barbell(barbell):
    assert score_cycles(barbell, 'frustrated').best() in (5, 6, 7)
    assert select_variable(barbell, 'frustCycles') in (5, 6, 7)
    assert select_variable(barbell, 'maxW') in (0, 1, 2, 3, 4)


def test_cycles_balanced():
    m = symmetric_model(4, -6.0, 'cycle')
    score = score_cycles(m, 'frustrated')
    assert score.fallback
    np.testing.assert_array_equal(score.scores, 0.0)
    assert not score_cycles(m, 'strong').fallback


def test_cycles_triangle(triangle):
    score = score_cycles(triangle, 'frustrated')
    expected = abs(np.log(1 - np.tanh(1.0) ** 3))
    np.testing.assert_allclose(score.scores, expected)
    assert score.best() == 0


def test_cycle_score_saturated():
    saturated = cycle_score([200.0, 200.0, -200.0])
    assert np.isfinite(saturated)
    assert saturated < cycle_score([200.0, 200.0, -4.0]) < 0
    assert cycle_score([200.0, 200.0, 200.0]) == pytest.approx(np.log(2))


def test_cycles_unknown_mode(triangle):
    with pytest.raises(InputError):
        score_cycles(triangle, 'weak')


@pytest.mark.parametrize('seed', range(5))
def test_flip_invariance(seed):
    m = random_binary(7, seed)
    flipped = flip(m, {0, 2, 5})
    for h in ('maxW', 'maxW0', 'Mpower'):
        np.testing.assert_allclose(score(m, h).scores, score(flipped, h).scores)
    assert score(m, 'frustCycles').best() == score(flipped, 'frustCycles').best()
    np.testing.assert_allclose(score(m, 'strongCycles').scores,
                               score(flipped, 'strongCycles').scores)


def test_tre_adjust(lamp):
    base = score_maxw(lamp, strip=False)
    entropies = {name: np.log(2) for name in lamp.var_names}
    assert tre_adjust(base, lamp, entropies).best() == base.best()
    entropies[5] = 0.0
    adjusted = tre_adjust(base, lamp, entropies)
    assert adjusted.scores[5] == 0.0
    assert adjusted.heuristic == 'TRE-maxW0'
    stripped = tre_adjust(score_maxw(lamp), lamp, entropies)
    assert np.isneginf(stripped.scores[4:]).all()
    with pytest.raises(InputError):
        tre_adjust(base, lamp, {0: 1.0})


def test_tre_avoids_clamped_cluster(barbell):
    child, _ = clamp(barbell, 0, 0)
    trw = trw_optimize(child)
    chosen = pick(child, 'TRE-maxW', SelectionContext(entropies=trw.singleton_entropies(child)))
    assert chosen.name in (5, 6, 7)


def test_select_lamp(lamp):
    assert select_variable(lamp, 'maxW') in (0, 1, 2, 3)
    assert select_variable(lamp, 'maxW0') == 5


def test_select_context(lamp):
    context = SelectionContext(exclude=frozenset([5]))
    assert select_variable(lamp, 'maxW0', context) != 5
    with pytest.raises(ExhaustionError):
        select_variable(lamp, 'maxW', SelectionContext(exclude=frozenset(range(10))))


def test_select_errors(lamp, multilabel):
    with pytest.raises(InputError):
        select_variable(lamp, 'minW')
    with pytest.raises(InputError):
        select_variable(lamp, 'TRE-maxW')
    with pytest.raises(UnsupportedError):
        select_variable(multilabel, 'maxW')


def test_score_frame(lamp):
    trw = trw_optimize(lamp)
    frame = score_frame(lamp, ['maxW', 'TRE-Mpower'], trw)
    assert list(frame.columns) == ['heuristic', 'var', 'score']
    assert len(frame) == 20


def test_agreement():
    picks = pd.DataFrame({'run': [0, 0, 1, 1, 0, 1],
                          'round': [1, 1, 1, 1, 1, 1],
                          'heuristic': ['pseudo-greedy', 'maxW'] * 2 + ['Mpower', 'Mpower'],
                          'var': [3, 3, 2, 4, 3, 2]})
    out = agreement(picks).set_index('heuristic')['agreement']
    assert out['maxW'] == 0.5
    assert out['Mpower'] == 1.0
