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
from clasp.clamping import *
from clasp.exact import brute_logz, exact_marginal
from clasp.exception import ConfigError, InputError
from clasp.gen import symmetric_model
from clasp.result import entropy
from model_fixtures import *

import numpy as np
import pytest

METHODS = ['MF', 'Bethe', 'TRW', 'Exact']


@pytest.fixture(scope='module')
def cfg():
    return ClampConfig.from_defaults()


def test_exact_aggregate(multilabel, cfg):
    a = brute_logz(multilabel)
    for var in range(multilabel.n):
        result = clamp_sum(multilabel, 'Exact', var, cfg)
        assert result.aggregate == pytest.approx(a, abs=1e-10)
        np.testing.assert_allclose(result.p_tilde, exact_marginal(multilabel, var), atol=1e-9)


def test_mean_field_two_variables(cfg):
    m = from_binary([0.0, 0.0], {(0, 1): 6.0})
    root = run_method(m, 'MF', cfg)
    result = clamp_sum(m, 'MF', 0, cfg, parent=root)
    assert root.log_z - 1e-9 <= result.aggregate <= brute_logz(m) + 1e-9


def test_trw_frustrated_triangle(cfg):
    m = symmetric_model(3, -8.0, 'cycle')
    root = run_method(m, 'TRW', cfg)
    result = clamp_sum(m, 'TRW', 0, cfg, parent=root)
    assert brute_logz(m) - 1e-6 <= result.aggregate <= root.log_z + 1e-6


@pytest.mark.parametrize('method', ['MF', 'Bethe', 'TRW'])
def test_aggregation_identity(method, multilabel, cfg):
    result = clamp_sum(multilabel, method, 1, cfg)
    p = result.p_tilde
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    values = np.array([c.log_z for c in result.children])
    assert result.aggregate == pytest.approx(float(p @ values) + entropy(p), abs=1e-10)


@pytest.mark.parametrize('seed', range(5))
def test_clamping_tightens(seed, cfg):
    m = random_multilabel(6, seed)
    a = brute_logz(m)
    mf = run_method(m, 'MF', cfg)
    trw = run_method(m, 'TRW', cfg)
    for var in range(m.n):
        assert mf.log_z - 1e-9 <= clamp_sum(m, 'MF', var, cfg, mf).aggregate <= a + 1e-9
        assert a - 1e-6 <= clamp_sum(m, 'TRW', var, cfg, trw).aggregate <= trw.log_z + 1e-6


@pytest.mark.parametrize('method', METHODS)
def test_exhaustive_sequence(method, cfg):
    m = random_binary(5, 7)
    report = clamp_sequence(m, method, 'maxW0', m.n, cfg)
    assert report.rounds[-1].aggregate == pytest.approx(brute_logz(m), abs=1e-9)
    assert sorted(r.var for r in report.rounds) == list(range(m.n))


def test_monotone_curves(cfg):
    m = random_binary(7, 3)
    mf = clamp_sequence(m, 'MF', 'maxW', 3, cfg).curve()
    trw = clamp_sequence(m, 'TRW', 'maxW', 3, cfg).curve()
    assert all(b >= a - 1e-9 for a, b in zip(mf, mf[1:]))
    assert all(b <= a + 1e-6 for a, b in zip(trw, trw[1:]))


def test_fixed_sequence(cfg):
    m = random_binary(6, 2)
    report = clamp_sequence(m, 'TRW', (4, 1), 2, cfg)
    assert [r.name for r in report.rounds] == [4, 1]
    assert report.rounds[-1].aggregate == pytest.approx(sequence_aggregate(m, 'TRW', (4, 1), cfg))
    assert len(report.rounds[-1].branches) == 4
    np.testing.assert_allclose(report.rounds[0].p_tilde.sum(), 1.0)


def test_fallbacks(multilabel, path_model, cfg):
    report = clamp_sequence(multilabel, 'MF', 'maxW', 2, cfg)
    assert report.rounds[0].fallback == 'first'
    assert report.rounds[0].var == 0
    report = clamp_sequence(path_model, 'MF', 'maxW', 1, cfg)
    assert report.rounds[0].fallback == 'unstripped'
    assert report.rounds[0].var == 1


def test_sequence_errors(edge_model, cfg):
    with pytest.raises(InputError):
        clamp_sequence(edge_model, 'MF', 'maxW', 3, cfg)
    with pytest.raises(InputError):
        clamp_sequence(edge_model, 'BP', 'maxW', 1, cfg)
    with pytest.raises(InputError):
        clamp_sequence(edge_model, 'MF', 'bestW', 1, cfg)
    with pytest.raises(InputError):
        clamp_sequence(edge_model, 'MF', (0, 0), 2, cfg)


def test_report_frame(cfg):
    m = random_binary(5, 1)
    report = clamp_sequence(m, 'TRW', 'pseudo-greedy', 2, cfg, exact=brute_logz(m))
    frame = report.to_frame()
    assert list(frame.columns) == ClampReport.COLUMNS
    assert len(frame) == 1 + 2 + 4
    assert (frame['exact_logz'] == report.exact).all()
    assert set(report.rounds[0].picks) == set(cfg.basket) | {'pseudo-greedy'}


def test_greedy_tie_break(cfg):
    m = from_binary([0.0, 0.0], {(0, 1): 3.0})
    var, aggregate = greedy_select(m, 'Exact', cfg)
    assert var == 0
    assert aggregate == pytest.approx(brute_logz(m))


def test_greedy_barbell(barbell, cfg):
    var, _ = greedy_select(barbell, 'TRW', cfg)
    assert var == 5


@pytest.mark.parametrize('seed', range(3))
def test_greedy_dominates(seed, cfg):
    m = random_binary(8, seed, w_range=(0.0, 6.0))
    _, best = greedy_select(m, 'MF', cfg)
    for h in cfg.basket:
        _, aggregate, _ = pseudo_greedy_select(m, 'MF', [h], cfg)
        assert best >= aggregate - 1e-9


def test_pseudo_greedy(lamp, cfg):
    var, _, table = pseudo_greedy_select(lamp, 'TRW', ['maxW'], cfg)
    assert var in (0, 1, 2, 3)
    assert list(table['heuristic']) == ['maxW']
    var, aggregate, table = pseudo_greedy_select(lamp, 'MF', ['maxW', 'maxW0'], cfg)
    assert len(table) == 2
    _, greedy = greedy_select(lamp, 'MF', cfg)
    assert greedy >= aggregate - 1e-9


def test_bethe_proxy(triangle):
    for proxy in ('trw', 'gap', 'mf'):
        cfg = ClampConfig.from_defaults(proxy=proxy)
        var, _ = greedy_select(triangle, 'Bethe', cfg)
        assert var in (0, 1, 2)
    with pytest.raises(ConfigError):
        ClampConfig.from_defaults(proxy='bethe')


def test_parallel_branches(cfg):
    m = random_binary(6, 9)
    serial = clamp_sequence(m, 'TRW', 'maxW0', 3, cfg)
    threaded = clamp_sequence(m, 'TRW', 'maxW0', 3, ClampConfig.from_defaults(jobs=4))
    assert serial.curve() == threaded.curve()


def test_run_method_unknown(edge_model):
    with pytest.raises(InputError):
        run_method(edge_model, 'LBP')


@pytest.mark.slow
@pytest.mark.parametrize('seed', range(50))
def test_trw_clamp_bounds_suite(seed, cfg):
    m = random_multilabel(8, seed)
    a = brute_logz(m)
    root = run_method(m, 'TRW', cfg)
    for var in range(m.n):
        clamped = clamp_sum(m, 'TRW', var, cfg, parent=root).aggregate
        assert a - 1e-6 <= clamped <= root.log_z + 1e-6


@pytest.mark.slow
@pytest.mark.parametrize('seed', range(50))
def test_mf_clamp_bounds_suite(seed, cfg):
    m = random_multilabel(8, seed)
    a = brute_logz(m)
    root = run_method(m, 'MF', cfg)
    for var in range(m.n):
        clamped = clamp_sum(m, 'MF', var, cfg, parent=root).aggregate
        assert root.log_z - 1e-9 <= clamped <= a + 1e-9


@pytest.mark.slow
def test_bethe_attractive_clamping_suite(cfg):
    from clasp.gen import GenSpec, generate
    violations = 0
    for seed in range(50):
        family = 'grid' if seed % 2 == 0 else 'erdos'
        m = generate(GenSpec(family, n=9, w_range=(0.0, 6.0), seed=seed))
        a = brute_logz(m)
        root = run_method(m, 'Bethe', cfg)
        _, clamped, _ = pseudo_greedy_select(m, 'Bethe', cfg=cfg)
        assert clamped <= a + 1e-6
        if root.log_z > clamped + 1e-6:
            violations += 1
    assert violations < 0.05 * 50
