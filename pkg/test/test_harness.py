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
from clasp.harness import *
from clasp.clamping import ClampConfig, sequence_aggregate
from clasp.exact import brute_logz
from clasp.exception import CapacityError, InputError
from clasp.gen import GenSpec, generate
from clasp.model import from_binary
from model_fixtures import *

import numpy as np
import pandas as pd
import pytest


@pytest.fixture(scope='module')
def cfg():
    return ClampConfig.from_defaults()


@pytest.fixture(scope='module')
def small_experiment(cfg):
    specs = experiment_specs(GenSpec('grid', n=9, w_range=(0.0, 6.0)), 2)
    return clamp_experiment(specs, ['MF', 'TRW'], ['maxW', 'pseudo-greedy'], 2, cfg)


def test_infer(multilabel, cfg):
    out = infer(multilabel, 'TRW', cfg, exact=True)
    assert out['bound'] == 'upper'
    assert out['exact'] == pytest.approx(brute_logz(multilabel))
    assert out['err'] == pytest.approx(out['log_z'] - out['exact'])
    assert infer(multilabel, 'MF', cfg)['log_z'] == infer(multilabel, 'MF', cfg)['log_z']


def test_sweep_limits(cfg):
    frame = sweep('complete', 5, [12.0], ['MF'], cfg)
    assert list(frame.columns) == SWEEP_COLUMNS
    assert frame['err'].iloc[0] == pytest.approx(-np.log(2), abs=0.02)
    with pytest.raises(CapacityError):
        sweep('complete', 13, [1.0], ['MF'], cfg)


def test_sweep_one_clamp(cfg):
    frame = sweep('complete', 5, [6.0], ['MF', 'Bethe', 'TRW'], cfg)
    assert (frame['err_after_1_clamp'].abs() <= 0.05).all()


def test_sweep_symmetric_cycle(cfg):
    frame = sweep('cycle', 4, [-6.0, -2.0, 2.0, 6.0], ['Bethe'], cfg).set_index('w')
    for w in (2.0, 6.0):
        assert frame.loc[w, 'err'] == pytest.approx(frame.loc[-w, 'err'], abs=1e-6)


def test_clamp_experiment_frames(small_experiment, cfg):
    runs, summary, agree, timing = small_experiment
    assert list(runs.columns) == CLAMP_COLUMNS
    assert len(runs) == 2 * 2 * 2 * 3
    np.testing.assert_allclose(runs['err'], runs['estimate'] - runs['exact'])
    assert {'best', 'worst'} <= set(summary['selector'])
    assert set(agree['heuristic']) == set(cfg.basket)
    assert list(timing.columns) == ['method', 'selector', 'round', 'time_ms']


def test_clamp_experiment_bounds(small_experiment):
    runs = small_experiment.runs
    mf = runs[runs['method'] == 'MF']
    trw = runs[runs['method'] == 'TRW']
    assert (mf['err'] <= 1e-9).all()
    assert (trw['err'] >= -1e-6).all()
    for _, group in mf.groupby(['run', 'selector']):
        values = group.sort_values('round')['estimate'].values
        assert np.all(np.diff(values) >= -1e-9)
    for _, group in trw.groupby(['run', 'selector']):
        values = group.sort_values('round')['estimate'].values
        assert np.all(np.diff(values) <= 1e-6)


def test_round_zero_matches_infer(small_experiment, cfg):
    spec = GenSpec('grid', n=9, w_range=(0.0, 6.0))
    runs = small_experiment.runs
    row = runs[(runs['run'] == 0) & (runs['method'] == 'TRW') & (runs['round'] == 0)]
    expected = infer(generate(spec), 'TRW', cfg)['log_z']
    assert row['estimate'].iloc[0] == pytest.approx(expected, abs=1e-9)


def test_csv_roundtrip(tmp_path, small_experiment):
    path = str(tmp_path / 'clamp.csv')
    write_frame(small_experiment.runs, path, provenance('clamp', runs=2))
    with open(path) as f:
        assert f.readline().startswith('# clasp ')
    again = load_results(path)
    assert list(again.columns) == CLAMP_COLUMNS
    assert len(again) == len(small_experiment.runs)


def test_reproducible(tmp_path, cfg):
    specs = experiment_specs(GenSpec('grid', n=9), 1)
    paths = []
    for k in range(2):
        results = clamp_experiment(specs, ['TRW'], ['maxW'], 1, cfg)
        paths.append(str(tmp_path / f'run{k}.csv'))
        write_frame(results.runs.drop(columns=['time_ms']), paths[-1])
    with open(paths[0]) as a, open(paths[1]) as b:
        assert a.read() == b.read()


def test_load_results_checks_err(tmp_path):
    frame = pd.DataFrame({'run': [0], 'err': [0.5], 'estimate': [1.0], 'exact': [0.0]})
    path = str(tmp_path / 'bad.csv')
    write_frame(frame, path)
    with pytest.raises(InputError):
        load_results(path)


def test_sequence_search_one_step(cfg):
    m = random_binary(6, 4)
    found = sequence_search(m, 'TRW', 1, cfg)
    assert found.gap == pytest.approx(0.0, abs=1e-6)
    assert found.exhaustive == pytest.approx(found.greedy, abs=1e-6)


def test_sequence_search_full(cfg):
    m = from_binary([0.3, -0.2], {(0, 1): -3.0})
    found = sequence_search(m, 'Bethe', 2, cfg)
    assert found.exhaustive == pytest.approx(brute_logz(m), abs=1e-9)
    assert found.greedy == pytest.approx(brute_logz(m), abs=1e-9)


def test_sequence_search_gap(cfg):
    m = random_binary(6, 12)
    found = sequence_search(m, 'TRW', 2, cfg)
    assert found.gap >= -1e-9
    assert found.exhaustive <= found.greedy + 1e-9


def test_sequence_search_mf_ordered(cfg):
    m = random_binary(5, 7)
    found = sequence_search(m, 'MF', 2, cfg)
    assert found.gap >= -1e-9
    both_orders = [sequence_aggregate(m, 'MF', s, cfg)
                   for s in (found.greedy_sequence, found.greedy_sequence[::-1])]
    assert found.exhaustive >= max(both_orders) - 1e-9


def test_sequence_search_limits(cfg):
    m = random_binary(6, 12)
    with pytest.raises(CapacityError):
        sequence_search(m, 'TRW', 4, cfg)
    with pytest.raises(CapacityError):
        sequence_search(m, 'TRW', 3, cfg, max_calls=10)


def test_histogram_empty():
    frame = histogram([])
    assert list(frame.columns) == HIST_COLUMNS
    assert len(frame) == 0


def test_histogram_attractive(cfg):
    specs = experiment_specs(GenSpec('grid', n=9, w_range=(0.0, 2.0)), 3)
    frame = histogram(specs, cfg=cfg)
    assert len(frame) == 3 * 40
    assert (frame.groupby('round')['count'].sum() == 3).all()
    assert frame[frame['bin_lo'] >= 0.2]['count'].sum() == 0


def test_summary_bethe_mixed():
    frame = pd.DataFrame({'run': [0, 1], 'method': ['Bethe'] * 2, 'selector': ['maxW'] * 2,
                          'round': [1, 1], 'err': [0.5, -0.5], 'abs_err': [0.5, 0.5],
                          'time_ms': [1.0, 1.0], 'estimate': [0.5, -0.5], 'exact': [0.0, 0.0]})
    summary = summarize(frame, mixed=True, basket=('maxW',))
    plain = summary[summary['selector'] == 'maxW'].iloc[0]
    assert plain['err'] == 0.0
    assert plain['error'] == 0.5
    assert set(summary['selector']) == {'maxW', 'best', 'worst'}


@pytest.mark.slow
def test_sandwich_suite(cfg):
    from clasp.exact import eliminate_logz
    for seed in range(100):
        family = 'grid' if seed % 2 == 0 else 'erdos'
        m = generate(GenSpec(family, n=9, seed=seed))
        a = eliminate_logz(m)
        mf, bethe, trw = (infer(m, method, cfg)['log_z'] for method in ('MF', 'Bethe', 'TRW'))
        assert mf <= bethe + 1e-6 <= trw + 2e-6
        assert mf - 1e-6 <= a <= trw + 1e-6


@pytest.mark.slow
def test_symmetric_limits(cfg):
    strong = sweep('complete', 5, [12.0], ['MF', 'Bethe', 'TRW'], cfg).set_index('method')
    assert -strong.loc['MF', 'err'] == pytest.approx(np.log(2), abs=0.02)
    assert -strong.loc['Bethe', 'err'] == pytest.approx(np.log(2), abs=0.02)
    assert abs(strong.loc['TRW', 'err']) <= 0.05

    frustrated = sweep('cycle', 3, [-4.0, -8.0], ['MF', 'Bethe', 'TRW'], cfg)
    frustrated = frustrated.set_index(['method', 'w'])['err']
    for method in ('Bethe', 'TRW'):
        assert abs(frustrated[(method, -8.0)]) > abs(frustrated[(method, -4.0)])
    # six ground states on the frustrated triangle
    assert (frustrated['MF'].abs() <= np.log(6) + 0.02).all()


@pytest.mark.slow
def test_bethe_error_skew(cfg):
    specs = experiment_specs(GenSpec('grid', n=9, w_range=(-6.0, 6.0)), 50)
    frame = histogram(specs, rounds=(0,), cfg=cfg)
    positive = frame[frame['bin_lo'] >= 0]['count'].sum()
    assert positive > 0.6 * frame['count'].sum()
