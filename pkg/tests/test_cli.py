import json

import numpy as np
import pandas as pd
import pytest

from recbench.cli import build_parser, main
from recbench.dataset import RatingsDataset, load_movielens, save_ratings


@pytest.fixture
def data(tmp_path):
    rng = np.random.default_rng(0)
    n_users, n_items, n = 30, 20, 300
    cells = rng.choice(n_users * n_items, n, replace=False)
    users, items = np.divmod(cells, n_items)
    values = rng.integers(1, 11, size=n) / 2
    path = tmp_path / 'ratings.csv'
    save_ratings(RatingsDataset(users, items, values), str(path))
    return str(path)


def test_run(tmp_path, data, capsys):
    out = str(tmp_path / 'r.csv')
    code = main(['run', '--algo', 'svd', '--data', data, '--folds', '3',
                 '--seed', '42', '--set', 'factors=3', '--set', 'epochs=2',
                 '--out', out])
    assert code == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith('algo=svd n=300 rmse=')
    assert 'mae=' in line and 'secs=' in line
    frame = pd.read_csv(out)
    assert frame['factors'].tolist() == [3]


def test_run_knn_similarity(data, capsys):
    assert main(['run', '--algo', 'knn_user', '--similarity', 'msd',
                 '--data', data, '--folds', '2']) == 0
    assert 'rmse=' in capsys.readouterr().out


def test_run_is_reproducible(tmp_path, data):
    outputs = []
    for n in range(2):
        out = tmp_path / ('r%d.json' % n)
        assert main(['run', '--algo', 'baseline', '--data', data,
                     '--seed', '7', '--no-timing', '--out', str(out)]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_run_usage_errors(data, capsys):
    assert main(['run', '--algo', 'svd']) == 1
    assert 'usage:' in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(['run', '--algo', 'svd', '--data', data, '--bogus'])
    assert exc.value.code == 1
    assert main(['run', '--algo', 'svd', '--data', data,
                 '--set', 'depth=3']) == 1
    assert "'depth'" in capsys.readouterr().err
    assert main(['run', '--algo', 'svd', '--data', 'missing.csv']) == 1


def test_run_training_failure(data, capsys):
    code = main(['run', '--algo', 'svd', '--data', data, '--folds', '2',
                 '--set', 'lr_gamma=100', '--set', 'epochs=50'])
    assert code == 2
    assert 'fold 0' in capsys.readouterr().err


def test_run_from_config(tmp_path, data, capsys):
    config = tmp_path / 'run.ini'
    config.write_text('[dataset]\npath = %s\n[folds]\nk = 2\n'
                      '[algorithm]\nkind = baseline\ndamping = 2\n' % data)
    assert main(['run', '--config', str(config)]) == 0
    assert capsys.readouterr().out.startswith('algo=baseline n=300')


def test_grid(tmp_path, data, capsys):
    grid = tmp_path / 'grid.ini'
    grid.write_text('[grid]\nfactors = 2, 4\n[search]\nobjective = rmse\n')
    out = str(tmp_path / 'grid.csv')
    code = main(['grid', '--grid', str(grid), '--algo', 'svd', '--data',
                 data, '--folds', '2', '--set', 'epochs=2', '--out', out])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3
    assert lines[-1].startswith('best: ')
    assert len(pd.read_csv(out)) == 2


def test_grid_errors(tmp_path, data, capsys):
    grid = tmp_path / 'grid.ini'
    grid.write_text('[grid]\nfactors =\n')
    assert main(['grid', '--grid', str(grid), '--algo', 'svd', '--data',
                 data]) == 1
    assert "'factors'" in capsys.readouterr().err


def test_subsample(tmp_path, data, capsys):
    out = str(tmp_path / 'small.csv')
    assert main(['subsample', '--data', data, '--size', '50', '--seed', '3',
                 '--out', out]) == 0
    assert len(load_movielens(out)) == 50
    assert main(['subsample', '--data', data, '--size', '5000',
                 '--out', out]) == 1


def test_replicate(tmp_path, data, capsys):
    out = str(tmp_path / 'table6.csv')
    assert main(['replicate', '--table', '6', '--data', data, '--folds', '2',
                 '--out', out]) == 0
    frame = pd.read_csv(out)
    assert frame['similarity'].tolist() == ['cosine', 'msd', 'pearson',
                                            'pearson_baseline']
    assert main(['replicate', '--table', '13', '--data', data]) == 1
    assert 'not a run set' in capsys.readouterr().err


def test_compare(tmp_path, data, capsys):
    out = tmp_path / 'r.json'
    assert main(['run', '--algo', 'baseline', '--data', data,
                 '--out', str(out)]) == 0
    results = json.loads(out.read_text())
    results[0]['algo'] = 'svd'
    results[0]['data_size'] = 100000
    out.write_text(json.dumps(results))
    capsys.readouterr()
    assert main(['compare', str(out)]) == 0
    assert 'benchmark=0.9300' in capsys.readouterr().out


def test_help_lists_defaults(capsys):
    parser = build_parser()
    with pytest.raises(SystemExit) as exc:
        parser.parse_args(['run', '--help'])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for flag in ('--algo', '--data', '--format', '--folds', '--seed',
                 '--out', '--threads', '--no-timing', '--set'):
        assert flag in text


def test_compare_help_lists_defaults(capsys):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(['compare', '--help'])
    assert exc.value.code == 0
    assert '(default: 0)' in capsys.readouterr().out


def test_compare_rejects_malformed_results(tmp_path, capsys):
    bad = tmp_path / 'bad.json'
    bad.write_text('{"algo": ')
    assert main(['compare', str(bad)]) == 1
    assert 'not a json file' in capsys.readouterr().err
    bad.write_text('[{"algo": "svd"}]')
    assert main(['compare', str(bad)]) == 1
    assert 'not a results file' in capsys.readouterr().err


def test_unexpected_errors_are_runtime_failures(data, capsys, monkeypatch):
    def fail(config):
        raise ValueError('boom')

    monkeypatch.setattr('recbench.cli.run_experiment', fail)
    assert main(['run', '--algo', 'baseline', '--data', data]) == 2
    assert 'failed: boom' in capsys.readouterr().err
