'''
.. module:: recbench.presets
    :synopsis: Row configurations of the published result tables

Each table is a plain dictionary so the replicated rows can be audited in one
place. ``rows`` lists labelled hyperparameter sets that are each run as one
experiment. Grid tables instead carry a ``grid`` and an ``untuned`` parameter
set. The untuned point is one of the grid's combinations, so the tuned row
can never score worse than the untuned row on the same folds.

``reference`` holds the published RMSE and MAE of each row at 100K ratings.
'''

TABLES = {
    6: {
        'title': 'KNN (k=40) user-user collaborative filtering',
        'kind': 'knn_user',
        'rows': [
            ('cosine', {'similarity': 'cosine', 'k': 40, 'n': 10}),
            ('msd', {'similarity': 'msd', 'k': 40, 'n': 10}),
            ('pearson', {'similarity': 'pearson', 'k': 40, 'n': 10}),
            ('pearson_baseline', {'similarity': 'pearson_baseline',
                                  'k': 40, 'n': 10}),
        ],
        'reference': {},
    },
    7: {
        'title': 'Biased matrix factorization by alternating least squares',
        'kind': 'mf_als',
        'rows': [
            ('f15_e100', {'factors': 15, 'epochs': 100}),
            ('f20_e200', {'factors': 20, 'epochs': 200}),
        ],
        'reference': {
            'f15_e100': (0.9523, 0.7351),
            'f20_e200': (0.9540, 0.7392),
        },
    },
    8: {
        'title': 'SVD and SVD++ without grid search',
        'rows': [
            ('svd', {}),
            ('svdpp', {}),
        ],
        'kinds': {'svd': 'svd', 'svdpp': 'svdpp'},
        'reference': {
            'svd': (0.9039, 0.6984),
            'svdpp': (0.8943, 0.6887),
        },
    },
    9: {
        'title': 'SVD with grid search',
        'kind': 'svd',
        'grid': {
            'epochs': [20],
            'factors': [50, 100],
            'lr_gamma': [0.005],
        },
        'untuned': {'epochs': 20, 'factors': 100, 'lr_gamma': 0.005},
        'reference': {
            'tuned': (0.9002, 0.6958),
            'untuned': (0.9033, 0.6992),
        },
    },
    10: {
        'title': 'Restricted Boltzmann machine without grid search',
        'kind': 'rbm',
        'rows': [
            ('lr0.001_b100', {'epochs': 20, 'hidden': 50, 'lr': 0.001,
                              'batch_size': 100}),
            ('lr0.1_b100', {'epochs': 20, 'hidden': 50, 'lr': 0.1,
                            'batch_size': 100}),
            ('lr0.1_b200', {'epochs': 20, 'hidden': 50, 'lr': 0.1,
                            'batch_size': 200}),
        ],
        'reference': {
            'lr0.001_b100': (1.3257, 1.1337),
        },
    },
    11: {
        'title': 'Restricted Boltzmann machine with grid search',
        'kind': 'rbm',
        'grid': {
            'epochs': [20],
            'hidden': [20, 50],
            'lr': [0.001, 0.1],
            'batch_size': [100, 200],
        },
        'untuned': {'epochs': 20, 'hidden': 50, 'lr': 0.1,
                    'batch_size': 100},
        'reference': {
            'tuned': (1.3250, 1.1332),
        },
    },
    12: {
        'title': 'Autoencoder',
        'kind': 'autoencoder',
        'rows': [
            ('e100_h100_lr0.01', {'epochs': 100, 'hidden': 100, 'lr': 0.01,
                                  'batch_size': 200}),
            ('e50_h50_lr0.1', {'epochs': 50, 'hidden': 50, 'lr': 0.1,
                               'batch_size': 200}),
            ('e20_h20_lr0.1', {'epochs': 20, 'hidden': 20, 'lr': 0.1,
                               'batch_size': 200}),
            ('e200_h100_lr0.1', {'epochs': 200, 'hidden': 100, 'lr': 0.1,
                                 'batch_size': 200}),
            ('e20_h50_lr0.1', {'epochs': 20, 'hidden': 50, 'lr': 0.1,
                               'batch_size': 200}),
        ],
        'reference': {
            'e200_h100_lr0.1': (2.0367, 1.6719),
            'e20_h20_lr0.1': (2.0464, 1.6994),
            'e20_h50_lr0.1': (2.0792, 1.7307),
        },
    },
}


def table_kind(table, label):
    '''
    Algorithm kind of a row. Table 8 mixes two kinds.
    '''
    if 'kinds' in table:
        return table['kinds'][label]
    return table['kind']
