'''
.. module:: recbench.serialize
    :synopsis: Versioned model dumps

Fitted models are written as uncompressed numpy ``.npz`` archives. The
archive holds one array per parameter plus a ``header`` entry, a JSON
document with the model kind, the dump format version, the rating scale and
the scalar fields of the model. Arrays are stored at full float64 precision
so a dump reloads bit-for-bit.

A reader accepts any dump whose format version has the same major number as
its own.
'''
import json

import numpy as np
from packaging.version import Version

from .baselines import BaselineModel
from .bench_error import ValidationError
from .constants import MODEL_FORMAT_VERSION
from .dataset import RatingScale
from .factorization import MfModel, SvdppModel
from .neural import AutoRecModel, RbmModel

import logging
log = logging.getLogger(__name__)


def _ids(ids):
    ids = np.asarray(ids)
    if ids.dtype == object:
        return ids.astype(str)
    return ids


def _model_arrays(model):
    if isinstance(model, MfModel):
        arrays = {'P': model.P, 'Q': model.Q,
                  'user_ids': _ids(model.user_ids),
                  'item_ids': _ids(model.item_ids)}
        if model.baseline is not None:
            arrays['b_user'] = model.baseline.b_user
            arrays['b_item'] = model.baseline.b_item
        if isinstance(model, SvdppModel):
            arrays['Y'] = model.Y
            arrays['Z'] = model.Z
            return 'svdpp', arrays
        return 'mf', arrays
    elif isinstance(model, RbmModel):
        return 'rbm', {'W': model.W, 'vb': model.vb, 'hb': model.hb,
                       'item_ids': _ids(model.item_ids),
                       'history': np.asarray(model.history, dtype=float)}
    elif isinstance(model, AutoRecModel):
        return 'autoencoder', {'V': model.V, 'W': model.W,
                               'mu_h': model.mu_h, 'b_v': model.b_v,
                               'item_ids': _ids(model.item_ids),
                               'history': np.asarray(model.history,
                                                     dtype=float)}
    raise ValidationError('save_model', 'cannot serialize %s'
                          % type(model).__name__)


def save_model(model, path):
    '''
    Write `model` to `path` (an ``.npz`` archive)
    '''
    kind, arrays = _model_arrays(model)
    scale = model.scale
    header = {
        'kind': kind,
        'format_version': MODEL_FORMAT_VERSION,
        'scale': [scale.min, scale.max, scale.step],
        'mu': float(model.mu),
    }
    if kind in ('mf', 'svdpp'):
        header['biased'] = model.baseline is not None
        if model.baseline is not None:
            header['baseline_mu'] = float(model.baseline.mu)
            header['damping'] = float(model.baseline.damping)
    else:
        header['K'] = int(model.K)
    with open(path, 'wb') as fh:
        np.savez(fh, header=np.array(json.dumps(header)), **arrays)
    log.info('Saved %s model to %s', kind, path)


def load_model(path):
    '''
    Read a model written by :func:`save_model`

    Raises
    ------
    ValidationError
        If the dump's major format version differs from this reader's.
    '''
    with np.load(path, allow_pickle=False) as archive:
        arrays = {k: archive[k] for k in archive.files}
    header = json.loads(str(arrays.pop('header')))
    found = Version(header['format_version'])
    if found.major != Version(MODEL_FORMAT_VERSION).major:
        raise ValidationError(path, 'unsupported model format %s (reader '
                              'supports %s)' % (found, MODEL_FORMAT_VERSION))

    kind = header['kind']
    scale = RatingScale(*header['scale'])
    mu = header['mu']
    log.info('Loading %s model (format %s) from %s', kind, found, path)
    if kind in ('mf', 'svdpp'):
        baseline = None
        if header['biased']:
            baseline = BaselineModel(header['baseline_mu'], arrays['b_user'],
                                     arrays['b_item'], header['damping'])
        args = (arrays['P'], arrays['Q'], baseline, mu, scale,
                arrays['user_ids'], arrays['item_ids'])
        if kind == 'svdpp':
            return SvdppModel(*args, arrays['Y'], arrays['Z'])
        return MfModel(*args)
    elif kind == 'rbm':
        W = arrays['W']
        return RbmModel(W, arrays['vb'], arrays['hb'], header['K'],
                        W.shape[2], scale, mu, arrays['item_ids'],
                        arrays['history'].tolist())
    elif kind == 'autoencoder':
        return AutoRecModel(arrays['V'], arrays['W'], arrays['mu_h'],
                            arrays['b_v'], header['K'], scale, mu,
                            arrays['item_ids'], arrays['history'].tolist())
    raise ValidationError(path, 'unknown model kind %r' % kind)
