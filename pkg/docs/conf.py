# -*- coding: utf-8 -*-
#
# recbench documentation build configuration file
#
# This file is execfile()d with the current directory set to its containing
# dir.

import sys, os

if os.environ.get('READTHEDOCS', None) == 'True':
    html_theme = 'default'
else:
    html_theme = 'nature'

# If extensions (or modules to document with autodoc) are in another directory,
# add these directories to sys.path here.
sys.path.insert(0, os.path.abspath('..'))

# -- General configuration -----------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.autosummary',
    'sphinx.ext.intersphinx',
    'sphinx.ext.napoleon'
]

autosummary_generate = True

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'recbench'
copyright = u'2026, authors of recbench'

exclude_trees = ['_build']
pygments_style = 'sphinx'

# -- Options for HTML output ---------------------------------------------------

html_static_path = ['_static']
htmlhelp_basename = 'recbenchdoc'

# -- Options for LaTeX output --------------------------------------------------

latex_documents = [
  ('index', 'recbench.tex', u'recbench Documentation',
   u'recbench authors', 'manual'),
]

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable', None),
}
