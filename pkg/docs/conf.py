#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Sphinx configuration for the lattice_fbm documentation.
# Build with `make html` from this directory; the package is imported from the parent directory.
import os
import sys

sys.path.insert(0, os.path.abspath('..'))

import lattice_fbm  # noqa: E402

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.mathjax',
    'sphinx.ext.napoleon',
]
autodoc_member_order = 'bysource'

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'lattice-fbm'
copyright = u"2026, lattice_fbm developers"
author = u"lattice_fbm developers"
version = lattice_fbm.__version__
release = lattice_fbm.__version__

exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'sphinx'

html_theme = 'sphinx_rtd_theme'
html_static_path = ['_static']
