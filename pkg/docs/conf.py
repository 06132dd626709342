# -*- coding: utf-8 -*-
#
# swa-lib documentation build configuration file
#

import sys
import os

sys.path.insert(0, os.path.abspath('..'))

extensions = ["sphinx.ext.autodoc"]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = 'swa-lib'
copyright = '2026, swa-lib developers'
author = 'swa-lib developers'

version = '0.1'
release = '0.1.0'

language = None
exclude_patterns = ['_build']
pygments_style = 'sphinx'
todo_include_todos = False

html_theme = 'pyramid'
html_static_path = ['_static']
htmlhelp_basename = 'swa-libdoc'

latex_elements = {
}
latex_documents = [
  (master_doc, 'swa-lib.tex', 'swa-lib Documentation',
   author, 'manual'),
]
man_pages = [
    (master_doc, 'swa-lib', 'swa-lib Documentation',
     [author], 1)
]
texinfo_documents = [
  (master_doc, 'swa-lib', 'swa-lib Documentation',
   author, 'swa-lib', 'Data-free quality audits of trained neural networks.',
   'Miscellaneous'),
]
